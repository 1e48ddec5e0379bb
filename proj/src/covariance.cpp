#include "delayou/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "delayou/dynamics.hpp"
#include "delayou/quadrature.hpp"

namespace delayou {

Matrix ResponsePath::at(double r) const {
    if (values.empty()) throw std::domain_error("empty response path");
    double u = r / dt;
    if (u <= 0.0) return values.front();
    std::size_t j = std::size_t(u);
    if (j + 1 >= values.size()) return values.back();
    double w = u - double(j);
    return (1.0 - w) * values[j] + w * values[j + 1];
}

ResponsePath response_path(const DelaySystem& sys, const PastFunctional& pf, double t_max,
                           double dt) {
    if (t_max < 0.0) throw std::domain_error("t_max must be nonnegative");
    ResponsePath mp;
    mp.dt = aligned_step(sys.d, dt);
    const int steps = std::max(1, int(std::ceil(t_max / mp.dt - 1e-9)));
    const int cells = int(std::llround(sys.d / mp.dt));
    mp.values.assign(std::size_t(steps) + 1, Matrix::Zero(sys.n, sys.n));
    for (int j = 0; j < sys.n; ++j) {
        Segment x = Segment::constant(sys.n, sys.d, cells, sys.sigma * Vector::Unit(sys.n, j),
                                      Vector::Zero(sys.n));
        PathState ps(sys, x, mp.dt);
        // Reduce the exact initial segment: the kick sits in the head only and
        // the tail's left limit at 0^- is still zero.
        mp.values[0].col(j) = apply_reduction(pf, x);
        for (int k = 1; k <= steps; ++k) {
            ps.step_deterministic();
            mp.values[std::size_t(k)].col(j) = ps.reduce(pf);
        }
    }
    return mp;
}

Matrix response_matrix(const DelaySystem& sys, const PastFunctional& pf, double s, double dt) {
    return response_path(sys, pf, s, dt).at(s);
}

double CovMatrix::lambda_min() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(value, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double CovMatrix::lambda_max() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(value, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Matrix CovMatrix::sqrt() const { return psd_sqrt(value); }

Matrix CovMatrix::inv_sqrt(double floor) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (value + value.transpose()));
    Vector ev = es.eigenvalues();
    Vector inv(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
        double lam = std::max(ev[i], floor);
        inv[i] = 1.0 / std::sqrt(lam);
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Integral of m(r) m(r)^T over a stretch where m is linear: the integrand is
// quadratic, so Simpson's rule is exact.
Matrix response_cell_integral(const Matrix& ma, const Matrix& mb, double h) {
    Matrix mid = 0.5 * (ma + mb);
    return (h / 6.0) *
           (ma * ma.transpose() + 4.0 * (mid * mid.transpose()) + mb * mb.transpose());
}

} // namespace

CovMatrix covariance_from_path(const ResponsePath& mp, double s, double t, int quad_nodes) {
    if (!(t > s)) throw std::domain_error("covariance window needs t > s");
    if (s < 0.0) throw std::domain_error("covariance window needs s >= 0");
    if (t > mp.t_max() + 1e-9) throw std::domain_error("covariance window exceeds response path");
    const int n = int(mp.values.front().rows());
    const double h = mp.dt;
    // The response is piecewise linear on its own grid; integrate the
    // interpolant exactly cell by cell so that windows are exactly additive.
    Matrix acc = Matrix::Zero(n, n);
    const long k0 = long(std::floor(s / h + 1e-9));
    const long k1 = long(std::ceil(t / h - 1e-9));
    for (long k = k0; k < k1; ++k) {
        double a = std::max(s, double(k) * h);
        double b = std::min(t, double(k + 1) * h);
        if (b <= a) continue;
        acc += response_cell_integral(mp.at(a), mp.at(b), b - a);
    }
    CovMatrix out;
    out.value = 0.5 * (acc + acc.transpose());
    out.s = s;
    out.t = t;
    out.quad_nodes = quad_nodes;
    return out;
}

CovMatrix covariance(const DelaySystem& sys, const PastFunctional& pf, double s, double t,
                     int quad_nodes, double dt) {
    if (!(t > s)) throw std::domain_error("covariance window needs t > s");
    return covariance_from_path(response_path(sys, pf, t, dt), s, t, quad_nodes);
}

CovarianceTable CovarianceTable::build(const DelaySystem& sys, const PastFunctional& pf,
                                       double t_max, double dt) {
    CovarianceTable tab;
    tab.responses = response_path(sys, pf, t_max, dt);
    tab.dt = tab.responses.dt;
    const int n = sys.n;
    tab.cumulative.reserve(tab.responses.values.size());
    tab.cumulative.push_back(Matrix::Zero(n, n));
    for (std::size_t k = 1; k < tab.responses.values.size(); ++k) {
        const Matrix& a = tab.responses.values[k - 1];
        const Matrix& b = tab.responses.values[k];
        tab.cumulative.push_back(tab.cumulative.back() +
                                 response_cell_integral(a, b, tab.dt));
    }
    return tab;
}

namespace {

Matrix cumulative_at(const CovarianceTable& tab, double r) {
    double u = r / tab.dt;
    if (u <= 0.0) return tab.cumulative.front();
    std::size_t j = std::size_t(u);
    if (j + 1 >= tab.cumulative.size()) return tab.cumulative.back();
    double w = u - double(j);
    return (1.0 - w) * tab.cumulative[j] + w * tab.cumulative[j + 1];
}

} // namespace

Matrix CovarianceTable::window(double s, double t) const {
    if (!(t >= s) || s < -1e-12) throw std::domain_error("covariance window needs 0 <= s <= t");
    if (t > dt * double(cumulative.size() - 1) + 1e-9)
        throw std::domain_error("covariance window exceeds table");
    Matrix w = cumulative_at(*this, t) - cumulative_at(*this, s);
    return 0.5 * (w + w.transpose());
}

RateProbe smoothing_rate_probe(const DelaySystem& sys, const PastFunctional& pf,
                               const std::vector<double>& t_list, int quad_nodes, double dt) {
    if (t_list.size() < 2) throw std::invalid_argument("rate probe needs >= 2 times");
    double t_max = 0.0;
    for (double t : t_list) {
        if (t <= 0.0) throw std::domain_error("rate probe times must be positive");
        t_max = std::max(t_max, t);
    }
    ResponsePath mp = response_path(sys, pf, t_max, dt);
    RateProbe probe;
    probe.t = t_list;
    probe.lambda_min.reserve(t_list.size());
    for (double t : t_list)
        probe.lambda_min.push_back(covariance_from_path(mp, 0.0, t, quad_nodes).lambda_min());
    probe.slope = fit_loglog_slope(probe.t, probe.lambda_min);
    return probe;
}

TbarEstimate estimate_tbar(const DelaySystem& sys, const PastFunctional& pf, double t_probe_max,
                           int probe_points, int quad_nodes, double dt) {
    if (probe_points < 2) throw std::invalid_argument("tbar probe needs >= 2 points");
    ResponsePath mp = response_path(sys, pf, t_probe_max, dt);
    const double h = t_probe_max / probe_points;
    std::vector<double> ratio(std::size_t(probe_points), 0.0);
    for (int k = 1; k <= probe_points; ++k) {
        double t = k * h;
        ratio[std::size_t(k) - 1] =
            covariance_from_path(mp, t - h, t, quad_nodes).lambda_min() / h;
    }
    TbarEstimate est;
    est.c_hat = ratio.back();
    if (est.c_hat <= 0.0) return est;
    int good = 0;
    while (good < probe_points && ratio[std::size_t(good)] >= 0.5 * est.c_hat) ++good;
    est.t_bar = good * h;
    est.certified = good > 0;
    return est;
}

} // namespace delayou
