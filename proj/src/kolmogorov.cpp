#include "delayou/kolmogorov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "delayou/dynamics.hpp"
#include "delayou/parallel.hpp"
#include "delayou/quadrature.hpp"

namespace delayou {

namespace {

// (flat index, weight) stencil for interpolation at y, with clamping.
void build_stencil(const SpaceGrid& g, const Vector& y,
                   std::vector<std::pair<std::size_t, double>>& out, bool* clamped) {
    const int n = g.dim();
    out.clear();
    if (clamped) *clamped = false;
    if (n == 1) {
        const int m = g.npts[0];
        double u = (y[0] - g.lo[0]) / g.spacing(0);
        if (u < 0.0 || u > double(m - 1)) {
            if (clamped) *clamped = true;
            u = std::clamp(u, 0.0, double(m - 1));
        }
        int i = std::min(int(u), m - 2);
        double f = u - double(i);
        // Catmull-Rom with clamped end stencils.
        int i0 = std::max(i - 1, 0), i3 = std::min(i + 2, m - 1);
        double w0 = 0.5 * (-f + 2.0 * f * f - f * f * f);
        double w1 = 0.5 * (2.0 - 5.0 * f * f + 3.0 * f * f * f);
        double w2 = 0.5 * (f + 4.0 * f * f - 3.0 * f * f * f);
        double w3 = 0.5 * (-f * f + f * f * f);
        out = {{std::size_t(i0), w0},
               {std::size_t(i), w1},
               {std::size_t(i + 1), w2},
               {std::size_t(i3), w3}};
        return;
    }
    // Multilinear.
    std::vector<int> base(std::size_t(n), 0);
    std::vector<double> frac(std::size_t(n), 0.0);
    for (int a = 0; a < n; ++a) {
        const int m = g.npts[std::size_t(a)];
        double u = (y[a] - g.lo[a]) / g.spacing(a);
        if (u < 0.0 || u > double(m - 1)) {
            if (clamped) *clamped = true;
            u = std::clamp(u, 0.0, double(m - 1));
        }
        base[std::size_t(a)] = std::min(int(u), m - 2);
        frac[std::size_t(a)] = u - double(base[std::size_t(a)]);
    }
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0, stride = 1;
        for (int a = 0; a < n; ++a) {
            int bit = (c >> a) & 1;
            w *= bit ? frac[std::size_t(a)] : 1.0 - frac[std::size_t(a)];
            flat += stride * std::size_t(base[std::size_t(a)] + bit);
            stride *= std::size_t(g.npts[std::size_t(a)]);
        }
        if (w != 0.0) out.emplace_back(flat, w);
    }
}

const GaussHermiteTensor& gauss_rule(int n, const GaussQuadConfig& quad) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, GaussHermiteTensor> cache;
    int order = n == 1 ? quad.order_n1 : quad.order_n2;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, order);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, GaussHermiteTensor::make(n, order)).first;
    return it->second;
}

Matrix psd_inverse(const Matrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    Vector inv(es.eigenvalues().size());
    for (int i = 0; i < inv.size(); ++i) inv[i] = 1.0 / std::max(es.eigenvalues()[i], floor);
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

SpaceGrid SpaceGrid::box(const Vector& lo, const Vector& hi, int pts_per_axis) {
    if (pts_per_axis < 4) throw std::invalid_argument("space grid needs >= 4 points per axis");
    SpaceGrid g;
    g.lo = lo;
    g.hi = hi;
    g.npts.assign(std::size_t(lo.size()), pts_per_axis);
    for (int a = 0; a < lo.size(); ++a)
        if (!(hi[a] > lo[a])) throw std::invalid_argument("space grid box must have hi > lo");
    return g;
}

std::size_t SpaceGrid::size() const {
    std::size_t s = 1;
    for (int m : npts) s *= std::size_t(m);
    return s;
}

Vector SpaceGrid::point(std::size_t flat) const {
    Vector y(dim());
    for (int a = 0; a < dim(); ++a) {
        std::size_t m = std::size_t(npts[std::size_t(a)]);
        y[a] = lo[a] + spacing(a) * double(flat % m);
        flat /= m;
    }
    return y;
}

double SpaceGrid::interpolate(const std::vector<double>& values, const Vector& y,
                              bool* clamped) const {
    std::vector<std::pair<std::size_t, double>> st;
    build_stencil(*this, y, st, clamped);
    double acc = 0.0;
    for (const auto& [i, w] : st) acc += w * values[i];
    return acc;
}

Vector SpaceGrid::interpolate_vec(const std::vector<Vector>& values, const Vector& y,
                                  bool* clamped) const {
    std::vector<std::pair<std::size_t, double>> st;
    build_stencil(*this, y, st, clamped);
    Vector acc = Vector::Zero(dim());
    for (const auto& [i, w] : st) acc += w * values[i];
    return acc;
}

std::size_t SigmaFunction::time_index_below(double t) const {
    if (times.empty()) throw std::logic_error("empty sigma function");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return std::size_t(it - times.begin()) - 1;
}

double SigmaFunction::value_at(double t, const Vector& y, bool* clamped) const {
    std::size_t k = time_index_below(t);
    if (k + 1 >= times.size() || t <= times.front())
        return grid.interpolate(wbar[std::min(k, wbar.size() - 1)], y, clamped);
    double f = (t - times[k]) / (times[k + 1] - times[k]);
    double a = grid.interpolate(wbar[k], y, clamped);
    double b = grid.interpolate(wbar[k + 1], y, nullptr);
    return (1.0 - f) * a + f * b;
}

Vector SigmaFunction::gbarG_at(double t, const Vector& y, bool* clamped) const {
    std::size_t k = time_index_below(t);
    if (k + 1 >= times.size() || t <= times.front())
        return grid.interpolate_vec(gbarG[std::min(k, gbarG.size() - 1)], y, clamped);
    double f = (t - times[k]) / (times[k + 1] - times[k]);
    Vector a = grid.interpolate_vec(gbarG[k], y, clamped);
    Vector b = grid.interpolate_vec(gbarG[k + 1], y, nullptr);
    return (1.0 - f) * a + f * b;
}

ConvQuad ConvQuad::make(const CovarianceTable& table, double t, int sigma_nodes,
                        double lambda_floor) {
    ConvQuad tq;
    tq.t = t;
    if (t <= 0.0) return tq;
    const GaussLegendre& gl = GaussLegendre::of_order(sigma_nodes);
    const double r = std::sqrt(0.5 * t);
    auto push = [&](double s, double w) {
        Node node;
        node.s = s;
        node.w = w;
        Matrix win = table.window(s, t);
        node.S = psd_sqrt(win);
        node.Qinv = psd_inverse(win, lambda_floor);
        tq.nodes.push_back(std::move(node));
    };
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        // s = sigma^2 on [0, t/2]: tames the s^{-1/2} factor at 0.
        double sig = 0.5 * r * (gl.nodes[i] + 1.0);
        push(sig * sig, 0.5 * r * gl.weights[i] * 2.0 * sig);
        // s = t - u^2 on [t/2, t]: tames the gradient kernel at s = t.
        double u = 0.5 * r * (gl.nodes[i] + 1.0);
        push(t - u * u, 0.5 * r * gl.weights[i] * 2.0 * u);
    }
    return tq;
}

double reduced_ou(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                  double t, const Vector& y, const SmoothingConfig& cfg) {
    if (t < 0.0) throw std::domain_error("time must be nonnegative");
    if (t == 0.0) return phibar(y);
    Matrix cov = covariance(sys, pf, 0.0, t, cfg.cov_nodes, cfg.dt).value;
    return gaussian_expectation(phibar, y, cov, cfg.quad);
}

double gamma_convolution_pre(const ConvQuad& tq, const SigmaFunction& g, const Nonlinearity& psi,
                             const Vector& y, const GaussQuadConfig& quad) {
    const int n = int(y.size());
    const GaussHermiteTensor& rule = gauss_rule(n, quad);
    double acc = 0.0;
    for (const auto& node : tq.nodes) {
        const double inv_sqrt_s = 1.0 / std::sqrt(node.s);
        double inner = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            Vector z = y + node.S * rule.nodes[i];
            inner += rule.weights[i] *
                     psi(g.value_at(node.s, z), inv_sqrt_s * g.gbarG_at(node.s, z));
        }
        acc += node.w * inner;
    }
    return acc;
}

double gamma_convolution(const DelaySystem& sys, const PastFunctional& pf, const SigmaFunction& g,
                         const Nonlinearity& psi, double t, const Vector& y,
                         const SmoothingConfig& cfg, int sigma_nodes) {
    if (t < 0.0) throw std::domain_error("time must be nonnegative");
    if (t == 0.0) return 0.0;
    CovarianceTable table = CovarianceTable::build(sys, pf, t, cfg.dt);
    ConvQuad tq = ConvQuad::make(table, t, sigma_nodes, cfg.quad.lambda_floor);
    return gamma_convolution_pre(tq, g, psi, y, cfg.quad);
}

double gamma_gradient_pre(const ConvQuad& tq, const SigmaFunction& g, const Nonlinearity& psi,
                          const Vector& y, const Vector& v, const GaussQuadConfig& quad) {
    const int n = int(y.size());
    const GaussHermiteTensor& rule = gauss_rule(n, quad);
    double acc = 0.0;
    for (const auto& node : tq.nodes) {
        const double inv_sqrt_s = 1.0 / std::sqrt(node.s);
        Vector u = node.Qinv * v;
        double inner = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            Vector dz = node.S * rule.nodes[i];
            Vector z = y + dz;
            inner += rule.weights[i] *
                     psi(g.value_at(node.s, z), inv_sqrt_s * g.gbarG_at(node.s, z)) *
                     u.dot(dz);
        }
        acc += node.w * inner;
    }
    return acc;
}

double gamma_gradient(const DelaySystem& sys, const PastFunctional& pf, const SigmaFunction& g,
                      const Nonlinearity& psi, double t, const Vector& y, const Vector& v,
                      const SmoothingConfig& cfg, int sigma_nodes, double t_bar_limit) {
    if (t <= 0.0) throw std::domain_error("gradient needs t > 0");
    if (t_bar_limit > 0.0 && t > t_bar_limit + 1e-12)
        throw std::domain_error("window exceeds the covariance lower-bound certificate");
    CovarianceTable table = CovarianceTable::build(sys, pf, t, cfg.dt);
    ConvQuad tq = ConvQuad::make(table, t, sigma_nodes, cfg.quad.lambda_floor);
    return gamma_gradient_pre(tq, g, psi, y, v, cfg.quad);
}

SigmaFunction picard_solve(const DelaySystem& sys, const PastFunctional& pf,
                           const ScalarFunction& phibar, const Nonlinearity& psi,
                           const SolverConfig& cfg, PicardDiagnostics* diag) {
    sys.validate();
    pf.validate(sys.n, sys.d);
    const double T = cfg.T;
    if (T <= 0.0) throw std::domain_error("horizon must be positive");
    const SmoothingConfig& sm = cfg.smoothing;

    double t_bar = cfg.t_bar;
    if (t_bar <= 0.0) {
        TbarEstimate est = estimate_tbar(sys, pf, std::min({sys.d, T, 1.0}), 16, sm.cov_nodes,
                                         sm.dt);
        if (!est.certified)
            throw std::runtime_error("covariance lower-bound certificate failed; no t_bar");
        t_bar = est.t_bar;
    }
    double T0 = cfg.T0 > 0.0 ? cfg.T0 : std::min({sys.d, t_bar, T, 1.0});
    const int n_win = std::max(1, int(std::ceil(T / T0 - 1e-9)));
    const double tau = T / n_win;

    CovarianceTable table = CovarianceTable::build(sys, pf, T, sm.dt);

    // Space box sized to hold the Gaussian mass plus a unit margin.
    double hw = cfg.space_halfwidth;
    if (hw <= 0.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(table.window(0.0, T), Eigen::EigenvaluesOnly);
        hw = 6.0 * std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0)) + 1.0;
    }
    SigmaFunction g;
    g.grid = SpaceGrid::box(Vector::Constant(sys.n, -hw), Vector::Constant(sys.n, hw),
                            cfg.space_points);
    const std::size_t J = g.grid.size();

    // t = 0 row: terminal data.
    g.times.push_back(0.0);
    g.wbar.emplace_back(J);
    g.gbarG.emplace_back(J, Vector::Zero(sys.n));
    for (std::size_t j = 0; j < J; ++j) g.wbar[0][j] = phibar(g.grid.point(j));

    PicardDiagnostics local;
    PicardDiagnostics& dg = diag ? *diag : local;
    dg = PicardDiagnostics{};
    dg.windows = n_win;
    dg.t_bar = t_bar;
    dg.window_length = tau;
    dg.converged = true;

    const int K = cfg.time_points;
    for (int w = 0; w < n_win; ++w) {
        const double base = w * tau;
        std::vector<double> wtimes;
        for (int k = 1; k <= K; ++k) {
            double frac = double(k) / K;
            // sqrt-clustered nodes near 0 in the first window where wbar has
            // its t^{1/2} layer.
            wtimes.push_back(base + tau * (w == 0 ? frac * frac : frac));
        }
        const std::size_t i0 = g.times.size();
        std::vector<ConvQuad> tq;
        std::vector<Matrix> mt;            // M(t) per window time
        std::vector<std::vector<double>> base_w(wtimes.size(), std::vector<double>(J));
        std::vector<std::vector<Vector>> base_g(wtimes.size(),
                                                std::vector<Vector>(J, Vector::Zero(sys.n)));
        for (std::size_t ki = 0; ki < wtimes.size(); ++ki) {
            const double t = wtimes[ki];
            tq.push_back(ConvQuad::make(table, t, cfg.sigma_nodes, sm.quad.lambda_floor));
            mt.push_back(table.responses.at(t));
            Matrix qt = table.window(0.0, t);
            const double sq = std::sqrt(t);
            parallel_for(J, [&](std::size_t j) {
                Vector y = g.grid.point(j);
                base_w[ki][j] = gaussian_expectation(phibar, y, qt, sm.quad);
                Vector grad(sys.n);
                for (int c = 0; c < sys.n; ++c)
                    grad[c] = sq * gaussian_gradient_expectation(phibar, y, qt,
                                                                 mt.back().col(c), sm.quad);
                base_g[ki][j] = grad;
            });
            g.times.push_back(t);
            g.wbar.push_back(base_w[ki]);
            g.gbarG.push_back(base_g[ki]);
        }

        int bad_streak = 0;
        double prev_err = -1.0;
        int iter = 0;
        for (iter = 1; iter <= cfg.max_iters; ++iter) {
            double err = 0.0;
            std::vector<std::vector<double>> new_w(wtimes.size(), std::vector<double>(J));
            std::vector<std::vector<Vector>> new_g(wtimes.size(), std::vector<Vector>(J));
            for (std::size_t ki = 0; ki < wtimes.size(); ++ki) {
                const double t = wtimes[ki];
                const double sq = std::sqrt(t);
                parallel_for(J, [&](std::size_t j) {
                    Vector y = g.grid.point(j);
                    new_w[ki][j] =
                        base_w[ki][j] + gamma_convolution_pre(tq[ki], g, psi, y, sm.quad);
                    Vector grad(sys.n);
                    for (int c = 0; c < sys.n; ++c)
                        grad[c] = sq * gamma_gradient_pre(tq[ki], g, psi, y, mt[ki].col(c),
                                                          sm.quad);
                    new_g[ki][j] = base_g[ki][j] + grad;
                });
            }
            for (std::size_t ki = 0; ki < wtimes.size(); ++ki) {
                for (std::size_t j = 0; j < J; ++j) {
                    err = std::max(err, std::abs(new_w[ki][j] - g.wbar[i0 + ki][j]));
                    err = std::max(err, (new_g[ki][j] - g.gbarG[i0 + ki][j])
                                            .cwiseAbs()
                                            .maxCoeff());
                }
                g.wbar[i0 + ki] = std::move(new_w[ki]);
                g.gbarG[i0 + ki] = std::move(new_g[ki]);
            }
            dg.errors.push_back(err);
            if (prev_err > 0.0) {
                double ratio = err / prev_err;
                dg.contraction_ratios.push_back(ratio);
                bad_streak = ratio >= 1.0 ? bad_streak + 1 : 0;
                if (bad_streak >= 3)
                    throw std::runtime_error(
                        "Picard iteration is not contracting on this window");
            }
            if (err < cfg.picard_tol) break;
            prev_err = err;
        }
        dg.iterations.push_back(std::min(iter, cfg.max_iters));
        if (iter > cfg.max_iters) dg.converged = false;
    }

    // Continuous extension of the scaled gradient down to t = 0.
    if (g.times.size() > 1) g.gbarG[0] = g.gbarG[1];
    return g;
}

PerturbedEstimate linear_solve(const DelaySystem& sys, const PastFunctional& pf,
                               const ReducedDrift* drift, const ScalarFunction& phibar, double T,
                               double t, const Segment& x, const McConfig& mc) {
    if (t < 0.0 || t > T + 1e-12) throw std::domain_error("need 0 <= t <= T");
    return perturbed_apply(sys, pf, drift, phibar, T - t, x, mc);
}

SigmaEval sigma_eval(const SigmaFunction& w, const DelaySystem& sys, const PastFunctional& pf,
                     double t, const Segment& x, double dt) {
    if (w.times.empty()) throw std::logic_error("empty sigma function");
    if (t < 0.0 || t > w.times.back() + 1e-9)
        throw std::domain_error("time outside the solved grid");
    Vector y = apply_reduction(pf, t == 0.0 ? x : evolve_deterministic(sys, x, t, dt));
    SigmaEval out;
    bool clamped_v = false, clamped_g = false;
    out.value = w.value_at(t, y, &clamped_v);
    Vector scaled = w.gbarG_at(t, y, &clamped_g);
    double t_eff = std::max(t, w.times.size() > 1 ? w.times[1] : t);
    out.gradG = t_eff > 0.0 ? Vector(scaled / std::sqrt(t_eff)) : scaled;
    out.extrapolated = clamped_v || clamped_g;
    return out;
}

} // namespace delayou
