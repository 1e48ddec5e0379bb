#include "delayou/smoothing.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "delayou/parallel.hpp"
#include "delayou/quadrature.hpp"
#include "delayou/rng.hpp"

namespace delayou {

namespace {

struct CovFactors {
    Matrix sqrt;     // cov^{1/2}
    Matrix inv_sqrt; // cov^{-1/2}
    double lambda_max = 0.0;
    double lambda_min = 0.0;
};

CovFactors factor_cov(const Matrix& cov, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
    CovFactors f;
    f.lambda_max = es.eigenvalues().maxCoeff();
    f.lambda_min = es.eigenvalues().minCoeff();
    Vector sq(es.eigenvalues().size()), isq(es.eigenvalues().size());
    for (int i = 0; i < sq.size(); ++i) {
        double lam = std::max(es.eigenvalues()[i], 0.0);
        sq[i] = std::sqrt(lam);
        isq[i] = 1.0 / std::sqrt(std::max(lam, floor));
    }
    f.sqrt = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
    f.inv_sqrt = es.eigenvectors() * isq.asDiagonal() * es.eigenvectors().transpose();
    return f;
}

bool known_continuous(const ScalarFunction& f) {
    return f.smoothness == Smoothness::Lipschitz || f.smoothness == Smoothness::C1;
}

// Σ w_i kernel(S ζ_i + mean, ζ_i) against the standard Gaussian on R^n.
template <class Kernel>
double gaussian_reduce(const Kernel& kernel, const Vector& mean, const Matrix& S, int n,
                       const GaussQuadConfig& quad, bool polynomial_ok) {
    if (polynomial_ok && n <= 2) {
        if (n == 1) {
            const GaussHermite& gh = GaussHermite::of_order(quad.order_n1);
            double acc = 0.0;
            Vector z(1);
            for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
                z[0] = gh.nodes[i];
                acc += gh.weights[i] * kernel(mean + S * z, z);
            }
            return acc;
        }
        GaussHermiteTensor rule = GaussHermiteTensor::make(n, quad.order_n2);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            acc += rule.weights[i] * kernel(mean + S * rule.nodes[i], rule.nodes[i]);
        return acc;
    }
    // Monte Carlo route: discontinuous integrands or n >= 3.
    std::vector<double> samples(std::size_t(quad.mc_draws));
    parallel_for(samples.size(), [&](std::size_t i) {
        CounterRng rng(quad.mc_seed, i);
        Vector z(n);
        for (int j = 0; j < n; ++j) z[j] = rng.normal();
        samples[i] = kernel(mean + S * z, z);
    });
    return pairwise_sum(samples) / double(samples.size());
}

} // namespace

double gaussian_expectation(const ScalarFunction& f, const Vector& mean, const Matrix& cov,
                            const GaussQuadConfig& quad) {
    const int n = int(mean.size());
    if (f.is_indicator) {
        const int a = f.indicator_axis;
        double q = cov(a, a);
        if (q < quad.lambda_floor)
            return mean[a] > f.indicator_threshold ? 1.0 : 0.0; // point mass
        return normal_cdf((mean[a] - f.indicator_threshold) / std::sqrt(q));
    }
    CovFactors fc = factor_cov(cov, quad.lambda_floor);
    if (fc.lambda_max < quad.lambda_floor) {
        if (!known_continuous(f))
            throw std::domain_error(
                "degenerate covariance with a possibly discontinuous function");
        return f(mean);
    }
    return gaussian_reduce([&](const Vector& y, const Vector&) { return f(y); }, mean, fc.sqrt, n,
                           quad, known_continuous(f));
}

double gaussian_gradient_expectation(const ScalarFunction& f, const Vector& mean,
                                     const Matrix& cov, const Vector& v,
                                     const GaussQuadConfig& quad) {
    const int n = int(mean.size());
    if (f.is_indicator) {
        const int a = f.indicator_axis;
        double q = cov(a, a);
        if (q < quad.lambda_floor)
            throw std::domain_error("singular covariance in gradient representation");
        double s = std::sqrt(q);
        return normal_pdf((mean[a] - f.indicator_threshold) / s) / s * v[a];
    }
    CovFactors fc = factor_cov(cov, quad.lambda_floor);
    if (fc.lambda_min < quad.lambda_floor)
        throw std::domain_error("singular covariance in gradient representation");
    Vector u = fc.inv_sqrt * v;
    return gaussian_reduce([&](const Vector& y, const Vector& z) { return f(y) * u.dot(z); },
                           mean, fc.sqrt, n, quad, known_continuous(f));
}

double ou_apply(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                double t, const Segment& x, const SmoothingConfig& cfg) {
    if (t < 0.0) throw std::domain_error("time must be nonnegative");
    Vector mean = apply_reduction(pf, t == 0.0 ? x : evolve_deterministic(sys, x, t, cfg.dt));
    if (t == 0.0) return phibar(mean);
    Matrix cov = covariance(sys, pf, 0.0, t, cfg.cov_nodes, cfg.dt).value;
    return gaussian_expectation(phibar, mean, cov, cfg.quad);
}

double ou_gradient(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                   double t, const Segment& x, const Segment& h, const SmoothingConfig& cfg) {
    if (t <= 0.0) throw std::domain_error("gradient representation needs t > 0");
    Vector mean = apply_reduction(pf, evolve_deterministic(sys, x, t, cfg.dt));
    Vector v = apply_reduction(pf, evolve_deterministic(sys, h, t, cfg.dt));
    Matrix cov = covariance(sys, pf, 0.0, t, cfg.cov_nodes, cfg.dt).value;
    return gaussian_gradient_expectation(phibar, mean, cov, v, cfg.quad);
}

GradientRateProbe gradient_rate_probe(const DelaySystem& sys, const PastFunctional& pf,
                                      const ScalarFunction& phibar, const Segment& x,
                                      const Segment& h, const std::vector<double>& t_list,
                                      const SmoothingConfig& cfg) {
    GradientRateProbe probe;
    probe.t = t_list;
    probe.grad_abs.reserve(t_list.size());
    for (double t : t_list)
        probe.grad_abs.push_back(std::abs(ou_gradient(sys, pf, phibar, t, x, h, cfg)));
    probe.slope = fit_loglog_slope(probe.t, probe.grad_abs);
    return probe;
}

double steering_energy(const DelaySystem& sys, const PastFunctional& pf, double t,
                       const Segment& eta, const SmoothingConfig& cfg) {
    if (t <= 0.0) throw std::domain_error("steering energy needs t > 0");
    Vector r = apply_reduction(pf, evolve_deterministic(sys, eta, t, cfg.dt));
    CovMatrix q = covariance(sys, pf, 0.0, t, cfg.cov_nodes, cfg.dt);
    if (q.lambda_min() < cfg.quad.lambda_floor)
        throw std::domain_error("singular covariance in steering energy");
    return (q.inv_sqrt(cfg.quad.lambda_floor) * r).norm();
}

PerturbedEstimate perturbed_apply(const DelaySystem& sys, const PastFunctional& pf,
                                  const ReducedDrift* drift, const ScalarFunction& phibar,
                                  double t, const Segment& x, const McConfig& mc) {
    std::vector<double> direct(mc.paths), weighted(mc.paths), weights(mc.paths);
    parallel_for(mc.paths, [&](std::size_t i) {
        Vector y = run_controlled_path(sys, x, pf, drift, ControlSignal(), t, mc.dt, mc.seed,
                                       2 * i);
        direct[i] = phibar(y);
        OuRunResult r =
            run_ou_path_with_weight(sys, x, pf, drift, t, mc.dt, mc.seed, 2 * i + 1);
        double w = std::exp(r.log_weight);
        weights[i] = w;
        weighted[i] = phibar(r.reduced_terminal) * w;
    });
    MeanSe d = mean_and_se(direct);
    MeanSe g = mean_and_se(weighted);
    MeanSe w = mean_and_se(weights);
    PerturbedEstimate out;
    out.direct = d.mean;
    out.direct_se = d.se;
    out.girsanov = g.mean;
    out.girsanov_se = g.se;
    out.weight_mean = w.mean;
    out.weight_se = w.se;
    double comb = std::sqrt(d.se * d.se + g.se * g.se);
    out.disagreement_flagged = std::abs(d.mean - g.mean) > 4.0 * comb;
    return out;
}

PerturbedGradient perturbed_gradient(const DelaySystem& sys, const PastFunctional& pf,
                                     const ReducedDrift* drift, const ScalarFunction& phibar,
                                     double t, const Segment& x, const Segment& h,
                                     const McConfig& mc, double fd_delta) {
    PerturbedGradient out;
    out.fd_delta = fd_delta;
    const double dt = aligned_step(sys.d, mc.dt);
    const int steps = int(std::llround(t / dt));
    if (std::abs(steps * dt - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument("dt does not divide t (step mismatch)");

    // Deterministic flow of the direction: P_drift e^{sA} h per step and
    // P_obs e^{tA} h at the horizon.
    std::vector<Vector> rd;
    Vector ro;
    {
        PathState hs(sys, h, mc.dt);
        rd.reserve(std::size_t(steps));
        for (int k = 0; k < steps; ++k) {
            if (drift) rd.push_back(hs.reduce(drift->pf));
            hs.step_deterministic();
        }
        ro = hs.reduce(pf);
    }

    out.formula_available = phibar.smoothness == Smoothness::C1 && bool(phibar.gradient);
    if (out.formula_available) {
        std::vector<double> samples(mc.paths);
        parallel_for(mc.paths, [&](std::size_t i) {
            PathState ps(sys, x, mc.dt);
            CounterRng rng(mc.seed, 2 * i);
            const double sq = std::sqrt(ps.dt());
            Vector dw(sys.n);
            double stoch = 0.0;
            for (int k = 0; k < steps; ++k) {
                for (int j = 0; j < sys.n; ++j) dw[j] = sq * rng.normal();
                if (drift) {
                    Vector y = ps.reduce(drift->pf);
                    stoch += (drift->jacobian_at(ps.time(), y) * rd[std::size_t(k)]).dot(dw);
                    ps.step(dw, drift->bbar(ps.time(), y));
                } else {
                    ps.step(dw, Vector::Zero(sys.n));
                }
            }
            Vector yt = ps.reduce(pf);
            samples[i] = phibar(yt) * stoch + phibar.gradient(yt).dot(ro);
        });
        MeanSe m = mean_and_se(samples);
        out.formula = m.mean;
        out.formula_se = m.se;
    }

    // Central finite difference with common random numbers across x ± δh.
    Segment xp = x + fd_delta * h;
    Segment xm = x + (-fd_delta) * h;
    std::vector<double> fd_samples(mc.paths);
    parallel_for(mc.paths, [&](std::size_t i) {
        Vector yp = run_controlled_path(sys, xp, pf, drift, ControlSignal(), t, mc.dt, mc.seed,
                                        2 * i + 1);
        Vector ym = run_controlled_path(sys, xm, pf, drift, ControlSignal(), t, mc.dt, mc.seed,
                                        2 * i + 1);
        fd_samples[i] = (phibar(yp) - phibar(ym)) / (2.0 * fd_delta);
    });
    MeanSe m = mean_and_se(fd_samples);
    out.fd = m.mean;
    out.fd_se = m.se;
    return out;
}

double segment_norm(const Segment& x) {
    double m = x.head.cwiseAbs().maxCoeff();
    for (const auto& v : x.tail) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

namespace {

// E[ 1_{ y(t + theta_star)[0] > 0 } ] by Monte Carlo with common streams.
double tail_indicator_expectation(const DelaySystem& sys, const Segment& x, double t,
                                  double theta_star, const McConfig& mc) {
    const double dt = aligned_step(sys.d, mc.dt);
    const int steps = int(std::llround(t / dt));
    std::vector<double> samples(mc.paths);
    parallel_for(mc.paths, [&](std::size_t i) {
        PathState ps(sys, x, mc.dt);
        CounterRng rng(mc.seed, i);
        const double sq = std::sqrt(ps.dt());
        Vector dw(sys.n);
        for (int k = 0; k < steps; ++k) {
            for (int j = 0; j < sys.n; ++j) dw[j] = sq * rng.normal();
            ps.step(dw, Vector::Zero(sys.n));
        }
        samples[i] = ps.history_at(theta_star)[0] > 0.0 ? 1.0 : 0.0;
    });
    return pairwise_sum(samples) / double(samples.size());
}

} // namespace

FellerProbeReport strong_feller_failure_probe(const DelaySystem& sys, double t, double theta_star,
                                              const std::vector<double>& deltas,
                                              const McConfig& mc, const SmoothingConfig& cfg) {
    if (t <= 0.0) throw std::domain_error("probe time must be positive");
    if (theta_star < -sys.d || theta_star >= 0.0)
        throw std::domain_error("theta_star must lie in [-d, 0)");
    FellerProbeReport rep;
    rep.t = t;
    rep.theta_star = theta_star;
    rep.deterministic_regime = t + theta_star < 0.0;

    const double dt = aligned_step(sys.d, mc.dt);
    const int cells = int(std::llround(sys.d / dt));
    Segment x = Segment::zero(sys.n, sys.d, cells);
    // Direction: a one-cell hat on the tail at the point the probe reads.
    double theta0 = rep.deterministic_regime ? t + theta_star : theta_star;
    Segment h = Segment::zero(sys.n, sys.d, cells);
    int node = int(std::llround((theta0 + sys.d) / sys.d * cells));
    node = std::min(std::max(node, 0), cells);
    h.tail[std::size_t(node)] = Vector::Ones(sys.n);
    if (node == cells) h.head = Vector::Ones(sys.n); // continuity at 0^-

    PastFunctional head_pf;
    head_pf.alpha0 = Matrix::Identity(sys.n, sys.n);
    head_pf.tail_measure.d = sys.d;
    head_pf.regime = Regime::A1;
    ScalarFunction indicator;
    indicator.name = "indicator";
    indicator.value = [](const Vector& y) { return y[0] > 0.0 ? 1.0 : 0.0; };
    indicator.smoothness = Smoothness::Bounded;
    indicator.is_indicator = true;

    for (double delta : deltas) {
        Segment xp = x + delta * h;
        Segment xm = x + (-delta) * h;
        FellerProbeRow row;
        row.delta = delta;
        row.ratio_tail = (tail_indicator_expectation(sys, xp, t, theta_star, mc) -
                          tail_indicator_expectation(sys, xm, t, theta_star, mc)) /
                         (2.0 * delta);
        row.ratio_reduced = (ou_apply(sys, head_pf, indicator, t, xp, cfg) -
                             ou_apply(sys, head_pf, indicator, t, xm, cfg)) /
                            (2.0 * delta);
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace delayou
