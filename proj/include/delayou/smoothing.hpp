#pragma once

#include <cstdint>
#include <vector>

#include "delayou/covariance.hpp"
#include "delayou/dynamics.hpp"
#include "delayou/functionals.hpp"
#include "delayou/types.hpp"

namespace delayou {

// Gaussian-expectation backend: Gauss-Hermite tensor for n <= 2, plain MC
// above that; indicators route to the closed-form normal CDF/pdf.
struct GaussQuadConfig {
    int order_n1 = 40;
    int order_n2 = 20;
    int mc_draws = 20000;
    std::uint64_t mc_seed = 0x5eedULL;
    double lambda_floor = 1e-12;
};

// E f(mean + Z), Z ~ N(0, cov). Degenerate cov with continuous f collapses to
// a point mass; degenerate with a discontinuous non-indicator f is refused.
double gaussian_expectation(const ScalarFunction& f, const Vector& mean, const Matrix& cov,
                            const GaussQuadConfig& quad);

// E[ f(cov^{1/2} zeta + mean) <cov^{-1/2} v, zeta> ], the integration-by-parts
// kernel; equals the directional derivative of gaussian_expectation in mean.
double gaussian_gradient_expectation(const ScalarFunction& f, const Vector& mean,
                                     const Matrix& cov, const Vector& v,
                                     const GaussQuadConfig& quad);

struct SmoothingConfig {
    GaussQuadConfig quad;
    int cov_nodes = 32;  // Gauss-Legendre order for the covariance window
    double dt = 1e-3;    // Euler step for responses / deterministic flow
};

// R_t[phi](x) = ∫ phibar(z + P e^{tA} x) N(0, bar Q_t)(dz).
double ou_apply(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                double t, const Segment& x, const SmoothingConfig& cfg);

// ∇R_t[phi](x)h via the Gaussian integration-by-parts representation.
double ou_gradient(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                   double t, const Segment& x, const Segment& h, const SmoothingConfig& cfg);

// Fitted slope of log |∇R_t[phi](x)h| against log t.
struct GradientRateProbe {
    std::vector<double> t;
    std::vector<double> grad_abs;
    double slope = 0.0;
};

GradientRateProbe gradient_rate_probe(const DelaySystem& sys, const PastFunctional& pf,
                                      const ScalarFunction& phibar, const Segment& x,
                                      const Segment& h, const std::vector<double>& t_list,
                                      const SmoothingConfig& cfg);

// ||bar Q_t^{-1/2} P e^{tA} eta||, the minimum-energy steering norm.
double steering_energy(const DelaySystem& sys, const PastFunctional& pf, double t,
                       const Segment& eta, const SmoothingConfig& cfg);

struct McConfig {
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    double dt = 1e-2;
};

// P_t[phi](x) by two estimators: direct simulation of the perturbed process,
// and Girsanov reweighting of OU paths.
struct PerturbedEstimate {
    double direct = 0.0;
    double direct_se = 0.0;
    double girsanov = 0.0;
    double girsanov_se = 0.0;
    double weight_mean = 0.0;
    double weight_se = 0.0;
    bool disagreement_flagged = false; // |direct - girsanov| > 4 combined SE
};

PerturbedEstimate perturbed_apply(const DelaySystem& sys, const PastFunctional& pf,
                                  const ReducedDrift* drift, const ScalarFunction& phibar,
                                  double t, const Segment& x, const McConfig& mc);

// ∇P_t[phi](x)h. The formula path needs phibar tagged C1; the
// finite-difference path works for any phibar (central difference, common
// random numbers).
struct PerturbedGradient {
    double formula = 0.0;
    double formula_se = 0.0;
    bool formula_available = false;
    double fd = 0.0;
    double fd_se = 0.0;
    double fd_delta = 0.0;
};

PerturbedGradient perturbed_gradient(const DelaySystem& sys, const PastFunctional& pf,
                                     const ReducedDrift* drift, const ScalarFunction& phibar,
                                     double t, const Segment& x, const Segment& h,
                                     const McConfig& mc, double fd_delta = 1e-3);

// Finite-difference sensitivity of R_t on a tail-point observable that is NOT
// of the phibar∘P class, versus a P-observable control probe: the former blows
// up like 1/delta whenever t + theta_star < 0, the latter stays O(t^{-1/2}).
struct FellerProbeRow {
    double delta = 0.0;
    double ratio_tail = 0.0; // non-P observable
    double ratio_reduced = 0.0; // P-observable control case
};

struct FellerProbeReport {
    double t = 0.0;
    double theta_star = 0.0;
    bool deterministic_regime = false; // t + theta_star < 0
    std::vector<FellerProbeRow> rows;
};

FellerProbeReport strong_feller_failure_probe(const DelaySystem& sys, double t, double theta_star,
                                              const std::vector<double>& deltas,
                                              const McConfig& mc, const SmoothingConfig& cfg);

// sup-style segment magnitude used for FD step scaling.
double segment_norm(const Segment& x);

} // namespace delayou
