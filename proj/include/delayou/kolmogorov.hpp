#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "delayou/covariance.hpp"
#include "delayou/smoothing.hpp"
#include "delayou/types.hpp"

namespace delayou {

// Tensor box grid in R^n; piecewise-cubic (Catmull-Rom) interpolation for
// n = 1, multilinear for n >= 2; queries outside the box clamp to the boundary.
struct SpaceGrid {
    Vector lo;
    Vector hi;
    std::vector<int> npts; // per-axis node counts, each >= 4 for n = 1

    static SpaceGrid box(const Vector& lo, const Vector& hi, int pts_per_axis);

    int dim() const { return int(lo.size()); }
    std::size_t size() const;
    Vector point(std::size_t flat) const;
    double spacing(int axis) const { return (hi[axis] - lo[axis]) / (npts[std::size_t(axis)] - 1); }

    double interpolate(const std::vector<double>& values, const Vector& y,
                       bool* clamped = nullptr) const;
    Vector interpolate_vec(const std::vector<Vector>& values, const Vector& y,
                           bool* clamped = nullptr) const;
};

// Reduced representation of an element of the Sigma^1 space: w(t,x) =
// wbar(t, P e^{tA} x), and gbarG stores the scaled gradient t^{1/2} ∇w(t,·)G
// in the same reduced variables.
struct SigmaFunction {
    std::vector<double> times; // 0 = t_0 < ... <= T
    SpaceGrid grid;
    std::vector<std::vector<double>> wbar;  // [time][node]
    std::vector<std::vector<Vector>> gbarG; // [time][node]

    double value_at(double t, const Vector& y, bool* clamped = nullptr) const;
    Vector gbarG_at(double t, const Vector& y, bool* clamped = nullptr) const;
    std::size_t time_index_below(double t) const;
};

// Hamiltonian-type nonlinearity psi(v, z) with declared Lipschitz constant.
struct Nonlinearity {
    std::string name;
    std::function<double(double, const Vector&)> psi;
    double lipschitz = 1.0;
    bool gradient_only = false; // ignores the value argument

    double operator()(double v, const Vector& z) const { return psi(v, z); }
};

// Time quadrature of ∫_0^t f(s) ds with the s^{-1/2} endpoint at 0 and the
// (t-s)^{-1/2} endpoint at t both tamed by square-root substitutions; each
// node carries the covariance window factors it needs.
struct ConvQuad {
    struct Node {
        double s = 0.0;
        double w = 0.0;  // quadrature weight including the substitution Jacobian
        Matrix S;        // (bar Q_t^s)^{1/2}
        Matrix Qinv;     // (bar Q_t^s)^{-1} with eigenvalue floor
    };
    double t = 0.0;
    std::vector<Node> nodes;

    static ConvQuad make(const CovarianceTable& table, double t, int sigma_nodes,
                         double lambda_floor);
};

// R-bar(t, y) = ∫ phibar(z + y) N(0, bar Q_t)(dz).
double reduced_ou(const DelaySystem& sys, const PastFunctional& pf, const ScalarFunction& phibar,
                  double t, const Vector& y, const SmoothingConfig& cfg);

// (Γg)-bar at (t, y): ∫_0^t ∫ psi(gbar(s,z+y), s^{-1/2} gbarG(s,z+y)) N(0, bar Q_t^s)(dz) ds.
double gamma_convolution(const DelaySystem& sys, const PastFunctional& pf, const SigmaFunction& g,
                         const Nonlinearity& psi, double t, const Vector& y,
                         const SmoothingConfig& cfg, int sigma_nodes = 16);
double gamma_convolution_pre(const ConvQuad& tq, const SigmaFunction& g, const Nonlinearity& psi,
                             const Vector& y, const GaussQuadConfig& quad);

// Directional gradient of Γg along a direction whose reduced image is
// v = P e^{tA} k; for k = G e_j pass column j of the response matrix M(t).
double gamma_gradient(const DelaySystem& sys, const PastFunctional& pf, const SigmaFunction& g,
                      const Nonlinearity& psi, double t, const Vector& y, const Vector& v,
                      const SmoothingConfig& cfg, int sigma_nodes = 16, double t_bar_limit = 0.0);
double gamma_gradient_pre(const ConvQuad& tq, const SigmaFunction& g, const Nonlinearity& psi,
                          const Vector& y, const Vector& v, const GaussQuadConfig& quad);

struct SolverConfig {
    double T = 0.5;
    double T0 = 0.0;              // 0 => auto: min(d, t_bar, T, 1)
    double picard_tol = 1e-6;
    int max_iters = 50;
    int time_points = 12;         // per window, excluding the base node
    int space_points = 65;        // per axis
    double space_halfwidth = 0.0; // 0 => auto from covariance spread
    int sigma_nodes = 16;
    double t_bar = 0.0;           // 0 => estimate numerically
    SmoothingConfig smoothing;
};

struct PicardDiagnostics {
    int windows = 0;
    double t_bar = 0.0;
    double window_length = 0.0;
    bool converged = false;
    std::vector<int> iterations;              // per window
    std::vector<double> errors;               // all sweeps, concatenated
    std::vector<double> contraction_ratios;   // successive error ratios
};

// Fixed-point solution of the forward mild equation w = R[phi] + Γw on [0, T],
// advanced window by window.
SigmaFunction picard_solve(const DelaySystem& sys, const PastFunctional& pf,
                           const ScalarFunction& phibar, const Nonlinearity& psi,
                           const SolverConfig& cfg, PicardDiagnostics* diag = nullptr);

// v(t, x) for the linear equation with drift B: perturbed semigroup at
// horizon T - t.
PerturbedEstimate linear_solve(const DelaySystem& sys, const PastFunctional& pf,
                               const ReducedDrift* drift, const ScalarFunction& phibar, double T,
                               double t, const Segment& x, const McConfig& mc);

struct SigmaEval {
    double value = 0.0;
    Vector gradG;       // unscaled ∇w(t,x)G as a row in R^n
    bool extrapolated = false;
};

SigmaEval sigma_eval(const SigmaFunction& w, const DelaySystem& sys, const PastFunctional& pf,
                     double t, const Segment& x, double dt);

} // namespace delayou
