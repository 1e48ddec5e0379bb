#pragma once

#include <functional>
#include <string>

#include "delayou/types.hpp"

namespace delayou {

enum class Regime { A1, A2 };

// The reduction map: x -> alpha0 * x0 + Σ_i w_i x1(θ_i) + ∫ f(θ) x1(θ) dθ.
// Regime A1 requires alpha0 invertible; regime A2 requires alpha0 = 0 with an
// invertible Cesàro limit f0 of the density at 0.
struct PastFunctional {
    Matrix alpha0;
    DelayMeasure tail_measure; // no atom at 0; the atom at 0 lives in alpha0
    Regime regime = Regime::A1;

    void validate(int n, double d) const;

    // s^{-1} ∫_{-s}^0 f dθ, the Cesàro average the A2 regime checks against f0.
    Matrix cesaro_density_average(double s) const;
};

Vector apply_reduction(const PastFunctional& pf, const Segment& x);

enum class Smoothness { Bounded, Lipschitz, C1 };

// phibar on R^n with its declared smoothness tag. Gradient-based formulas
// refuse functions tagged merely Bounded; indicators get closed-form routes.
struct ScalarFunction {
    std::string name;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient; // null unless C1
    Smoothness smoothness = Smoothness::Bounded;
    double sup_norm = 1.0;
    bool is_indicator = false; // 1_{y[axis] > threshold}
    int indicator_axis = 0;
    double indicator_threshold = 0.0;

    double operator()(const Vector& y) const { return value(y); }
};

struct Observable {
    PastFunctional pf;
    ScalarFunction phibar;
};

double observe(const Observable& obs, const Segment& x);

// Reduced drift B(t, x) = bbar(t, P x); bbar maps (t, R^n) -> R^n.
struct ReducedDrift {
    PastFunctional pf;
    std::string name;
    std::function<Vector(double, const Vector&)> bbar;
    std::function<Matrix(double, const Vector&)> jacobian; // null => finite differences
    double lipschitz = 1.0;
    double sup_bound = 1.0;

    Matrix jacobian_at(double t, const Vector& y) const;
};

Vector reduced_drift_eval(const ReducedDrift& drift, double t, const Segment& x);

} // namespace delayou
