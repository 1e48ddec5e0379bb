#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "delayou/functionals.hpp"
#include "delayou/rng.hpp"
#include "delayou/types.hpp"

namespace delayou {

// Pregenerated Brownian increments, reproducible from (seed, stream).
struct BrownianPath {
    double dt = 0.0;
    std::vector<Vector> increments; // each ~ N(0, dt I)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    static BrownianPath make(int n, double T, double dt, std::uint64_t seed, std::uint64_t stream);
};

// Explicit-Euler stepper for the delay system. The whole trajectory from
// t - d onwards is kept so the delay integral and the reduction maps can be
// evaluated against the exact history; dt is aligned with the tail grid.
class PathState {
public:
    PathState(const DelaySystem& sys, const Segment& x, double dt);

    // One Euler step. dW is the Brownian increment (may be zero);
    // sigma_extra is added inside sigma * (.) dt (drift B + control u).
    void step(const Vector& dW, const Vector& sigma_extra);
    void step_deterministic() { step(zero_, zero_); }

    double time() const { return double(steps_taken_) * dt_; }
    double dt() const { return dt_; }
    const Vector& head() const { return history_.back(); }
    Segment segment() const;
    Vector reduce(const PastFunctional& pf) const;
    Vector delay_integral() const;
    // y(time() + theta) by linear interpolation, theta in [-d, 0].
    Vector history_at(double theta) const;

private:
    const DelaySystem* sys_;
    double dt_;
    int hist_cells_; // d / dt
    std::size_t steps_taken_ = 0;
    std::vector<Vector> history_; // values at -d, -d+dt, ..., time()
    Vector zero_;
};

// Aligns dt with the tail grid: returns d / round(d / dt).
double aligned_step(double d, double dt);

// e^{tA} x by Euler integration of the deterministic delay equation.
Segment evolve_deterministic(const DelaySystem& sys, const Segment& x, double t, double dt);

// e^{tA} G eta with G eta = (sigma * eta, 0-tail).
Segment fundamental_response(const DelaySystem& sys, const Vector& eta, double t, double dt,
                             int tail_grid = 0);

std::vector<Segment> simulate_ou(const DelaySystem& sys, const Segment& x, double T, double dt,
                                 const BrownianPath& noise);

// Time-indexed control signal or feedback callback; receives (t, state).
using ControlSignal = std::function<Vector(double, const PathState&)>;

std::vector<Segment> simulate_controlled(const DelaySystem& sys, const Segment& x,
                                         const ReducedDrift* drift, const ControlSignal& control,
                                         double T, double dt, const BrownianPath& noise);

// Discrete Girsanov exponential exp(Σ <B, ΔW> - ½ Σ |B|² dt) along an OU path.
double girsanov_weight(const DelaySystem& sys, const ReducedDrift& drift,
                       const std::vector<Segment>& ou_path, const BrownianPath& noise);

// Streaming variant used by the Monte Carlo estimators: runs one OU path and
// returns (terminal state handed to `observe_at_end`, log-weight).
struct OuRunResult {
    Vector reduced_terminal;
    double log_weight = 0.0;
};

OuRunResult run_ou_path_with_weight(const DelaySystem& sys, const Segment& x,
                                    const PastFunctional& observe_pf, const ReducedDrift* drift,
                                    double T, double dt, std::uint64_t seed, std::uint64_t stream);

Vector run_controlled_path(const DelaySystem& sys, const Segment& x,
                           const PastFunctional& observe_pf, const ReducedDrift* drift,
                           const ControlSignal& control, double T, double dt, std::uint64_t seed,
                           std::uint64_t stream);

} // namespace delayou
