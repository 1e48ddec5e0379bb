#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "delayou/kolmogorov.hpp"
#include "delayou/types.hpp"

namespace delayou {

// Compact admissible set: either a box [lo, hi] or an explicit finite list.
struct AdmissibleSet {
    Vector lo;
    Vector hi;
    std::vector<Vector> finite; // non-empty => use the list, ignore the box

    bool is_finite() const { return !finite.empty(); }
    Vector clamp(const Vector& u) const;
};

struct RunningCost {
    std::string name;
    std::function<double(const Vector&)> g;
    bool quadratic = false; // g(u) = |u|^2; enables the exact box argmin
};

struct ControlProblem {
    DelaySystem sys;
    PastFunctional pf;
    AdmissibleSet U;
    RunningCost g;
    ScalarFunction phibar; // terminal cost
    double T = 1.0;
    Segment x0;
};

// psi(z) = inf_{u in U} { g(u) + <z, u> }.
double hamiltonian(const RunningCost& g, const AdmissibleSet& U, const Vector& z);

// Argmin of the Hamiltonian; lexicographically smallest on ties; always in U.
Vector select_upsilon(const RunningCost& g, const AdmissibleSet& U, const Vector& z);

// Wraps the Hamiltonian as the gradient-only HJB nonlinearity.
Nonlinearity hamiltonian_nonlinearity(const RunningCost& g, const AdmissibleSet& U);

struct FeedbackPolicy {
    SigmaFunction w; // forward-form HJB value: v(t, x) = w(T - t, x)
    RunningCost g;
    AdmissibleSet U;
    double T = 1.0;
};

// P e^{tau A} applied to live simulation states, precomputed as linear weights
// on the (head, tail-node) samples for every step horizon. Makes per-step
// feedback evaluation O(active weights) instead of a full deterministic evolve.
class ReducedFlowTable {
public:
    static ReducedFlowTable build(const DelaySystem& sys, const PastFunctional& pf, double T,
                                  double dt);
    double dt() const { return dt_; }
    int steps() const { return int(weights_.size()) - 1; }
    // P e^{(m dt) A} x for the state currently held by ps.
    Vector reduce_future(const PathState& ps, int m) const;

private:
    double dt_ = 0.0;
    int cells_ = 0;
    int n_ = 0;
    std::vector<Matrix> weights_;       // [m]: n x (n*(cells+1))
    std::vector<int> active_;           // columns with any nonzero weight
};

struct ControlRecord {
    double t = 0.0;
    Vector y; // reduced state P e^{(T-t)A} X(t)
    Vector u;
};

struct ClosedLoopResult {
    std::vector<Vector> terminal_reductions;          // P X(T) per path
    std::vector<double> running_costs;                // ∫ g(u) ds per path
    std::vector<std::vector<ControlRecord>> records;  // first few paths only
};

ClosedLoopResult closed_loop_simulate(const ControlProblem& problem, const FeedbackPolicy& policy,
                                      double dt, std::size_t paths, std::uint64_t seed,
                                      std::size_t record_paths = 2);

using OpenLoopControl = std::function<Vector(double)>;

struct CostEstimate {
    double j = 0.0;
    double se = 0.0;
    std::size_t paths = 0;
};

CostEstimate evaluate_cost(const ControlProblem& problem, const OpenLoopControl& control,
                           double dt, std::size_t paths, std::uint64_t seed);
CostEstimate evaluate_cost(const ControlProblem& problem, const FeedbackPolicy& policy, double dt,
                           std::size_t paths, std::uint64_t seed);

struct RelationRow {
    std::string label;
    double j = 0.0;
    double se = 0.0;
    double gap = 0.0; // J - v
    bool is_feedback = false;
    bool pass = false;
};

struct RelationReport {
    double v = 0.0;
    double slack = 0.0;
    std::vector<RelationRow> rows;
    bool pass = false;
};

// Checks J(u) >= v - (3 SE + slack) for every candidate and |J(feedback) - v|
// <= 3 SE + slack. slack <= 0 selects the default 2 (dt + grid spacing) scale.
RelationReport verify_fundamental_relation(const ControlProblem& problem,
                                           const FeedbackPolicy& policy,
                                           const std::vector<std::pair<std::string,
                                                                       OpenLoopControl>>& candidates,
                                           double dt, std::size_t paths, std::uint64_t seed,
                                           double slack = 0.0);

} // namespace delayou
