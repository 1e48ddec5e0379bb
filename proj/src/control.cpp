#include "delayou/control.hpp"

#include <cmath>
#include <stdexcept>

#include "delayou/dynamics.hpp"
#include "delayou/parallel.hpp"
#include "delayou/rng.hpp"

namespace delayou {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-15) return true;
        if (a[i] > b[i] + 1e-15) return false;
    }
    return false;
}

// Golden-section minimization of a unimodal-ish 1-d slice.
double golden_min(const std::function<double(double)>& f, double a, double b) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

Vector box_argmin(const RunningCost& g, const AdmissibleSet& U, const Vector& z) {
    const int n = int(z.size());
    if (g.quadratic) {
        Vector u(n);
        for (int i = 0; i < n; ++i) u[i] = std::clamp(-0.5 * z[i], U.lo[i], U.hi[i]);
        return u;
    }
    auto objective = [&](const Vector& u) { return g.g(u) + z.dot(u); };
    Vector u = 0.5 * (U.lo + U.hi);
    for (int pass = 0; pass < 3; ++pass) {
        for (int a = 0; a < n; ++a) {
            const int grid = 33;
            double best = U.lo[a], best_val = 0.0;
            for (int k = 0; k < grid; ++k) {
                double ua = U.lo[a] + (U.hi[a] - U.lo[a]) * double(k) / (grid - 1);
                Vector trial = u;
                trial[a] = ua;
                double val = objective(trial);
                if (k == 0 || val < best_val) {
                    best_val = val;
                    best = ua;
                }
            }
            double h = (U.hi[a] - U.lo[a]) / (grid - 1);
            double left = std::max(U.lo[a], best - h), right = std::min(U.hi[a], best + h);
            u[a] = golden_min(
                [&](double ua) {
                    Vector trial = u;
                    trial[a] = ua;
                    return objective(trial);
                },
                left, right);
        }
    }
    return u;
}

} // namespace

Vector AdmissibleSet::clamp(const Vector& u) const {
    if (is_finite()) {
        Vector best = finite.front();
        double best_d = (u - best).norm();
        for (const auto& c : finite) {
            double d = (u - c).norm();
            if (d < best_d || (d == best_d && lex_less(c, best))) {
                best = c;
                best_d = d;
            }
        }
        return best;
    }
    Vector out(u.size());
    for (int i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], lo[i], hi[i]);
    return out;
}

Vector select_upsilon(const RunningCost& g, const AdmissibleSet& U, const Vector& z) {
    if (U.is_finite()) {
        Vector best = U.finite.front();
        double best_val = g.g(best) + z.dot(best);
        for (const auto& u : U.finite) {
            double val = g.g(u) + z.dot(u);
            if (val < best_val - 1e-15 ||
                (std::abs(val - best_val) <= 1e-12 && lex_less(u, best))) {
                best = u;
                best_val = val;
            }
        }
        return best;
    }
    return box_argmin(g, U, z);
}

double hamiltonian(const RunningCost& g, const AdmissibleSet& U, const Vector& z) {
    Vector u = select_upsilon(g, U, z);
    return g.g(u) + z.dot(u);
}

Nonlinearity hamiltonian_nonlinearity(const RunningCost& g, const AdmissibleSet& U) {
    Nonlinearity psi;
    psi.name = "hamiltonian:" + g.name;
    psi.gradient_only = true;
    double radius = 0.0;
    if (U.is_finite()) {
        for (const auto& u : U.finite) radius = std::max(radius, u.cwiseAbs().maxCoeff());
    } else {
        radius = std::max(U.lo.cwiseAbs().maxCoeff(), U.hi.cwiseAbs().maxCoeff());
    }
    psi.lipschitz = radius;
    psi.psi = [g, U](double, const Vector& z) { return hamiltonian(g, U, z); };
    return psi;
}

ReducedFlowTable ReducedFlowTable::build(const DelaySystem& sys, const PastFunctional& pf,
                                         double T, double dt) {
    ReducedFlowTable tab;
    tab.dt_ = aligned_step(sys.d, dt);
    tab.cells_ = int(std::llround(sys.d / tab.dt_));
    tab.n_ = sys.n;
    const int steps = int(std::llround(T / tab.dt_));
    if (std::abs(steps * tab.dt_ - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("dt does not divide T (step mismatch)");
    const int slots = tab.cells_ + 1; // tail nodes 0..cells-1, then the head
    const int dim = sys.n * slots;
    tab.weights_.assign(std::size_t(steps) + 1, Matrix::Zero(sys.n, dim));
    for (int slot = 0; slot < slots; ++slot) {
        for (int comp = 0; comp < sys.n; ++comp) {
            Segment basis = Segment::zero(sys.n, sys.d, tab.cells_);
            if (slot == tab.cells_)
                basis.head[comp] = 1.0;
            else
                basis.tail[std::size_t(slot)][comp] = 1.0;
            PathState ps(sys, basis, tab.dt_);
            const int col = slot * sys.n + comp;
            tab.weights_[0].col(col) = ps.reduce(pf);
            for (int m = 1; m <= steps; ++m) {
                ps.step_deterministic();
                tab.weights_[std::size_t(m)].col(col) = ps.reduce(pf);
            }
        }
    }
    for (int col = 0; col < dim; ++col) {
        bool any = false;
        for (const auto& w : tab.weights_)
            if (w.col(col).cwiseAbs().maxCoeff() > 1e-14) {
                any = true;
                break;
            }
        if (any) tab.active_.push_back(col);
    }
    return tab;
}

Vector ReducedFlowTable::reduce_future(const PathState& ps, int m) const {
    if (m < 0 || m >= int(weights_.size())) throw std::domain_error("flow horizon out of range");
    Segment seg = ps.segment();
    Vector y = Vector::Zero(n_);
    const Matrix& w = weights_[std::size_t(m)];
    for (int col : active_) {
        int slot = col / n_, comp = col % n_;
        double v = slot == cells_ ? seg.head[comp] : seg.tail[std::size_t(slot)][comp];
        if (v != 0.0) y += w.col(col) * v;
    }
    return y;
}

namespace {

struct PathOutcome {
    Vector terminal;
    double running = 0.0;
    std::vector<ControlRecord> record;
};

// One simulated path under either an open-loop signal or the feedback policy.
PathOutcome run_cost_path(const ControlProblem& pr, const OpenLoopControl* open_loop,
                          const FeedbackPolicy* policy, const ReducedFlowTable* table, double dt,
                          std::uint64_t seed, std::uint64_t stream, bool keep_record) {
    PathState ps(pr.sys, pr.x0, dt);
    const double dt_a = ps.dt();
    const int steps = int(std::llround(pr.T / dt_a));
    CounterRng rng(seed, stream);
    const double sq = std::sqrt(dt_a);
    Vector dw(pr.sys.n);
    PathOutcome out;
    double first_time = policy && policy->w.times.size() > 1 ? policy->w.times[1] : dt_a;
    for (int k = 0; k < steps; ++k) {
        Vector u;
        Vector y;
        if (policy) {
            const int m = steps - k;
            const double tau = m * dt_a;
            y = table->reduce_future(ps, m);
            double t_eff = std::max(tau, first_time);
            Vector gradG = policy->w.gbarG_at(tau, y) / std::sqrt(t_eff);
            u = select_upsilon(policy->g, policy->U, gradG);
        } else {
            u = pr.U.clamp((*open_loop)(ps.time()));
        }
        if (keep_record) {
            ControlRecord rec;
            rec.t = ps.time();
            rec.y = policy ? y : ps.reduce(pr.pf);
            rec.u = u;
            out.record.push_back(std::move(rec));
        }
        out.running += pr.g.g(u) * dt_a; // left-endpoint rule (predictable u)
        for (int j = 0; j < pr.sys.n; ++j) dw[j] = sq * rng.normal();
        ps.step(dw, u);
    }
    out.terminal = ps.reduce(pr.pf);
    return out;
}

} // namespace

ClosedLoopResult closed_loop_simulate(const ControlProblem& problem, const FeedbackPolicy& policy,
                                      double dt, std::size_t paths, std::uint64_t seed,
                                      std::size_t record_paths) {
    const double dt_a = aligned_step(problem.sys.d, dt);
    ReducedFlowTable table = ReducedFlowTable::build(problem.sys, problem.pf, problem.T, dt_a);
    ClosedLoopResult out;
    out.terminal_reductions.resize(paths);
    out.running_costs.resize(paths);
    out.records.resize(std::min(record_paths, paths));
    parallel_for(paths, [&](std::size_t i) {
        PathOutcome po = run_cost_path(problem, nullptr, &policy, &table, dt_a, seed, i,
                                       i < out.records.size());
        out.terminal_reductions[i] = po.terminal;
        out.running_costs[i] = po.running;
        if (i < out.records.size()) out.records[i] = std::move(po.record);
    });
    return out;
}

CostEstimate evaluate_cost(const ControlProblem& problem, const OpenLoopControl& control,
                           double dt, std::size_t paths, std::uint64_t seed) {
    std::vector<double> samples(paths);
    parallel_for(paths, [&](std::size_t i) {
        PathOutcome po = run_cost_path(problem, &control, nullptr, nullptr, dt, seed, i, false);
        samples[i] = po.running + problem.phibar(po.terminal);
    });
    MeanSe m = mean_and_se(samples);
    return {m.mean, m.se, paths};
}

CostEstimate evaluate_cost(const ControlProblem& problem, const FeedbackPolicy& policy, double dt,
                           std::size_t paths, std::uint64_t seed) {
    ClosedLoopResult r = closed_loop_simulate(problem, policy, dt, paths, seed, 0);
    std::vector<double> samples(paths);
    for (std::size_t i = 0; i < paths; ++i)
        samples[i] = r.running_costs[i] + problem.phibar(r.terminal_reductions[i]);
    MeanSe m = mean_and_se(samples);
    return {m.mean, m.se, paths};
}

RelationReport verify_fundamental_relation(
    const ControlProblem& problem, const FeedbackPolicy& policy,
    const std::vector<std::pair<std::string, OpenLoopControl>>& candidates, double dt,
    std::size_t paths, std::uint64_t seed, double slack) {
    RelationReport rep;
    const double dt_a = aligned_step(problem.sys.d, dt);
    SigmaEval ev = sigma_eval(policy.w, problem.sys, problem.pf, problem.T, problem.x0, dt_a);
    rep.v = ev.value;
    if (slack <= 0.0) {
        double sp = 0.0;
        for (int a = 0; a < policy.w.grid.dim(); ++a)
            sp = std::max(sp, policy.w.grid.spacing(a));
        slack = 2.0 * (dt_a + sp);
    }
    rep.slack = slack;
    rep.pass = true;
    for (const auto& [label, ctrl] : candidates) {
        CostEstimate c = evaluate_cost(problem, ctrl, dt_a, paths, seed);
        RelationRow row;
        row.label = label;
        row.j = c.j;
        row.se = c.se;
        row.gap = c.j - rep.v;
        row.pass = row.gap >= -(3.0 * c.se + slack);
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(std::move(row));
    }
    CostEstimate fb = evaluate_cost(problem, policy, dt_a, paths, seed);
    RelationRow row;
    row.label = "feedback";
    row.j = fb.j;
    row.se = fb.se;
    row.gap = fb.j - rep.v;
    row.is_feedback = true;
    row.pass = std::abs(row.gap) <= 3.0 * fb.se + slack;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(std::move(row));
    return rep;
}

} // namespace delayou
