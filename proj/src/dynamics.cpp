#include "delayou/dynamics.hpp"

#include <cmath>

namespace delayou {

BrownianPath BrownianPath::make(int n, double T, double dt, std::uint64_t seed,
                                std::uint64_t stream) {
    BrownianPath p;
    p.dt = dt;
    p.seed = seed;
    p.stream = stream;
    CounterRng rng(seed, stream);
    const int steps = int(std::llround(T / dt));
    const double sq = std::sqrt(dt);
    p.increments.resize(steps);
    for (int k = 0; k < steps; ++k) {
        Vector dw(n);
        for (int i = 0; i < n; ++i) dw[i] = sq * rng.normal();
        p.increments[k] = dw;
    }
    return p;
}

double aligned_step(double d, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    int cells = std::max(2, int(std::llround(d / dt)));
    return d / cells;
}

PathState::PathState(const DelaySystem& sys, const Segment& x, double dt)
    : sys_(&sys), zero_(Vector::Zero(sys.n)) {
    dt_ = aligned_step(sys.d, dt);
    hist_cells_ = int(std::llround(sys.d / dt_));
    Segment init = (x.grid_size() == hist_cells_ && std::abs(x.d - sys.d) < 1e-12)
                       ? x
                       : x.resampled(hist_cells_);
    history_.reserve(std::size_t(hist_cells_) + 256);
    // tail nodes cover [-d, 0); the slot at 0 is the present value.
    for (int j = 0; j < hist_cells_; ++j) history_.push_back(init.tail[j]);
    history_.push_back(init.head);
}

Vector PathState::history_at(double theta) const {
    double u = double(history_.size() - 1) + theta / dt_;
    if (u <= 0.0) return history_.front();
    std::size_t j = std::size_t(u);
    if (j + 1 >= history_.size()) return history_.back();
    double w = u - double(j);
    return (1.0 - w) * history_[j] + w * history_[j + 1];
}

Vector PathState::delay_integral() const {
    Vector acc = Vector::Zero(sys_->n);
    for (const auto& a : sys_->a1.atoms) acc += a.weight * history_at(a.theta);
    if (!sys_->a1.density.empty()) {
        const double h = dt_;
        const std::size_t last = history_.size() - 1;
        for (int j = 0; j <= hist_cells_; ++j) {
            double w = (j == 0 || j == hist_cells_) ? 0.5 : 1.0;
            double theta = -sys_->d + j * h;
            acc += w * h * (sys_->a1.density_at(theta) * history_[last - hist_cells_ + j]);
        }
    }
    return acc;
}

Vector PathState::reduce(const PastFunctional& pf) const {
    Vector out = pf.alpha0 * head();
    for (const auto& a : pf.tail_measure.atoms) out += a.weight * history_at(a.theta);
    if (!pf.tail_measure.density.empty()) {
        const double h = dt_;
        const std::size_t last = history_.size() - 1;
        for (int j = 0; j <= hist_cells_; ++j) {
            double w = (j == 0 || j == hist_cells_) ? 0.5 : 1.0;
            double theta = -sys_->d + j * h;
            out += w * h * (pf.tail_measure.density_at(theta) * history_[last - hist_cells_ + j]);
        }
    }
    return out;
}

void PathState::step(const Vector& dW, const Vector& sigma_extra) {
    Vector drift = sys_->a0 * head() + delay_integral() + sys_->sigma * sigma_extra;
    history_.push_back(head() + dt_ * drift + sys_->sigma * dW);
    ++steps_taken_;
}

Segment PathState::segment() const {
    Segment s;
    s.d = sys_->d;
    s.head = head();
    s.tail.resize(std::size_t(hist_cells_) + 1);
    const std::size_t last = history_.size() - 1;
    for (int j = 0; j <= hist_cells_; ++j) s.tail[j] = history_[last - hist_cells_ + j];
    return s;
}

namespace {

int checked_steps(double t, double dt) {
    if (t < 0.0) throw std::domain_error("evolution time must be nonnegative");
    int steps = int(std::llround(t / dt));
    if (std::abs(steps * dt - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument("dt does not divide t (step mismatch)");
    return steps;
}

} // namespace

Segment evolve_deterministic(const DelaySystem& sys, const Segment& x, double t, double dt) {
    PathState ps(sys, x, dt);
    int steps = checked_steps(t, ps.dt());
    for (int k = 0; k < steps; ++k) ps.step_deterministic();
    return ps.segment();
}

Segment fundamental_response(const DelaySystem& sys, const Vector& eta, double t, double dt,
                             int tail_grid) {
    int N = tail_grid > 0 ? tail_grid : std::max(2, int(std::llround(sys.d / dt)));
    Segment x = Segment::constant(sys.n, sys.d, N, sys.sigma * eta, Vector::Zero(sys.n));
    return evolve_deterministic(sys, x, t, dt);
}

std::vector<Segment> simulate_ou(const DelaySystem& sys, const Segment& x, double T, double dt,
                                 const BrownianPath& noise) {
    return simulate_controlled(sys, x, nullptr, ControlSignal(), T, dt, noise);
}

std::vector<Segment> simulate_controlled(const DelaySystem& sys, const Segment& x,
                                         const ReducedDrift* drift, const ControlSignal& control,
                                         double T, double dt, const BrownianPath& noise) {
    PathState ps(sys, x, dt);
    int steps = checked_steps(T, ps.dt());
    if (int(noise.increments.size()) < steps)
        throw std::invalid_argument("noise does not cover [0, T] at step dt");
    std::vector<Segment> out;
    out.reserve(std::size_t(steps) + 1);
    out.push_back(ps.segment());
    Vector extra = Vector::Zero(sys.n);
    for (int k = 0; k < steps; ++k) {
        extra.setZero();
        if (drift) extra += drift->bbar(ps.time(), ps.reduce(drift->pf));
        if (control) extra += control(ps.time(), ps);
        ps.step(noise.increments[std::size_t(k)], extra);
        out.push_back(ps.segment());
    }
    return out;
}

double girsanov_weight(const DelaySystem& sys, const ReducedDrift& drift,
                       const std::vector<Segment>& ou_path, const BrownianPath& noise) {
    if (ou_path.size() < 2 || noise.increments.size() + 1 < ou_path.size())
        throw std::invalid_argument("path / noise length mismatch");
    (void)sys;
    double log_w = 0.0;
    const double dt = noise.dt;
    for (std::size_t k = 0; k + 1 < ou_path.size(); ++k) {
        double t = double(k) * dt;
        Vector b = drift.bbar(t, apply_reduction(drift.pf, ou_path[k]));
        log_w += b.dot(noise.increments[k]) - 0.5 * b.squaredNorm() * dt;
    }
    return std::exp(log_w);
}

OuRunResult run_ou_path_with_weight(const DelaySystem& sys, const Segment& x,
                                    const PastFunctional& observe_pf, const ReducedDrift* drift,
                                    double T, double dt, std::uint64_t seed,
                                    std::uint64_t stream) {
    PathState ps(sys, x, dt);
    int steps = checked_steps(T, ps.dt());
    CounterRng rng(seed, stream);
    const double sq = std::sqrt(ps.dt());
    Vector dw(sys.n);
    double log_w = 0.0;
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < sys.n; ++i) dw[i] = sq * rng.normal();
        if (drift) {
            Vector b = drift->bbar(ps.time(), ps.reduce(drift->pf));
            log_w += b.dot(dw) - 0.5 * b.squaredNorm() * ps.dt();
        }
        ps.step(dw, Vector::Zero(sys.n));
    }
    return {ps.reduce(observe_pf), log_w};
}

Vector run_controlled_path(const DelaySystem& sys, const Segment& x,
                           const PastFunctional& observe_pf, const ReducedDrift* drift,
                           const ControlSignal& control, double T, double dt, std::uint64_t seed,
                           std::uint64_t stream) {
    PathState ps(sys, x, dt);
    int steps = checked_steps(T, ps.dt());
    CounterRng rng(seed, stream);
    const double sq = std::sqrt(ps.dt());
    Vector dw(sys.n);
    Vector extra = Vector::Zero(sys.n);
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < sys.n; ++i) dw[i] = sq * rng.normal();
        extra.setZero();
        if (drift) extra += drift->bbar(ps.time(), ps.reduce(drift->pf));
        if (control) extra += control(ps.time(), ps);
        ps.step(dw, extra);
    }
    return ps.reduce(observe_pf);
}

} // namespace delayou
