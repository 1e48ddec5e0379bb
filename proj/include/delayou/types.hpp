#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace delayou {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Matrix-valued atom of a delay measure, located at theta in [-d, 0].
struct MeasureAtom {
    double theta = 0.0;
    Matrix weight;
};

// Finite matrix-valued regular measure on [-d, 0]: point atoms plus a
// piecewise-linear density sampled on a uniform mesh of [-d, 0].
// An empty density vector means zero density.
struct DelayMeasure {
    std::vector<MeasureAtom> atoms;
    std::vector<Matrix> density; // values at -d + j*d/M, j = 0..M (size M+1, M >= 1)
    double d = 0.0;

    bool is_zero() const { return atoms.empty() && density.empty(); }

    bool has_atom_at_zero(double tol = 1e-12) const {
        for (const auto& a : atoms)
            if (std::abs(a.theta) <= tol && a.weight.cwiseAbs().maxCoeff() > 0.0) return true;
        return false;
    }

    Matrix density_at(double theta) const {
        if (density.empty()) throw std::logic_error("measure has no density part");
        const int m = int(density.size()) - 1;
        double u = (theta + d) / d * m;
        if (u <= 0.0) return density.front();
        if (u >= double(m)) return density.back();
        int j = int(u);
        double w = u - j;
        return (1.0 - w) * density[j] + w * density[j + 1];
    }

    double total_variation() const;
};

// State of the delay system: present value plus the past trajectory on
// [-d, 0), sampled on a uniform grid and interpolated piecewise linearly.
// tail[j] sits at theta_j = -d + j*d/N; tail[N] is the left limit at 0^-.
struct Segment {
    Vector head;
    std::vector<Vector> tail;
    double d = 0.0;

    int n() const { return int(head.size()); }
    int grid_size() const { return int(tail.size()) - 1; }
    double spacing() const { return d / grid_size(); }

    static Segment constant(int n, double d, int N, const Vector& head, const Vector& tail_value);
    static Segment zero(int n, double d, int N);

    Vector tail_at(double theta) const {
        const int N = grid_size();
        double u = (theta + d) / d * N;
        if (u <= 0.0) return tail.front();
        if (u >= double(N)) return tail.back();
        int j = int(u);
        double w = u - j;
        return (1.0 - w) * tail[j] + w * tail[j + 1];
    }

    Segment resampled(int N) const;
    void validate() const;
};

Segment operator+(const Segment& a, const Segment& b);
Segment operator*(double c, const Segment& a);

// The linear delay system dy = a0 y dt + (∫ y(t+θ) a1(dθ)) dt + σ dW.
struct DelaySystem {
    int n = 1;
    double d = 1.0;
    Matrix a0;
    DelayMeasure a1;
    Matrix sigma;
    double sigma_cond_limit = 1e12;

    void validate() const;
};

} // namespace delayou
