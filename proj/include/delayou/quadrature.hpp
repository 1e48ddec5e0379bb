#pragma once

#include <vector>

#include "delayou/types.hpp"

namespace delayou {

// Nodes/weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussLegendre& of_order(int m); // cached

    // Integrate f over [a, b].
    template <class F>
    double integrate(double a, double b, F&& f) const {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
        return half * acc;
    }
};

// Probabilists' Gauss-Hermite: Σ w_i f(z_i) ≈ E f(Z), Z ~ N(0,1); weights sum to 1.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussHermite& of_order(int m); // cached
};

// Tensorized standard-normal rule on R^n (n small; points m^n).
struct GaussHermiteTensor {
    int dim = 1;
    std::vector<Vector> nodes;
    std::vector<double> weights;

    static GaussHermiteTensor make(int n, int order_1d);
};

double normal_cdf(double z);
double normal_pdf(double z);

// Least-squares slope of log(v) against log(t).
double fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& v);

// Symmetric PSD square root (eigenvalues clipped at 0).
Matrix psd_sqrt(const Matrix& m);

} // namespace delayou
