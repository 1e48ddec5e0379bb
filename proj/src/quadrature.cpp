#include "delayou/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace delayou {

namespace {

// Golub-Welsch: eigen-decompose the Jacobi matrix of the recurrence.
void golub_welsch(const std::vector<double>& offdiag, double weight_total,
                  std::vector<double>& nodes, std::vector<double>& weights) {
    const int m = int(offdiag.size()) + 1;
    Matrix J = Matrix::Zero(m, m);
    for (int k = 0; k + 1 < m; ++k) {
        J(k, k + 1) = offdiag[std::size_t(k)];
        J(k + 1, k) = offdiag[std::size_t(k)];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    nodes.resize(std::size_t(m));
    weights.resize(std::size_t(m));
    for (int i = 0; i < m; ++i) {
        nodes[std::size_t(i)] = es.eigenvalues()[i];
        double v0 = es.eigenvectors()(0, i);
        weights[std::size_t(i)] = weight_total * v0 * v0;
    }
}

std::mutex g_cache_mutex;

} // namespace

const GaussLegendre& GaussLegendre::of_order(int m) {
    if (m < 2) throw std::invalid_argument("Gauss-Legendre order must be >= 2");
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    static std::map<int, GaussLegendre> cache;
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    std::vector<double> off(std::size_t(m) - 1);
    for (int k = 1; k < m; ++k) off[std::size_t(k) - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    GaussLegendre rule;
    golub_welsch(off, 2.0, rule.nodes, rule.weights);
    return cache.emplace(m, std::move(rule)).first->second;
}

const GaussHermite& GaussHermite::of_order(int m) {
    if (m < 2) throw std::invalid_argument("Gauss-Hermite order must be >= 2");
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    static std::map<int, GaussHermite> cache;
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    // Physicists' recurrence; rescale x -> sqrt(2) x so weights integrate N(0,1).
    std::vector<double> off(std::size_t(m) - 1);
    for (int k = 1; k < m; ++k) off[std::size_t(k) - 1] = std::sqrt(0.5 * k);
    GaussHermite rule;
    golub_welsch(off, 1.0, rule.nodes, rule.weights);
    for (auto& x : rule.nodes) x *= std::sqrt(2.0);
    return cache.emplace(m, std::move(rule)).first->second;
}

GaussHermiteTensor GaussHermiteTensor::make(int n, int order_1d) {
    const GaussHermite& rule = GaussHermite::of_order(order_1d);
    GaussHermiteTensor out;
    out.dim = n;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= rule.nodes.size();
    out.nodes.reserve(total);
    out.weights.reserve(total);
    std::vector<std::size_t> idx(std::size_t(n), 0);
    for (std::size_t p = 0; p < total; ++p) {
        Vector z(n);
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            z[i] = rule.nodes[idx[std::size_t(i)]];
            w *= rule.weights[idx[std::size_t(i)]];
        }
        out.nodes.push_back(z);
        out.weights.push_back(w);
        for (int i = 0; i < n; ++i) {
            if (++idx[std::size_t(i)] < rule.nodes.size()) break;
            idx[std::size_t(i)] = 0;
        }
    }
    return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

double fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.size() < 2)
        throw std::invalid_argument("slope fit needs matching samples, >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0 || v[i] <= 0.0) throw std::domain_error("slope fit needs positive data");
        double x = std::log(t[i]), y = std::log(v[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-14) throw std::domain_error("singular slope fit");
    return (n * sxy - sx * sy) / denom;
}

Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace delayou
