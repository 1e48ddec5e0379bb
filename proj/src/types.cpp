#include "delayou/types.hpp"

#include <cmath>

namespace delayou {

double DelayMeasure::total_variation() const {
    double tv = 0.0;
    for (const auto& a : atoms) tv += a.weight.cwiseAbs().sum();
    if (!density.empty()) {
        const int m = int(density.size()) - 1;
        const double h = d / m;
        for (int j = 0; j <= m; ++j) {
            double w = (j == 0 || j == m) ? 0.5 : 1.0;
            tv += w * h * density[j].cwiseAbs().sum();
        }
    }
    return tv;
}

Segment Segment::constant(int n, double d, int N, const Vector& head, const Vector& tail_value) {
    Segment s;
    s.head = head;
    s.d = d;
    s.tail.assign(std::size_t(N) + 1, tail_value);
    (void)n;
    return s;
}

Segment Segment::zero(int n, double d, int N) {
    return constant(n, d, N, Vector::Zero(n), Vector::Zero(n));
}

Segment Segment::resampled(int N) const {
    Segment out;
    out.head = head;
    out.d = d;
    out.tail.resize(std::size_t(N) + 1);
    for (int j = 0; j <= N; ++j) out.tail[j] = tail_at(-d + double(j) * d / N);
    return out;
}

void Segment::validate() const {
    if (d <= 0.0) throw std::invalid_argument("segment delay horizon must be positive");
    if (grid_size() < 2) throw std::invalid_argument("segment tail grid needs N >= 2");
    if (!head.allFinite()) throw std::invalid_argument("segment head not finite");
    for (const auto& v : tail)
        if (!v.allFinite() || v.size() != head.size())
            throw std::invalid_argument("segment tail not finite / dimension mismatch");
}

Segment operator+(const Segment& a, const Segment& b) {
    if (a.grid_size() != b.grid_size() || a.d != b.d)
        throw std::invalid_argument("segment grids differ");
    Segment out = a;
    out.head += b.head;
    for (std::size_t j = 0; j < out.tail.size(); ++j) out.tail[j] += b.tail[j];
    return out;
}

Segment operator*(double c, const Segment& a) {
    Segment out = a;
    out.head *= c;
    for (auto& v : out.tail) v *= c;
    return out;
}

void DelaySystem::validate() const {
    if (n < 1) throw std::invalid_argument("system dimension must be >= 1");
    if (d <= 0.0) throw std::invalid_argument("delay horizon d must be positive");
    if (a0.rows() != n || a0.cols() != n || !a0.allFinite())
        throw std::invalid_argument("a0 must be a finite n x n matrix");
    if (sigma.rows() != n || sigma.cols() != n || !sigma.allFinite())
        throw std::invalid_argument("sigma must be a finite n x n matrix");
    if (a1.has_atom_at_zero())
        throw std::invalid_argument("a1 must have no atom at theta = 0 (standing condition a1({0}) = 0)");
    for (const auto& a : a1.atoms)
        if (a.theta < -d - 1e-12 || a.theta > 1e-12)
            throw std::invalid_argument("a1 atom location outside [-d, 0]");
    Eigen::JacobiSVD<Matrix> svd(sigma);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > sigma_cond_limit)
        throw std::invalid_argument("sigma must be invertible (condition number bound exceeded)");
}

} // namespace delayou
