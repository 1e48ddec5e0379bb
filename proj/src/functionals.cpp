#include "delayou/functionals.hpp"

#include <cmath>

namespace delayou {

void PastFunctional::validate(int n, double d) const {
    if (alpha0.rows() != n || alpha0.cols() != n)
        throw std::invalid_argument("alpha0 must be n x n");
    if (tail_measure.has_atom_at_zero())
        throw std::invalid_argument("tail measure must carry no atom at 0; put it into alpha0");
    for (const auto& a : tail_measure.atoms)
        if (a.theta < -d - 1e-12 || a.theta > 1e-12)
            throw std::invalid_argument("tail measure atom outside [-d, 0]");
    if (regime == Regime::A1) {
        Eigen::FullPivLU<Matrix> lu(alpha0);
        if (!lu.isInvertible())
            throw std::invalid_argument("regime A1 requires alpha0 invertible");
    } else {
        if (alpha0.cwiseAbs().maxCoeff() > 0.0)
            throw std::invalid_argument("regime A2 requires alpha0 = 0");
        if (tail_measure.density.empty())
            throw std::invalid_argument("regime A2 requires a density with invertible Cesàro limit");
        Eigen::FullPivLU<Matrix> lu(cesaro_density_average(1e-6 * d));
        if (!lu.isInvertible())
            throw std::invalid_argument("regime A2 density Cesàro limit at 0 is singular");
    }
}

Matrix PastFunctional::cesaro_density_average(double s) const {
    const int steps = 64;
    Matrix acc = Matrix::Zero(alpha0.rows(), alpha0.cols());
    double h = s / steps;
    for (int j = 0; j <= steps; ++j) {
        double w = (j == 0 || j == steps) ? 0.5 : 1.0;
        acc += w * h * tail_measure.density_at(-s + j * h);
    }
    return acc / s;
}

Vector apply_reduction(const PastFunctional& pf, const Segment& x) {
    Vector out = pf.alpha0 * x.head;
    for (const auto& a : pf.tail_measure.atoms) out += a.weight * x.tail_at(a.theta);
    if (!pf.tail_measure.density.empty()) {
        const int N = x.grid_size();
        const double h = x.spacing();
        for (int j = 0; j <= N; ++j) {
            double w = (j == 0 || j == N) ? 0.5 : 1.0;
            out += w * h * (pf.tail_measure.density_at(-x.d + j * h) * x.tail[j]);
        }
    }
    return out;
}

double observe(const Observable& obs, const Segment& x) {
    return obs.phibar(apply_reduction(obs.pf, x));
}

Matrix ReducedDrift::jacobian_at(double t, const Vector& y) const {
    if (jacobian) return jacobian(t, y);
    const int n = int(y.size());
    const double h = 1e-6 * (1.0 + y.cwiseAbs().maxCoeff());
    Matrix jac(n, n);
    for (int j = 0; j < n; ++j) {
        Vector yp = y, ym = y;
        yp[j] += h;
        ym[j] -= h;
        jac.col(j) = (bbar(t, yp) - bbar(t, ym)) / (2.0 * h);
    }
    return jac;
}

Vector reduced_drift_eval(const ReducedDrift& drift, double t, const Segment& x) {
    return drift.bbar(t, apply_reduction(drift.pf, x));
}

} // namespace delayou
