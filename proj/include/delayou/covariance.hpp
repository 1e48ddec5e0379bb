#pragma once

#include <vector>

#include "delayou/functionals.hpp"
#include "delayou/types.hpp"

namespace delayou {

// M(r) = P e^{rA} G sampled on a uniform grid of [0, t_max]; column j is the
// reduction of the fundamental response to sigma * e_j.
struct ResponsePath {
    double dt = 0.0;
    std::vector<Matrix> values;

    double t_max() const { return dt * double(values.size() - 1); }
    Matrix at(double r) const;
};

ResponsePath response_path(const DelaySystem& sys, const PastFunctional& pf, double t_max,
                           double dt);

Matrix response_matrix(const DelaySystem& sys, const PastFunctional& pf, double s, double dt);

// Reduced covariance bar Q_t^s = ∫_s^t M(r) M(r)^T dr.
struct CovMatrix {
    Matrix value;
    double s = 0.0;
    double t = 0.0;
    int quad_nodes = 0;

    double lambda_min() const;
    double lambda_max() const;
    Matrix sqrt() const;
    Matrix inv_sqrt(double floor = 1e-12) const;
};

CovMatrix covariance(const DelaySystem& sys, const PastFunctional& pf, double s, double t,
                     int quad_nodes, double dt);
CovMatrix covariance_from_path(const ResponsePath& mp, double s, double t, int quad_nodes);

// Cumulative ∫_0^t M M^T on the response grid; O(1) window lookups used by
// the convolution quadratures.
struct CovarianceTable {
    double dt = 0.0;
    std::vector<Matrix> cumulative;
    ResponsePath responses;

    static CovarianceTable build(const DelaySystem& sys, const PastFunctional& pf, double t_max,
                                 double dt);
    Matrix window(double s, double t) const;
};

struct RateProbe {
    std::vector<double> t;
    std::vector<double> lambda_min;
    double slope = 0.0;
};

// Fitted slope of log lambda_min(bar Q_t) against log t; ~1 under A1, ~3 under A2.
RateProbe smoothing_rate_probe(const DelaySystem& sys, const PastFunctional& pf,
                               const std::vector<double>& t_list, int quad_nodes, double dt);

// Numerical stand-in for the small-time lower-bound certificate: fits
// c_hat = min lambda_min(bar Q_t^s)/(t-s) over small windows and reports the
// largest t for which every probed window keeps at least half of it.
struct TbarEstimate {
    double t_bar = 0.0;
    double c_hat = 0.0;
    bool certified = false;
};

TbarEstimate estimate_tbar(const DelaySystem& sys, const PastFunctional& pf, double t_probe_max,
                           int probe_points, int quad_nodes, double dt);

} // namespace delayou
