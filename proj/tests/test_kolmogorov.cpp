#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "delayou/catalog.hpp"
#include "delayou/dynamics.hpp"
#include "delayou/kolmogorov.hpp"
#include "delayou/smoothing.hpp"

using namespace delayou;

namespace {

SpaceGrid grid1d(double halfwidth, int pts) {
    return SpaceGrid::box(Vector::Constant(1, -halfwidth), Vector::Constant(1, halfwidth), pts);
}

// The exact linear solution for S1 with phibar = cos in the reduced variables:
// wbar(t, y) = e^{-t/2} cos y, gbarG(t, y) = -sqrt(t) e^{-t/2} sin y.
SigmaFunction s1_cos_sigma(double T, int time_pts, double halfwidth, int space_pts) {
    SigmaFunction g;
    g.grid = grid1d(halfwidth, space_pts);
    for (int k = 0; k <= time_pts; ++k) g.times.push_back(T * k / time_pts);
    for (double t : g.times) {
        std::vector<double> w(g.grid.size());
        std::vector<Vector> gb(g.grid.size());
        for (std::size_t j = 0; j < g.grid.size(); ++j) {
            double y = g.grid.point(j)[0];
            w[j] = std::exp(-t / 2.0) * std::cos(y);
            gb[j] = Vector::Constant(1, -std::sqrt(t) * std::exp(-t / 2.0) * std::sin(y));
        }
        g.wbar.push_back(std::move(w));
        g.gbarG.push_back(std::move(gb));
    }
    return g;
}

} // namespace

TEST_CASE("space grid interpolation reproduces low-degree polynomials") {
    SpaceGrid g = grid1d(2.0, 41);
    std::vector<double> lin(g.size()), quad(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        double y = g.point(j)[0];
        lin[j] = 3.0 * y - 1.0;
        quad[j] = y * y;
    }
    bool clamped = false;
    CHECK(g.interpolate(lin, Vector::Constant(1, 0.637), &clamped) ==
          doctest::Approx(3.0 * 0.637 - 1.0).epsilon(1e-12));
    CHECK(!clamped);
    CHECK(g.interpolate(quad, Vector::Constant(1, -1.113)) ==
          doctest::Approx(1.113 * 1.113).epsilon(1e-12));
    // Outside the box: clamps and flags.
    CHECK(g.interpolate(lin, Vector::Constant(1, 5.0), &clamped) ==
          doctest::Approx(3.0 * 2.0 - 1.0).epsilon(1e-12));
    CHECK(clamped);
}

TEST_CASE("sigma function blends linearly in time") {
    SigmaFunction g = s1_cos_sigma(0.4, 4, 3.0, 65);
    Vector y = Vector::Constant(1, 0.5);
    double at_01 = g.value_at(0.1, y);
    CHECK(at_01 == doctest::Approx(std::exp(-0.05) * std::cos(0.5)).epsilon(1e-4));
    double mid = g.value_at(0.15, y);
    double lo = g.value_at(0.1, y), hi = g.value_at(0.2, y);
    CHECK(mid == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
    CHECK(g.gbarG_at(0.2, y)[0] ==
          doctest::Approx(-std::sqrt(0.2) * std::exp(-0.1) * std::sin(0.5)).epsilon(1e-4));
}

TEST_CASE("reduced_ou closed forms and the Dirac limit") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SmoothingConfig cfg;
    Vector y = Vector::Constant(1, 0.8);
    CHECK(reduced_ou(s1, head, catalog_phibar("cos"), 0.3, y, cfg) ==
          doctest::Approx(std::exp(-0.15) * std::cos(0.8)).epsilon(1e-8));
    CHECK(reduced_ou(s1, head, catalog_phibar("const"), 0.3, y, cfg) == doctest::Approx(1.0));
    // t -> 0 approaches the point evaluation.
    CHECK(reduced_ou(s1, head, catalog_phibar("tanh"), 1e-6, y, cfg) ==
          doctest::Approx(std::tanh(0.8)).epsilon(1e-4));
}

TEST_CASE("gamma convolution trivial and closed-form cases") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SmoothingConfig cfg;
    SigmaFunction g = s1_cos_sigma(0.5, 20, 6.0, 201);
    Vector y = Vector::Constant(1, 0.4);
    const double t = 0.4;

    CHECK(gamma_convolution(s1, head, g, catalog_psi("zero"), t, y, cfg) == doctest::Approx(0.0));
    CHECK(gamma_convolution(s1, head, g, catalog_psi("one"), t, y, cfg) ==
          doctest::Approx(t).epsilon(1e-10));
    // psi(v) = v/2 against g = R[cos]: the Gaussian semigroup identity collapses
    // each inner integral to Rbar(t, y), so the result is (t/2) e^{-t/2} cos y.
    double got = gamma_convolution(s1, head, g, catalog_psi("cv"), t, y, cfg);
    CHECK(got == doctest::Approx(0.5 * t * std::exp(-t / 2.0) * std::cos(y[0])).epsilon(1e-4));
}

TEST_CASE("gamma gradient symmetry, FD consistency, and the certificate guard") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SmoothingConfig cfg;
    SigmaFunction g = s1_cos_sigma(0.5, 20, 6.0, 201);
    Vector y = Vector::Constant(1, 0.4);
    Vector v = Vector::Constant(1, 1.0);
    const double t = 0.4;

    // Constant psi: odd kernel against the centered Gaussian.
    CHECK(std::abs(gamma_gradient(s1, head, g, catalog_psi("one"), t, y, v, cfg)) < 1e-10);

    // Central FD of gamma_convolution in y along v.
    double grad = gamma_gradient(s1, head, g, catalog_psi("cv"), t, y, v, cfg);
    const double delta = 1e-4;
    double up = gamma_convolution(s1, head, g, catalog_psi("cv"), t, y + delta * v, cfg);
    double dn = gamma_convolution(s1, head, g, catalog_psi("cv"), t, y - delta * v, cfg);
    double fd = (up - dn) / (2.0 * delta);
    CHECK(grad == doctest::Approx(fd).epsilon(1e-3));

    // Lemma-style bound with a generous fitted constant.
    CHECK(std::abs(grad) <= 10.0 * (std::sqrt(t) + 1.0) * v.norm());

    // Windows beyond the certified t_bar are refused.
    CHECK_THROWS_AS(gamma_gradient(s1, head, g, catalog_psi("cv"), t, y, v, cfg, 16, 0.1),
                    std::domain_error);
}

TEST_CASE("picard with psi = 0 returns the linear solution") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SolverConfig cfg;
    cfg.T = 0.4;
    cfg.time_points = 8;
    cfg.space_points = 65;
    cfg.sigma_nodes = 12;
    cfg.picard_tol = 1e-9;
    PicardDiagnostics diag;
    SigmaFunction w = picard_solve(s1, head, catalog_phibar("cos"), catalog_psi("zero"), cfg,
                                   &diag);
    CHECK(diag.converged);
    for (double r : diag.contraction_ratios) CHECK(r < 1.0);
    // Compare grid values against reduced_ou directly.
    for (std::size_t k = 1; k < w.times.size(); k += 3) {
        for (std::size_t j = 0; j < w.grid.size(); j += 16) {
            double ref = reduced_ou(s1, head, catalog_phibar("cos"), w.times[k],
                                    w.grid.point(j), cfg.smoothing);
            CHECK(w.wbar[k][j] == doctest::Approx(ref).epsilon(1e-8));
        }
    }
    // Maximum principle: bounded by the observable's sup norm.
    for (const auto& level : w.wbar)
        for (double v : level) CHECK(std::abs(v) <= 1.0 + 1e-9);
}

TEST_CASE("picard with psi = v/2 reproduces the integrating-factor solution") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SolverConfig cfg;
    cfg.T = 0.5;
    cfg.time_points = 16;
    cfg.space_points = 81;
    cfg.sigma_nodes = 12;
    cfg.picard_tol = 1e-7;
    cfg.smoothing.dt = 5e-3;
    PicardDiagnostics diag;
    SigmaFunction w = picard_solve(s1, head, catalog_phibar("cos"), catalog_psi("cv"), cfg, &diag);
    CHECK(diag.converged);
    for (double r : diag.contraction_ratios) CHECK(r < 1.0);
    // Exact: wbar(t, y) = e^{t/2} e^{-t/2} cos y = cos y.
    double worst = 0.0;
    for (std::size_t k = 0; k < w.times.size(); ++k) {
        for (std::size_t j = 0; j < w.grid.size(); ++j) {
            double y = w.grid.point(j)[0];
            if (std::abs(y) > 3.0) continue; // boundary clamp region
            worst = std::max(worst, std::abs(w.wbar[k][j] - std::cos(y)));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("grid refinement improves the solution at order >= 1") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    auto solve_at = [&](int space, int sigma) {
        SolverConfig cfg;
        cfg.T = 0.4;
        cfg.time_points = 8;
        cfg.space_points = space;
        cfg.sigma_nodes = sigma;
        cfg.picard_tol = 1e-8;
        cfg.space_halfwidth = 4.0;
        cfg.smoothing.dt = 5e-3;
        SigmaFunction w = picard_solve(s1, head, catalog_phibar("tanh"), catalog_psi("cv"), cfg);
        return w.value_at(0.4, Vector::Constant(1, 0.6));
    };
    double coarse = solve_at(17, 6);
    double mid = solve_at(33, 12);
    double fine = solve_at(65, 24);
    double step1 = std::abs(mid - coarse);
    double step2 = std::abs(fine - mid);
    CHECK(step2 <= 0.5 * step1 + 1e-10);
}

TEST_CASE("picard aborts when the nonlinearity breaks the contraction") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    Nonlinearity bad;
    bad.name = "explosive";
    bad.psi = [](double v, const Vector&) { return 40.0 * v; };
    bad.lipschitz = 40.0;
    SolverConfig cfg;
    cfg.T = 0.4;
    cfg.time_points = 6;
    cfg.space_points = 33;
    cfg.sigma_nodes = 8;
    cfg.max_iters = 30;
    CHECK_THROWS_AS(picard_solve(s1, head, catalog_phibar("cos"), bad, cfg), std::runtime_error);
}

TEST_CASE("sigma_eval is well defined and consistent at t = 0") {
    DelaySystem s1 = catalog_system("S1");
    PastFunctional head = catalog_pf("head");
    SigmaFunction g = s1_cos_sigma(0.4, 8, 4.0, 129);

    Segment a = Segment::constant(1, 1.0, 100, Vector::Constant(1, 0.7), Vector::Zero(1));
    Segment b = Segment::constant(1, 1.0, 100, Vector::Constant(1, 0.7),
                                  Vector::Constant(1, -5.0));
    SigmaEval ea = sigma_eval(g, s1, head, 0.2, a, 0.01);
    SigmaEval eb = sigma_eval(g, s1, head, 0.2, b, 0.01);
    // S1 head reduction ignores the tail entirely: identical outputs.
    CHECK(ea.value == eb.value);
    CHECK(ea.gradG[0] == eb.gradG[0]);
    CHECK(!ea.extrapolated);

    // At t = 0 the value is the terminal condition; probe at a grid node
    // (y = 0.75 with halfwidth 4 and 129 points) so interpolation is exact.
    Segment node = Segment::constant(1, 1.0, 100, Vector::Constant(1, 0.75), Vector::Zero(1));
    SigmaEval e0 = sigma_eval(g, s1, head, 0.0, node, 0.01);
    CHECK(e0.value == doctest::Approx(std::cos(0.75)).epsilon(1e-6));

    // Gradient along G matches an FD of the value under a head kick.
    SigmaEval em = sigma_eval(g, s1, head, 0.25, a, 0.01);
    const double delta = 1e-3;
    Segment gdir = Segment::zero(1, 1.0, 100);
    gdir.head[0] = 1.0; // sigma = 1, so G e_1 is a pure head kick
    double up = sigma_eval(g, s1, head, 0.25, a + delta * gdir, 0.01).value;
    double dn = sigma_eval(g, s1, head, 0.25, a + (-delta) * gdir, 0.01).value;
    CHECK(em.gradG[0] == doctest::Approx((up - dn) / (2.0 * delta)).epsilon(1e-2));

    // Far outside the box: flagged.
    Segment far = Segment::constant(1, 1.0, 100, Vector::Constant(1, 50.0), Vector::Zero(1));
    CHECK(sigma_eval(g, s1, head, 0.2, far, 0.01).extrapolated);
}

TEST_CASE("linear_solve endpoints and two-estimator agreement") {
    DelaySystem s2 = catalog_system("S2");
    PastFunctional pf = catalog_pf("head_plus_density");
    Segment x = Segment::constant(1, 1.0, 100, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0));
    McConfig mc;
    mc.paths = 20000;
    mc.seed = 19;
    mc.dt = 0.01;

    // t = T: the terminal condition, exactly.
    PerturbedEstimate terminal =
        linear_solve(s2, pf, nullptr, catalog_phibar("tanh"), 0.5, 0.5, x, mc);
    CHECK(terminal.direct ==
          doctest::Approx(std::tanh(apply_reduction(pf, x)[0])).epsilon(1e-12));

    // Zero drift: matches ou_apply at the remaining horizon.
    PerturbedEstimate lin = linear_solve(s2, pf, nullptr, catalog_phibar("tanh"), 0.5, 0.2, x, mc);
    SmoothingConfig cfg;
    double ou = ou_apply(s2, pf, catalog_phibar("tanh"), 0.3, x, cfg);
    CHECK(std::abs(lin.direct - ou) < 3.0 * lin.direct_se);

    // tanh drift: the two estimators agree.
    ReducedDrift b = catalog_drift("tanh", pf);
    PerturbedEstimate pe = linear_solve(s2, pf, &b, catalog_phibar("tanh"), 0.5, 0.0, x, mc);
    CHECK(std::abs(pe.direct - pe.girsanov) < 3.0 * std::hypot(pe.direct_se, pe.girsanov_se));
    CHECK(!pe.disagreement_flagged);
}
