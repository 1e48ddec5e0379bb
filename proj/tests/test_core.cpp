#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "delayou/parallel.hpp"
#include "delayou/quadrature.hpp"
#include "delayou/rng.hpp"
#include "delayou/types.hpp"

using namespace delayou;

namespace {
Matrix scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}
} // namespace

TEST_CASE("segment constructors and interpolation") {
    Vector head = Vector::Constant(1, 2.0);
    Vector tailv = Vector::Constant(1, -1.0);
    Segment x = Segment::constant(1, 1.0, 10, head, tailv);
    CHECK(x.n() == 1);
    CHECK(x.grid_size() == 10);
    CHECK(x.head[0] == doctest::Approx(2.0));
    CHECK(x.tail_at(-0.37)[0] == doctest::Approx(-1.0));

    Segment z = Segment::zero(2, 0.5, 8);
    CHECK(z.head.norm() == 0.0);
    CHECK(z.tail_at(-0.25).norm() == 0.0);
}

TEST_CASE("segment linear tail interpolates exactly") {
    Segment x = Segment::zero(1, 1.0, 20);
    for (int j = 0; j <= 20; ++j) x.tail[std::size_t(j)][0] = -1.0 + j / 20.0; // tail(theta)=theta
    CHECK(x.tail_at(-0.525)[0] == doctest::Approx(-0.525).epsilon(1e-12));
    CHECK(x.tail_at(-1.0)[0] == doctest::Approx(-1.0));
}

TEST_CASE("segment algebra is componentwise") {
    Segment a = Segment::constant(1, 1.0, 6, Vector::Constant(1, 1.0), Vector::Constant(1, 2.0));
    Segment b = Segment::constant(1, 1.0, 6, Vector::Constant(1, -3.0), Vector::Constant(1, 4.0));
    Segment c = a + 2.0 * b;
    CHECK(c.head[0] == doctest::Approx(-5.0));
    CHECK(c.tail_at(-0.3)[0] == doctest::Approx(10.0));
}

TEST_CASE("segment resampling preserves linear tails") {
    Segment x = Segment::zero(1, 1.0, 10);
    for (int j = 0; j <= 10; ++j) x.tail[std::size_t(j)][0] = 3.0 * (-1.0 + j / 10.0) + 1.0;
    Segment fine = x.resampled(40);
    CHECK(fine.grid_size() == 40);
    CHECK(fine.tail_at(-0.613)[0] == doctest::Approx(x.tail_at(-0.613)[0]).epsilon(1e-12));
}

TEST_CASE("segment validation rejects degenerate data") {
    Segment x = Segment::zero(1, 1.0, 10);
    CHECK_NOTHROW(x.validate());
    Segment bad = x;
    bad.d = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = x;
    bad.tail.resize(2); // N = 1 < 2
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = x;
    bad.head[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("delay system validation enforces the standing conditions") {
    DelaySystem sys;
    sys.n = 1;
    sys.d = 1.0;
    sys.a0 = scalar(0.0);
    sys.a1.d = 1.0;
    sys.sigma = scalar(1.0);
    CHECK_NOTHROW(sys.validate());

    DelaySystem bad = sys;
    bad.a1.atoms = {{0.0, scalar(1.0)}}; // atom at theta = 0 is forbidden
    CHECK_THROWS_WITH_AS(bad.validate(),
                         "a1 must have no atom at theta = 0 (standing condition a1({0}) = 0)",
                         std::invalid_argument);

    bad = sys;
    bad.sigma = scalar(0.0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = sys;
    bad.a1.atoms = {{-2.0, scalar(1.0)}}; // outside [-d, 0]
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("delay measure total variation and density lookup") {
    DelayMeasure mu;
    mu.d = 1.0;
    mu.atoms = {{-0.5, scalar(2.0)}, {-0.25, scalar(-1.0)}};
    mu.density = {scalar(3.0), scalar(3.0)};
    // |2| + |-1| + integral of |3| over [-1,0]
    CHECK(mu.total_variation() == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(mu.density_at(-0.7)(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("counter rng is a pure function of (seed, stream)") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        double va = a.normal();
        CHECK(va == b.normal());
        (void)c.normal();
    }
    // Different streams decorrelate: first draws differ.
    CounterRng a2(42, 7), c2(42, 8);
    CHECK(a2.normal() != c2.normal());
}

TEST_CASE("counter rng normals have the right first moments") {
    CounterRng g(123, 0);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = g.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pairwise sum is exact on adversarial orderings") {
    std::vector<double> v(1001, 1e-16);
    v[0] = 1.0;
    double s = pairwise_sum(v);
    CHECK(s == doctest::Approx(1.0 + 1000e-16).epsilon(1e-15));
}

TEST_CASE("parallel_for output does not depend on the worker count") {
    const std::size_t n = 5000;
    std::vector<double> samples(n);
    auto fill = [&](std::size_t i) {
        CounterRng g(9, i);
        samples[i] = g.normal();
    };
    set_worker_count(1);
    parallel_for(n, fill);
    double sum1 = pairwise_sum(samples);
    std::vector<double> first = samples;

    set_worker_count(4);
    parallel_for(n, fill);
    double sum4 = pairwise_sum(samples);
    set_worker_count(1);

    CHECK(sum1 == sum4); // bitwise equality required
    CHECK(samples == first);
}

TEST_CASE("mean_and_se matches the textbook estimator") {
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    MeanSe m = mean_and_se(v);
    CHECK(m.mean == doctest::Approx(2.5));
    // sample sd = sqrt(5/3), se = sd / 2
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(m.count == 4);
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const auto& gl = GaussLegendre::of_order(8);
    double s = 0.0;
    for (double w : gl.weights) s += w;
    CHECK(s == doctest::Approx(2.0).epsilon(1e-13));
    // degree-15 monomial on [0, 1]: exact value 1/16
    double v = gl.integrate(0.0, 1.0, [](double x) { return std::pow(x, 15); });
    CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(gl.integrate(-2.0, 3.0, [](double) { return 1.0; }) == doctest::Approx(5.0));
}

TEST_CASE("Gauss-Hermite matches standard normal moments up to degree 6") {
    const auto& gh = GaussHermite::of_order(12);
    double w = 0.0;
    for (double wi : gh.weights) w += wi;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
    // E Z^k for k = 0..6: 1, 0, 1, 0, 3, 0, 15
    const double expected[7] = {1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0};
    for (int k = 0; k <= 6; ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i)
            m += gh.weights[i] * std::pow(gh.nodes[i], k);
        CHECK(m == doctest::Approx(expected[k]).epsilon(1e-10));
    }
}

TEST_CASE("tensorized Gauss-Hermite reproduces product moments") {
    GaussHermiteTensor t2 = GaussHermiteTensor::make(2, 10);
    double w = 0.0, m22 = 0.0;
    for (std::size_t i = 0; i < t2.nodes.size(); ++i) {
        w += t2.weights[i];
        m22 += t2.weights[i] * t2.nodes[i][0] * t2.nodes[i][0] * t2.nodes[i][1] * t2.nodes[i][1];
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m22 == doctest::Approx(1.0).epsilon(1e-10)); // E[Z1^2 Z2^2] = 1
}

TEST_CASE("normal cdf and pdf closed forms") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("log-log slope fit recovers power laws") {
    std::vector<double> t = {1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> v;
    for (double ti : t) v.push_back(4.2 * std::pow(ti, 2.5));
    CHECK(fit_loglog_slope(t, v) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope({1.0, -1.0}, {1.0, 1.0}), std::domain_error);
}

TEST_CASE("psd_sqrt squares back to the input") {
    Matrix m(2, 2);
    m << 2.0, 0.5, 0.5, 1.0;
    Matrix r = psd_sqrt(m);
    CHECK(((r * r) - m).cwiseAbs().maxCoeff() < 1e-12);
    // Negative eigenvalues are clipped at zero.
    Matrix neg = -Matrix::Identity(2, 2);
    CHECK(psd_sqrt(neg).cwiseAbs().maxCoeff() < 1e-12);
}
