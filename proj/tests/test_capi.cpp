#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "delayou.h"

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("version and catalog listing") {
    int major = -1, minor = -1;
    dlo_version(&major, &minor);
    CHECK(major >= 0);
    CHECK(minor >= 0);

    char* json = dlo_catalog_json();
    REQUIRE(json != nullptr);
    std::string s(json);
    dlo_string_free(json);
    CHECK(s.find("\"S1\"") != std::string::npos);
    CHECK(s.find("\"S2\"") != std::string::npos);
    CHECK(s.find("\"S3\"") != std::string::npos);
    CHECK(s.find("s1_quadratic") != std::string::npos);
}

TEST_CASE("system and reduction lifecycle with error reporting") {
    dlo_system* sys = nullptr;
    REQUIRE(dlo_system_create("S1", &sys) == DLO_OK);
    int n = 0;
    CHECK(dlo_system_dim(sys, &n) == DLO_OK);
    CHECK(n == 1);

    dlo_system* bad = nullptr;
    CHECK(dlo_system_create("NOPE", &bad) == DLO_ERR_UNKNOWN_NAME);
    CHECK(bad == nullptr);
    CHECK(std::strlen(dlo_last_error()) > 0);

    dlo_pastfunc* pf = nullptr;
    REQUIRE(dlo_pastfunc_create("head", &pf) == DLO_OK);
    dlo_pastfunc* badpf = nullptr;
    CHECK(dlo_pastfunc_create("nope", &badpf) == DLO_ERR_UNKNOWN_NAME);

    CHECK(dlo_system_create("S1", nullptr) == DLO_ERR_INVALID);

    dlo_pastfunc_free(pf);
    dlo_system_free(sys);
}

TEST_CASE("covariance and smoothing slope through the C surface") {
    dlo_system* sys = nullptr;
    dlo_pastfunc* pf = nullptr;
    REQUIRE(dlo_system_create("S1", &sys) == DLO_OK);
    REQUIRE(dlo_pastfunc_create("head", &pf) == DLO_OK);

    double q = 0.0;
    REQUIRE(dlo_covariance(sys, pf, 0.0, 0.5, 16, 1e-3, &q) == DLO_OK);
    CHECK(q == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(dlo_covariance(sys, pf, 0.5, 0.5, 16, 1e-3, &q) == DLO_ERR_DOMAIN);

    double t_list[5] = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    double slope = 0.0;
    REQUIRE(dlo_smoothing_slope(sys, pf, t_list, 5, 16, 1e-4, &slope) == DLO_OK);
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-6));

    dlo_pastfunc_free(pf);
    dlo_system_free(sys);
}

TEST_CASE("semigroup evaluation, gradient, and steering energy") {
    dlo_system* sys = nullptr;
    dlo_pastfunc* pf = nullptr;
    REQUIRE(dlo_system_create("S1", &sys) == DLO_OK);
    REQUIRE(dlo_pastfunc_create("head", &pf) == DLO_OK);

    double head = 0.7, tail = 0.0, out = 0.0;
    REQUIRE(dlo_ou_apply(sys, pf, "cos", 0.5, &head, &tail, 1e-3, &out) == DLO_OK);
    CHECK(out == doctest::Approx(std::exp(-0.25) * std::cos(0.7)).epsilon(1e-8));
    CHECK(dlo_ou_apply(sys, pf, "nope", 0.5, &head, &tail, 1e-3, &out) == DLO_ERR_UNKNOWN_NAME);

    double head0 = 0.0, eta = 1.0;
    REQUIRE(dlo_ou_gradient(sys, pf, "indicator", 0.25, &head0, &tail, &eta, 1e-3, &out) ==
            DLO_OK);
    CHECK(out == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 0.25)).epsilon(1e-8));

    REQUIRE(dlo_steering_energy(sys, pf, 0.25, &eta, 1e-3, &out) == DLO_OK);
    CHECK(out == doctest::Approx(2.0).epsilon(1e-8));

    dlo_pastfunc_free(pf);
    dlo_system_free(sys);
}

TEST_CASE("config runner writes artifacts and rejects malformed systems") {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "delayou_capi_test";
    std::filesystem::remove_all(dir);

    const char* good = R"({
        "experiment": "covariance",
        "system": "S1",
        "pf": "head",
        "params": {"t_list": [0.1, 0.5, 0.9], "dt": 1e-3, "quad_nodes": 16},
        "seed": 1
    })";
    char* summary = nullptr;
    int rc = dlo_run_config(good, dir.string().c_str(), 1, &summary);
    REQUIRE(rc == 0);
    REQUIRE(summary != nullptr);
    std::string s(summary);
    dlo_string_free(summary);
    CHECK(s.find("\"covariance\"") != std::string::npos);
    CHECK(s.find("config_hash") != std::string::npos);
    std::string csv = read_file(dir / "covariance.csv");
    CHECK(csv.find("0.5") != std::string::npos);

    // A malformed system (a1 atom at theta = 0) must fail validation with a
    // message naming the standing condition.
    const char* bad = R"({
        "experiment": "covariance",
        "system": {"n": 1, "d": 1.0, "a0": [[0.0]], "sigma": [[1.0]],
                   "a1": {"atoms": [{"theta": 0.0, "weight": [[1.0]]}]}},
        "pf": "head",
        "params": {"t_list": [0.1], "dt": 1e-3, "quad_nodes": 16},
        "seed": 1
    })";
    summary = nullptr;
    rc = dlo_run_config(bad, dir.string().c_str(), 1, &summary);
    CHECK(rc == 2);
    REQUIRE(summary != nullptr);
    std::string err(summary);
    dlo_string_free(summary);
    CHECK(err.find("a1({0}) = 0") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("thread count does not change the CSV bytes") {
    std::filesystem::path d1 = std::filesystem::temp_directory_path() / "delayou_capi_t1";
    std::filesystem::path d4 = std::filesystem::temp_directory_path() / "delayou_capi_t4";
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d4);

    const char* cfg = R"({
        "experiment": "simulate",
        "system": "S2",
        "x": {"head": [1.0], "tail_const": [1.0], "N": 100},
        "params": {"T": 0.5, "dt": 0.01, "paths": 500},
        "seed": 9
    })";
    char* summary = nullptr;
    REQUIRE(dlo_run_config(cfg, d1.string().c_str(), 1, &summary) == 0);
    dlo_string_free(summary);
    summary = nullptr;
    REQUIRE(dlo_run_config(cfg, d4.string().c_str(), 4, &summary) == 0);
    dlo_string_free(summary);

    CHECK(read_file(d1 / "path.csv") == read_file(d4 / "path.csv"));

    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d4);
}
