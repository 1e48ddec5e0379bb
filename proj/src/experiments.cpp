#include "delayou/experiments.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "delayou/catalog.hpp"
#include "delayou/control.hpp"
#include "delayou/covariance.hpp"
#include "delayou/dynamics.hpp"
#include "delayou/kolmogorov.hpp"
#include "delayou/parallel.hpp"
#include "delayou/smoothing.hpp"

namespace delayou {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& values, const std::string& prefix = "") {
        bool first = true;
        if (!prefix.empty()) {
            out_ << prefix;
            first = false;
        }
        for (double v : values) {
            if (!first) out_ << ",";
            out_ << fmt(v);
            first = false;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

Matrix parse_matrix(const json& j) {
    if (j.is_number()) {
        Matrix m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    auto rows = j.get<std::vector<std::vector<double>>>();
    Matrix m(rows.size(), rows.at(0).size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(int(r), int(c)) = rows[r][c];
    return m;
}

Vector parse_vector(const json& j) {
    if (j.is_number()) {
        Vector v(1);
        v[0] = j.get<double>();
        return v;
    }
    auto vals = j.get<std::vector<double>>();
    Vector v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v[int(i)] = vals[i];
    return v;
}

DelayMeasure parse_measure(const json& j, double d) {
    DelayMeasure mu;
    mu.d = d;
    if (j.contains("atoms"))
        for (const auto& a : j.at("atoms"))
            mu.atoms.push_back({a.at("theta").get<double>(), parse_matrix(a.at("weight"))});
    if (j.contains("density"))
        for (const auto& m : j.at("density")) mu.density.push_back(parse_matrix(m));
    return mu;
}

DelaySystem parse_system(const json& j) {
    if (j.is_string()) return catalog_system(j.get<std::string>());
    DelaySystem sys;
    sys.n = j.at("n").get<int>();
    sys.d = j.at("d").get<double>();
    sys.a0 = parse_matrix(j.at("a0"));
    sys.sigma = parse_matrix(j.at("sigma"));
    sys.a1.d = sys.d;
    if (j.contains("a1")) sys.a1 = parse_measure(j.at("a1"), sys.d);
    return sys;
}

PastFunctional parse_pf(const json& j, const DelaySystem& sys) {
    if (j.is_string()) return catalog_pf(j.get<std::string>());
    PastFunctional pf;
    pf.alpha0 = parse_matrix(j.at("alpha0"));
    pf.tail_measure.d = sys.d;
    if (j.contains("tail_measure")) pf.tail_measure = parse_measure(j.at("tail_measure"), sys.d);
    pf.regime = j.value("regime", "A1") == std::string("A2") ? Regime::A2 : Regime::A1;
    return pf;
}

Segment parse_segment(const json& j, const DelaySystem& sys) {
    int N = j.value("N", std::max(2, int(std::llround(sys.d / 0.01))));
    Segment x = Segment::zero(sys.n, sys.d, N);
    if (j.contains("head")) x.head = parse_vector(j.at("head"));
    if (j.contains("tail_const")) {
        Vector c = parse_vector(j.at("tail_const"));
        for (auto& v : x.tail) v = c;
    }
    return x;
}

SmoothingConfig parse_smoothing(const json& params) {
    SmoothingConfig cfg;
    cfg.dt = params.value("dt", 1e-3);
    cfg.cov_nodes = params.value("quad_nodes", 32);
    if (params.contains("gh_order")) {
        cfg.quad.order_n1 = params.at("gh_order").get<int>();
        cfg.quad.order_n2 = params.at("gh_order").get<int>();
    }
    return cfg;
}

} // namespace

std::string catalog_json() {
    CatalogListing c = list_catalog();
    json j;
    j["systems"] = c.systems;
    j["pfs"] = c.pfs;
    j["observables"] = c.phibars;
    j["drifts"] = c.drifts;
    j["psis"] = c.psis;
    j["problems"] = c.problems;
    return j.dump(2);
}

RunResult run_config_json(const std::string& config_json, const std::string& out_dir) {
    json summary;
    auto finish = [&](int status) {
        RunResult r;
        r.status = status;
        summary["status"] = status;
        r.summary_json = summary.dump(2);
        if (!out_dir.empty()) {
            std::ofstream f(std::filesystem::path(out_dir) / "summary.json");
            f << r.summary_json << "\n";
        }
        return r;
    };

    json cfg;
    try {
        cfg = json::parse(config_json);
    } catch (const std::exception& e) {
        summary["error"] = std::string("config parse error: ") + e.what();
        return RunResult{2, summary.dump(2)};
    }

    try {
        if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
        summary["config"] = cfg;
        {
            char hex[20];
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(fnv1a(cfg.dump())));
            summary["config_hash"] = hex;
        }
        const std::string experiment = cfg.at("experiment").get<std::string>();
        summary["experiment"] = experiment;
        const json params = cfg.value("params", json::object());
        const std::uint64_t seed = cfg.value("seed", std::uint64_t(1));
        std::filesystem::path out(out_dir.empty() ? "." : out_dir);

        if (experiment == "simulate") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            Segment x = parse_segment(cfg.value("x", json::object()), sys);
            double T = params.value("T", 1.0);
            double dt = params.value("dt", 1e-2);
            std::size_t paths = params.value("paths", std::size_t(1));
            BrownianPath noise = BrownianPath::make(sys.n, T, aligned_step(sys.d, dt), seed, 0);
            std::vector<Segment> path = simulate_ou(sys, x, T, dt, noise);
            std::vector<std::string> header = {"time"};
            for (int i = 0; i < sys.n; ++i) header.push_back("head_" + std::to_string(i));
            CsvWriter csv(out / "path.csv", header);
            double dt_a = aligned_step(sys.d, dt);
            for (std::size_t k = 0; k < path.size(); ++k) {
                std::vector<double> row = {double(k) * dt_a};
                for (int i = 0; i < sys.n; ++i) row.push_back(path[k].head[i]);
                csv.row(row);
            }
            // Terminal statistics across the ensemble.
            std::vector<double> terminal(paths);
            PastFunctional head_pf;
            head_pf.alpha0 = Matrix::Identity(sys.n, sys.n);
            head_pf.tail_measure.d = sys.d;
            for (std::size_t p = 0; p < paths; ++p)
                terminal[p] =
                    run_ou_path_with_weight(sys, x, head_pf, nullptr, T, dt, seed, p)
                        .reduced_terminal[0];
            MeanSe m = mean_and_se(terminal);
            summary["terminal_head_mean"] = m.mean;
            summary["terminal_head_se"] = m.se;
            summary["outputs"] = {"path.csv"};
            return finish(0);
        }

        if (experiment == "covariance") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            PastFunctional pf = cfg.contains("pf")
                                    ? parse_pf(cfg.at("pf"), sys)
                                    : default_pf_for(cfg.at("system").get<std::string>());
            pf.validate(sys.n, sys.d);
            auto t_list = params.at("t_list").get<std::vector<double>>();
            double s = params.value("s", 0.0);
            double dt = params.value("dt", 1e-3);
            int nodes = params.value("quad_nodes", 32);
            std::vector<std::string> header = {"t"};
            for (int r = 0; r < sys.n; ++r)
                for (int c = 0; c < sys.n; ++c)
                    header.push_back("q_" + std::to_string(r) + std::to_string(c));
            header.push_back("lambda_min");
            CsvWriter csv(out / "covariance.csv", header);
            for (double t : t_list) {
                CovMatrix q = covariance(sys, pf, s, t, nodes, dt);
                std::vector<double> row = {t};
                for (int r = 0; r < sys.n; ++r)
                    for (int c = 0; c < sys.n; ++c) row.push_back(q.value(r, c));
                row.push_back(q.lambda_min());
                csv.row(row);
            }
            summary["outputs"] = {"covariance.csv"};
            return finish(0);
        }

        if (experiment == "smoothing-rate") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            PastFunctional pf = cfg.contains("pf")
                                    ? parse_pf(cfg.at("pf"), sys)
                                    : default_pf_for(cfg.at("system").get<std::string>());
            pf.validate(sys.n, sys.d);
            auto t_list = params.at("t_list").get<std::vector<double>>();
            RateProbe probe = smoothing_rate_probe(sys, pf, t_list,
                                                   params.value("quad_nodes", 32),
                                                   params.value("dt", 1e-4));
            CsvWriter csv(out / "smoothing_rate.csv", {"t", "lambda_min"});
            for (std::size_t i = 0; i < probe.t.size(); ++i)
                csv.row({probe.t[i], probe.lambda_min[i]});
            summary["slope"] = probe.slope;
            summary["outputs"] = {"smoothing_rate.csv"};
            return finish(0);
        }

        if (experiment == "gradient-rate") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            PastFunctional pf = cfg.contains("pf")
                                    ? parse_pf(cfg.at("pf"), sys)
                                    : default_pf_for(cfg.at("system").get<std::string>());
            pf.validate(sys.n, sys.d);
            ScalarFunction phibar = catalog_phibar(cfg.value("observable", "indicator"));
            SmoothingConfig sm = parse_smoothing(params);
            auto t_list = params.at("t_list").get<std::vector<double>>();
            Segment x = parse_segment(cfg.value("x", json::object()), sys);
            Segment h = Segment::zero(sys.n, sys.d, x.grid_size());
            h.head = Vector::Ones(sys.n);
            GradientRateProbe probe = gradient_rate_probe(sys, pf, phibar, x, h, t_list, sm);
            CsvWriter csv(out / "gradient_rate.csv", {"t", "grad_abs"});
            for (std::size_t i = 0; i < probe.t.size(); ++i)
                csv.row({probe.t[i], probe.grad_abs[i]});
            summary["slope"] = probe.slope;
            summary["outputs"] = {"gradient_rate.csv"};
            return finish(0);
        }

        if (experiment == "feller-probe") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            double t = params.value("t", 0.5);
            double theta_star = params.value("theta_star", -0.9);
            auto deltas =
                params.value("deltas", std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
            McConfig mc;
            mc.paths = params.value("paths", std::size_t(4000));
            mc.seed = seed;
            mc.dt = params.value("dt", 1e-2);
            SmoothingConfig sm = parse_smoothing(params);
            sm.dt = mc.dt;
            FellerProbeReport rep = strong_feller_failure_probe(sys, t, theta_star, deltas, mc, sm);
            CsvWriter csv(out / "feller_probe.csv", {"delta", "ratio_tail", "ratio_reduced"});
            for (const auto& r : rep.rows) csv.row({r.delta, r.ratio_tail, r.ratio_reduced});
            summary["deterministic_regime"] = rep.deterministic_regime;
            summary["outputs"] = {"feller_probe.csv"};
            return finish(0);
        }

        if (experiment == "hjb-solve") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            PastFunctional pf = cfg.contains("pf")
                                    ? parse_pf(cfg.at("pf"), sys)
                                    : default_pf_for(cfg.at("system").get<std::string>());
            pf.validate(sys.n, sys.d);
            ScalarFunction phibar = catalog_phibar(cfg.value("observable", "cos"));
            Nonlinearity psi = catalog_psi(cfg.value("psi", "zero"));
            SolverConfig sc;
            sc.T = params.value("T", 0.5);
            sc.T0 = params.value("T0", 0.0);
            sc.picard_tol = params.value("picard_tol", 1e-6);
            sc.time_points = params.value("time_points", 12);
            sc.space_points = params.value("space_points", 65);
            sc.sigma_nodes = params.value("sigma_nodes", 16);
            sc.space_halfwidth = params.value("space_halfwidth", 0.0);
            sc.t_bar = params.value("t_bar", 0.0);
            sc.smoothing = parse_smoothing(params);
            PicardDiagnostics diag;
            SigmaFunction w;
            try {
                w = picard_solve(sys, pf, phibar, psi, sc, &diag);
            } catch (const std::runtime_error& e) {
                summary["error"] = e.what();
                return finish(3);
            }
            std::vector<std::string> header = {"t"};
            for (int a = 0; a < sys.n; ++a) header.push_back("y_" + std::to_string(a));
            header.push_back("wbar");
            for (int a = 0; a < sys.n; ++a) header.push_back("gbarG_" + std::to_string(a));
            CsvWriter csv(out / "wbar.csv", header);
            for (std::size_t k = 0; k < w.times.size(); ++k)
                for (std::size_t j = 0; j < w.grid.size(); ++j) {
                    std::vector<double> row = {w.times[k]};
                    Vector y = w.grid.point(j);
                    for (int a = 0; a < sys.n; ++a) row.push_back(y[a]);
                    row.push_back(w.wbar[k][j]);
                    for (int a = 0; a < sys.n; ++a) row.push_back(w.gbarG[k][j][a]);
                    csv.row(row);
                }
            double ct = 0.0;
            for (const auto& rowg : w.gbarG)
                for (const auto& v : rowg) ct = std::max(ct, v.cwiseAbs().maxCoeff());
            summary["C_T"] = ct / phibar.sup_norm;
            summary["iterations"] = diag.iterations;
            summary["contraction_ratios"] = diag.contraction_ratios;
            summary["converged"] = diag.converged;
            summary["t_bar"] = diag.t_bar;
            summary["outputs"] = {"wbar.csv"};
            return finish(diag.converged ? 0 : 3);
        }

        if (experiment == "linear-solve") {
            DelaySystem sys = parse_system(cfg.at("system"));
            sys.validate();
            PastFunctional pf = cfg.contains("pf")
                                    ? parse_pf(cfg.at("pf"), sys)
                                    : default_pf_for(cfg.at("system").get<std::string>());
            pf.validate(sys.n, sys.d);
            ScalarFunction phibar = catalog_phibar(cfg.value("observable", "tanh"));
            ReducedDrift drift = catalog_drift(cfg.value("drift", "zero"), pf);
            Segment x = parse_segment(cfg.value("x", json::object()), sys);
            McConfig mc;
            mc.paths = params.value("paths", std::size_t(20000));
            mc.seed = seed;
            mc.dt = params.value("dt", 1e-2);
            double T = params.value("T", 0.5);
            double t = params.value("t", 0.0);
            PerturbedEstimate est = linear_solve(sys, pf, &drift, phibar, T, t, x, mc);
            summary["direct"] = est.direct;
            summary["direct_se"] = est.direct_se;
            summary["girsanov"] = est.girsanov;
            summary["girsanov_se"] = est.girsanov_se;
            summary["weight_mean"] = est.weight_mean;
            summary["weight_se"] = est.weight_se;
            summary["disagreement_flagged"] = est.disagreement_flagged;
            summary["outputs"] = json::array();
            return finish(est.disagreement_flagged ? 3 : 0);
        }

        if (experiment == "control") {
            ControlProblem pr = catalog_problem(cfg.value("problem", "s1_quadratic"));
            double dt = params.value("dt", 1e-2);
            std::size_t paths = params.value("paths", std::size_t(20000));
            SolverConfig sc;
            sc.T = pr.T;
            sc.picard_tol = params.value("picard_tol", 1e-6);
            sc.time_points = params.value("time_points", 12);
            sc.space_points = params.value("space_points", 65);
            sc.sigma_nodes = params.value("sigma_nodes", 16);
            sc.smoothing = parse_smoothing(params);
            Nonlinearity psi = hamiltonian_nonlinearity(pr.g, pr.U);
            PicardDiagnostics diag;
            FeedbackPolicy policy;
            try {
                policy.w = picard_solve(pr.sys, pr.pf, pr.phibar, psi, sc, &diag);
            } catch (const std::runtime_error& e) {
                summary["error"] = e.what();
                return finish(3);
            }
            policy.g = pr.g;
            policy.U = pr.U;
            policy.T = pr.T;
            auto u_levels = params.value("candidates", std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
            std::vector<std::pair<std::string, OpenLoopControl>> candidates;
            for (double u0 : u_levels)
                candidates.emplace_back("const " + fmt(u0), [u0](double) {
                    return Vector(Vector::Constant(1, u0));
                });
            RelationReport rep =
                verify_fundamental_relation(pr, policy, candidates, dt, paths, seed);
            CsvWriter csv(out / "relation.csv", {"control", "j", "se", "gap", "pass"});
            for (const auto& r : rep.rows)
                csv.row({r.j, r.se, r.gap, r.pass ? 1.0 : 0.0}, r.label);
            summary["v"] = rep.v;
            summary["slack"] = rep.slack;
            summary["relation_pass"] = rep.pass;
            summary["outputs"] = {"relation.csv"};
            return finish(rep.pass ? 0 : 3);
        }

        summary["error"] = "unknown experiment id: " + experiment;
        return finish(2);
    } catch (const std::exception& e) {
        summary["error"] = e.what();
        return finish(2);
    }
}

} // namespace delayou
