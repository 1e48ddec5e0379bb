// Command-line front end; talks to the library exclusively through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delayou.h"

namespace {

int run_experiment(const std::string& expected_id, const std::string& config_path,
                   const std::string& out_dir, int threads) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot read config: " << config_path << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string config = buf.str();

    char* summary = nullptr;
    int status = dlo_run_config(config.c_str(), out_dir.c_str(), threads, &summary);
    if (summary) {
        std::cout << summary << "\n";
        if (!expected_id.empty() &&
            std::string(summary).find("\"experiment\": \"" + expected_id + "\"") ==
                std::string::npos &&
            status == 0) {
            std::cerr << "config experiment id does not match subcommand '" << expected_id
                      << "'\n";
            dlo_string_free(summary);
            return 2;
        }
        dlo_string_free(summary);
    }
    if (status == 0) return 0;
    if (status == 3) return 3;
    std::cerr << "error: " << dlo_last_error() << "\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayou: partial smoothing, Kolmogorov/HJB and feedback control "
                 "for delay Ornstein-Uhlenbeck systems"};
    app.require_subcommand(0, 1);

    bool list = false;
    app.add_flag("--list", list, "List the built-in catalog and exit");

    const std::vector<std::string> experiments = {
        "simulate",      "covariance",  "smoothing-rate", "gradient-rate",
        "feller-probe",  "hjb-solve",   "linear-solve",   "control"};

    struct SubArgs {
        std::string config;
        std::string out = ".";
        int threads = 0;
    };
    std::vector<SubArgs> args(experiments.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < experiments.size(); ++i) {
        CLI::App* sub = app.add_subcommand(experiments[i], "Run the " + experiments[i] +
                                                               " experiment from a config file");
        sub->add_option("--config", args[i].config, "Path to the JSON config")->required();
        sub->add_option("--out", args[i].out, "Output directory for CSV and summary");
        sub->add_option("--threads", args[i].threads,
                        "Worker threads (results are invariant to this)");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    if (list) {
        char* catalog = dlo_catalog_json();
        std::cout << catalog << "\n";
        dlo_string_free(catalog);
        return 0;
    }

    for (std::size_t i = 0; i < experiments.size(); ++i)
        if (subs[i]->parsed())
            return run_experiment(experiments[i], args[i].config, args[i].out, args[i].threads);

    std::cout << app.help();
    return 0;
}
