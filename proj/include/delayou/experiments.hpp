#pragma once

#include <string>

namespace delayou {

// Executes one experiment described by a JSON config; writes CSV artifacts and
// summary.json into out_dir. Status: 0 ok, 2 validation failure,
// 3 certificate/acceptance failure.
struct RunResult {
    int status = 0;
    std::string summary_json;
};

RunResult run_config_json(const std::string& config_json, const std::string& out_dir);

// JSON listing of every registered catalog entity.
std::string catalog_json();

} // namespace delayou
