#pragma once

#include <string>
#include <vector>

#include "delayou/control.hpp"
#include "delayou/functionals.hpp"
#include "delayou/kolmogorov.hpp"
#include "delayou/types.hpp"

namespace delayou {

// Built-in named entities plus user registration. Lookup throws
// std::out_of_range on unknown names.
DelaySystem catalog_system(const std::string& name);
PastFunctional catalog_pf(const std::string& name);
// Default reduction paired with each system: S1 -> head, S2 -> head_plus_density,
// S3 -> density_only.
PastFunctional default_pf_for(const std::string& system_name);
ScalarFunction catalog_phibar(const std::string& name);
ReducedDrift catalog_drift(const std::string& name, const PastFunctional& pf);
Nonlinearity catalog_psi(const std::string& name);
ControlProblem catalog_problem(const std::string& name);

void register_system(const std::string& name, const DelaySystem& sys);
void register_pf(const std::string& name, const PastFunctional& pf);
void register_phibar(const ScalarFunction& f);
void register_psi(const Nonlinearity& psi);

struct CatalogListing {
    std::vector<std::string> systems;
    std::vector<std::string> pfs;
    std::vector<std::string> phibars;
    std::vector<std::string> drifts;
    std::vector<std::string> psis;
    std::vector<std::string> problems;
};

CatalogListing list_catalog();

} // namespace delayou
