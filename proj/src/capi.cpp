#include "delayou.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "delayou/catalog.hpp"
#include "delayou/covariance.hpp"
#include "delayou/experiments.hpp"
#include "delayou/parallel.hpp"
#include "delayou/smoothing.hpp"

using namespace delayou;

struct dlo_system {
    DelaySystem sys;
};
struct dlo_pastfunc {
    PastFunctional pf;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class F>
int guarded(F&& f) {
    try {
        f();
        return DLO_OK;
    } catch (const std::out_of_range& e) {
        g_last_error = e.what();
        return DLO_ERR_UNKNOWN_NAME;
    } catch (const std::domain_error& e) {
        g_last_error = e.what();
        return DLO_ERR_DOMAIN;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return DLO_ERR_INVALID;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DLO_ERR_RUNTIME;
    }
}

Segment make_segment(const DelaySystem& sys, const double* head, const double* tail_value,
                     double dt) {
    int N = std::max(2, int(sys.d / std::max(dt, 1e-6)));
    Vector h = Vector::Zero(sys.n), tv = Vector::Zero(sys.n);
    for (int i = 0; i < sys.n; ++i) {
        if (head) h[i] = head[i];
        if (tail_value) tv[i] = tail_value[i];
    }
    return Segment::constant(sys.n, sys.d, N, h, tv);
}

} // namespace

extern "C" {

const char* dlo_last_error(void) { return g_last_error.c_str(); }

void dlo_string_free(char* s) { delete[] s; }

void dlo_version(int* major, int* minor) {
    if (major) *major = 1;
    if (minor) *minor = 0;
}

int dlo_system_create(const char* name, dlo_system** out) {
    if (!name || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        DelaySystem sys = catalog_system(name);
        sys.validate();
        *out = new dlo_system{std::move(sys)};
    });
}

void dlo_system_free(dlo_system* sys) { delete sys; }

int dlo_system_dim(const dlo_system* sys, int* n_out) {
    if (!sys || !n_out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    *n_out = sys->sys.n;
    return DLO_OK;
}

int dlo_pastfunc_create(const char* name, dlo_pastfunc** out) {
    if (!name || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] { *out = new dlo_pastfunc{catalog_pf(name)}; });
}

void dlo_pastfunc_free(dlo_pastfunc* pf) { delete pf; }

char* dlo_catalog_json(void) { return dup_string(catalog_json()); }

int dlo_covariance(const dlo_system* sys, const dlo_pastfunc* pf, double s, double t,
                   int quad_nodes, double dt, double* out) {
    if (!sys || !pf || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        CovMatrix q = covariance(sys->sys, pf->pf, s, t, quad_nodes, dt);
        for (int r = 0; r < sys->sys.n; ++r)
            for (int c = 0; c < sys->sys.n; ++c) out[r * sys->sys.n + c] = q.value(r, c);
    });
}

int dlo_smoothing_slope(const dlo_system* sys, const dlo_pastfunc* pf, const double* t_list,
                        size_t len, int quad_nodes, double dt, double* slope_out) {
    if (!sys || !pf || !t_list || !slope_out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        std::vector<double> ts(t_list, t_list + len);
        *slope_out = smoothing_rate_probe(sys->sys, pf->pf, ts, quad_nodes, dt).slope;
    });
}

int dlo_ou_apply(const dlo_system* sys, const dlo_pastfunc* pf, const char* phibar_name,
                 double t, const double* head, const double* tail_value, double dt, double* out) {
    if (!sys || !pf || !phibar_name || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        SmoothingConfig cfg;
        cfg.dt = dt;
        *out = ou_apply(sys->sys, pf->pf, catalog_phibar(phibar_name), t,
                        make_segment(sys->sys, head, tail_value, dt), cfg);
    });
}

int dlo_ou_gradient(const dlo_system* sys, const dlo_pastfunc* pf, const char* phibar_name,
                    double t, const double* head, const double* tail_value, const double* eta,
                    double dt, double* out) {
    if (!sys || !pf || !phibar_name || !eta || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        SmoothingConfig cfg;
        cfg.dt = dt;
        Segment h = make_segment(sys->sys, eta, nullptr, dt);
        *out = ou_gradient(sys->sys, pf->pf, catalog_phibar(phibar_name), t,
                           make_segment(sys->sys, head, tail_value, dt), h, cfg);
    });
}

int dlo_steering_energy(const dlo_system* sys, const dlo_pastfunc* pf, double t,
                        const double* eta, double dt, double* out) {
    if (!sys || !pf || !eta || !out) {
        g_last_error = "null argument";
        return DLO_ERR_INVALID;
    }
    return guarded([&] {
        SmoothingConfig cfg;
        cfg.dt = dt;
        *out = steering_energy(sys->sys, pf->pf, t, make_segment(sys->sys, eta, nullptr, dt),
                               cfg);
    });
}

int dlo_run_config(const char* config_json, const char* out_dir, int threads,
                   char** summary_json_out) {
    if (!config_json) {
        g_last_error = "null config";
        return DLO_ERR_INVALID;
    }
    int status = DLO_ERR_RUNTIME;
    int rc = guarded([&] {
        if (threads > 0) set_worker_count(threads);
        RunResult r = run_config_json(config_json, out_dir ? out_dir : "");
        if (summary_json_out) *summary_json_out = dup_string(r.summary_json);
        status = r.status;
    });
    return rc == DLO_OK ? status : rc;
}

} // extern "C"
