/* C API for the delayou library: partial smoothing, Kolmogorov/HJB solvers
 * and feedback control for delay Ornstein-Uhlenbeck dynamics.
 *
 * Conventions: functions return 0 on success, nonzero error codes otherwise;
 * dlo_last_error() describes the most recent failure on the calling thread.
 * Objects are opaque handles released with their dlo_*_free function; strings
 * returned as char* are owned by the caller and released with dlo_string_free.
 */
#ifndef DELAYOU_H
#define DELAYOU_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum dlo_status {
    DLO_OK = 0,
    DLO_ERR_INVALID = 1,     /* bad arguments / validation failure */
    DLO_ERR_DOMAIN = 2,      /* mathematical precondition violated */
    DLO_ERR_RUNTIME = 3,     /* certificate or iteration failure */
    DLO_ERR_UNKNOWN_NAME = 4 /* catalog lookup failed */
};

typedef struct dlo_system dlo_system;
typedef struct dlo_pastfunc dlo_pastfunc;

const char* dlo_last_error(void);
void dlo_string_free(char* s);
void dlo_version(int* major, int* minor);

/* Catalog-backed construction; see dlo_catalog_json for available names. */
int dlo_system_create(const char* name, dlo_system** out);
void dlo_system_free(dlo_system* sys);
int dlo_system_dim(const dlo_system* sys, int* n_out);

int dlo_pastfunc_create(const char* name, dlo_pastfunc** out);
void dlo_pastfunc_free(dlo_pastfunc* pf);

/* JSON listing of registered systems, reductions, observables, drifts,
 * nonlinearities and benchmark problems. */
char* dlo_catalog_json(void);

/* Reduced covariance bar Q_t^s; out must hold n*n doubles (row-major). */
int dlo_covariance(const dlo_system* sys, const dlo_pastfunc* pf, double s, double t,
                   int quad_nodes, double dt, double* out);

/* Fitted log-log slope of lambda_min(bar Q_t) over t_list. */
int dlo_smoothing_slope(const dlo_system* sys, const dlo_pastfunc* pf, const double* t_list,
                        size_t len, int quad_nodes, double dt, double* slope_out);

/* R_t[phibar∘P](x) for a constant-tail initial segment (head, tail value). */
int dlo_ou_apply(const dlo_system* sys, const dlo_pastfunc* pf, const char* phibar_name,
                 double t, const double* head, const double* tail_value, double dt,
                 double* out);

/* Directional gradient of R_t along a head perturbation direction eta. */
int dlo_ou_gradient(const dlo_system* sys, const dlo_pastfunc* pf, const char* phibar_name,
                    double t, const double* head, const double* tail_value, const double* eta,
                    double dt, double* out);

/* Minimum-energy steering norm for a head direction eta. */
int dlo_steering_energy(const dlo_system* sys, const dlo_pastfunc* pf, double t,
                        const double* eta, double dt, double* out);

/* Runs a config-driven experiment; writes artifacts into out_dir and returns
 * the summary JSON. Returns 0 ok, 2 validation failure, 3 certificate failure. */
int dlo_run_config(const char* config_json, const char* out_dir, int threads,
                   char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* DELAYOU_H */
