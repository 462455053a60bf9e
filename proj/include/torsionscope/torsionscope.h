/* torsionscope C API.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a ts_status; on failure the message is available
 * from ts_last_error() (thread-local, valid until the next failing call).
 * Strings returned through char** are heap allocated; release them with
 * ts_string_free. Structured results (reports, histories) come back as JSON.
 */
#ifndef TORSIONSCOPE_H
#define TORSIONSCOPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TS_API __declspec(dllexport)
#else
#define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_INVALID_ARGUMENT = 1,
  TS_PRECONDITION = 2,
  TS_CAPACITY_EXCEEDED = 3,
  TS_NUMERIC_FAILURE = 4,
  TS_IO = 5,
  TS_INTERNAL = 6
} ts_status;

typedef struct ts_cloud ts_cloud;
typedef struct ts_filtration ts_filtration;
typedef struct ts_diagram ts_diagram;
typedef struct ts_model ts_model;

typedef enum ts_metric { TS_BOTTLENECK = 0, TS_WASSERSTEIN1 = 1 } ts_metric;
typedef enum ts_infinite_bars { TS_INF_EXCLUDE = 0, TS_INF_MATCH = 1, TS_INF_CAP = 2 } ts_infinite_bars;

typedef void (*ts_log_fn)(const char* line, void* user);

TS_API const char* ts_version(void);
TS_API const char* ts_last_error(void);
TS_API const char* ts_status_name(ts_status s);
TS_API void ts_string_free(char* s);

/* point clouds: CSV (optional "# dim=d" header) or JSON {dim, points} by extension */
TS_API ts_status ts_cloud_read(const char* path, ts_cloud** out);
TS_API ts_status ts_cloud_write(const ts_cloud* cloud, const char* path);
TS_API ts_status ts_cloud_from_array(const double* coords, size_t n_points, size_t dim, ts_cloud** out);
TS_API size_t ts_cloud_size(const ts_cloud* cloud);
TS_API size_t ts_cloud_dim(const ts_cloud* cloud);
/* row-major coordinates, n_points * dim doubles, owned by the cloud */
TS_API const double* ts_cloud_data(const ts_cloud* cloud);
TS_API void ts_cloud_free(ts_cloud* cloud);

TS_API ts_status ts_generate_band(int windings, int twist, size_t n_points, double band_width, uint64_t seed,
                                  ts_cloud** out);
TS_API ts_status ts_generate_rp2(size_t n_points, size_t dim, uint64_t seed, ts_cloud** out);
TS_API ts_status ts_generate_random(size_t n_points, size_t dim, uint64_t seed, ts_cloud** out);

/* Gaussian shift of the listed points (all points when indices is NULL). */
TS_API ts_status ts_perturb(const ts_cloud* cloud, const size_t* indices, size_t n_indices, double sigma,
                            uint64_t seed, ts_cloud** out, double* mse);

/* Rips filtration; radius < 0 selects the enclosing radius */
TS_API ts_status ts_rips(const ts_cloud* cloud, int max_dim, double radius, size_t simplex_cap,
                         ts_filtration** out);
TS_API ts_status ts_filtration_read(const char* path, ts_filtration** out);
TS_API ts_status ts_filtration_write(const ts_filtration* f, const char* path);
TS_API size_t ts_filtration_size(const ts_filtration* f);
TS_API int ts_filtration_max_dim(const ts_filtration* f);
TS_API void ts_filtration_free(ts_filtration* f);

/* coefficients: "q2", "q3", ..., or "rational" */
TS_API ts_status ts_diagram_compute(const ts_filtration* f, const char* coefficients, int max_hom_dim,
                                    ts_diagram** out);
TS_API ts_status ts_diagram_read(const char* path, ts_diagram** out);
TS_API ts_status ts_diagram_write(const ts_diagram* d, const char* path);
TS_API ts_status ts_diagram_json(const ts_diagram* d, char** json);
TS_API void ts_diagram_free(ts_diagram* d);

TS_API ts_status ts_diagram_distance(const ts_diagram* a, const ts_diagram* b, int dim, ts_metric metric,
                                     ts_infinite_bars infinite, double cap, double* out);

/* entropy, noise classification (alpha in (0,1); alpha <= 0 skips it),
 * minimum feature length; cap > 0 keeps infinite bars capped at that value */
TS_API ts_status ts_entropy_json(const ts_diagram* d, int dim, double alpha, double cap, char** json);

/* oracle != 0 runs the Smith-normal-form scan instead of prime comparison */
TS_API ts_status ts_torsion_check_json(const ts_filtration* f, const uint32_t* primes, size_t n_primes,
                                       int max_hom_dim, int oracle, char** json);
/* H_*(K_upper, K_lower) over Z for filtration prefixes [0, lower) and [0, upper) */
TS_API ts_status ts_homology_json(const ts_filtration* f, size_t lower, size_t upper, int max_hom_dim,
                                  char** json);

/* options_json: {"arch":[...], "loss":"mse|topo|rtd", "weight":w, "train":{...},
 * "batch_norm":bool, "activation":"relu"}; history is a JSON array */
TS_API ts_status ts_train(const ts_cloud* data, const char* options_json, ts_log_fn log, void* user,
                          ts_model** out, char** history_json);
TS_API ts_status ts_model_read(const char* path, ts_model** out);
TS_API ts_status ts_model_write(const ts_model* m, const char* path);
TS_API ts_status ts_model_apply(const ts_model* m, const ts_cloud* data, ts_cloud** reconstruction,
                                ts_cloud** latent);
TS_API void ts_model_free(ts_model* m);

/* profile: "ci" or "full" */
TS_API ts_status ts_experiment(const char* preset, const char* profile, const char* out_dir, ts_log_fn log,
                               void* user, char** report_json);
/* NUL-separated preset names, terminated by an empty string; static storage */
TS_API const char* ts_preset_names(void);

#ifdef __cplusplus
}
#endif

#endif
