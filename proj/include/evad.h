/* evad: explainable anomaly detection for EV charging sessions.
 *
 * C API of the shared library. All heap-allocated objects are returned as
 * opaque handles and freed with the matching *_free function. Functions that
 * can fail return an evad_status; on failure evad_last_error() carries a
 * human-readable message for the calling thread.
 */
#ifndef EVAD_H
#define EVAD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evad_status {
    EVAD_OK = 0,
    EVAD_ERR_INVALID_ARG = 1, /* bad argument or failed validation */
    EVAD_ERR_IO = 2,          /* file unreadable or unwritable */
    EVAD_ERR_FORMAT = 3,      /* malformed file, version or checksum mismatch */
    EVAD_ERR_SCHEMA = 4,      /* feature schema does not match the model */
    EVAD_ERR_INTERNAL = 5
} evad_status;

typedef struct evad_sessions evad_sessions;         /* parsed or synthesized corpus */
typedef struct evad_features evad_features;         /* feature matrix */
typedef struct evad_model evad_model;               /* fitted isolation forest */
typedef struct evad_gfi evad_gfi;                   /* global feature importance */
typedef struct evad_explanations evad_explanations; /* local explanations */

typedef struct evad_fit_params {
    int32_t n_trees;        /* default 100 */
    int32_t subsample_size; /* default 256, clamped to the row count */
    int32_t max_depth;      /* 0 = ceil(log2(subsample_size)) */
    double contamination;   /* (0, 0.5], default 0.05 */
    uint64_t seed;
    int32_t sample_with_replacement; /* 0 = distinct subsets (default) */
} evad_fit_params;

const char* evad_version(void);
int32_t evad_model_format_version(void);

/* Message from the last failing call on this thread; empty string if none. */
const char* evad_last_error(void);

void evad_fit_params_init(evad_fit_params* params);

/* ---- sessions -------------------------------------------------------- */

/* Parses the two-file corpus. Invalid sessions are dropped with a recorded
 * reason rather than failing the call. */
evad_status evad_sessions_parse(const char* meta_csv_path, const char* signals_csv_path,
                                evad_sessions** out);

/* Deterministic synthetic corpus with round(contamination * n) planted
 * anomalies of the four built-in kinds. */
evad_status evad_sessions_synth(int64_t n_sessions, double contamination, uint64_t seed,
                                evad_sessions** out);

void evad_sessions_free(evad_sessions* s);
size_t evad_sessions_count(const evad_sessions* s);
size_t evad_sessions_dropped_count(const evad_sessions* s);
int32_t evad_sessions_has_labels(const evad_sessions* s);

evad_status evad_sessions_write_csv(const evad_sessions* s, const char* meta_csv_path,
                                    const char* signals_csv_path);
evad_status evad_sessions_write_drop_report(const evad_sessions* s, const char* jsonl_path);
/* Ground-truth labels; fails unless the corpus came from evad_sessions_synth. */
evad_status evad_sessions_write_labels(const evad_sessions* s, const char* csv_path);

/* ---- features -------------------------------------------------------- */

evad_status evad_features_extract(const evad_sessions* s, evad_features** out);
evad_status evad_features_read_csv(const char* path, evad_features** out);
evad_status evad_features_write_csv(const evad_features* f, const char* path);
void evad_features_free(evad_features* f);

size_t evad_features_rows(const evad_features* f);
size_t evad_features_cols(const evad_features* f);
const char* evad_features_name(const evad_features* f, size_t col);
const char* evad_features_row_id(const evad_features* f, size_t row);
double evad_features_value(const evad_features* f, size_t row, size_t col);

/* Column subset in the given order (defines the new schema order). */
evad_status evad_features_select(const evad_features* f, const size_t* columns, size_t count,
                                 evad_features** out);

/* ---- model ----------------------------------------------------------- */

evad_status evad_fit(const evad_features* f, const evad_fit_params* params, evad_model** out);
void evad_model_free(evad_model* m);

evad_status evad_model_save(const evad_model* m, const char* path);
evad_status evad_model_load(const char* path, evad_model** out);

size_t evad_model_num_trees(const evad_model* m);
size_t evad_model_num_features(const evad_model* m);
const char* evad_model_feature_name(const evad_model* m, size_t col);
double evad_model_threshold(const evad_model* m);
int32_t evad_model_max_depth(const evad_model* m);
void evad_model_get_params(const evad_model* m, evad_fit_params* out);

/* Scores one feature vector laid out in model schema order. */
evad_status evad_model_score(const evad_model* m, const double* x, size_t dim, double* out_score);

/* Scores every row; `scores` must hold rows() doubles. `labels` may be NULL,
 * otherwise it receives 0/1 predictions from the stored threshold. */
evad_status evad_model_score_batch(const evad_model* m, const evad_features* f, double* scores,
                                   int32_t* labels);

/* scores.csv: session_id,score,label */
evad_status evad_model_write_scores_csv(const evad_model* m, const evad_features* f,
                                        const char* path);

/* ---- global importance ------------------------------------------------ */

/* Single-forest global importance of `m` evaluated on `f`. Fails when the
 * model predicts no outliers (or no inliers) on the data. */
evad_status evad_gfi_compute(const evad_model* m, const evad_features* f, evad_gfi** out);

/* Averages `n_runs` freshly fitted forests with seeds derived from
 * params->seed. */
evad_status evad_gfi_multi_run(const evad_features* f, const evad_fit_params* params,
                               int32_t n_runs, evad_gfi** out);

void evad_gfi_free(evad_gfi* g);
size_t evad_gfi_dim(const evad_gfi* g);
const char* evad_gfi_feature_name(const evad_gfi* g, size_t col);
/* `values`/`ranking` must hold dim() entries. ranking[0] is the index of the
 * most important feature. */
evad_status evad_gfi_values(const evad_gfi* g, double* values);
evad_status evad_gfi_ranking(const evad_gfi* g, size_t* ranking);

evad_status evad_gfi_write_csv(const evad_gfi* g, const char* path);
evad_status evad_gfi_write_selection_json(const evad_gfi* g, size_t k, const char* path);

/* ---- local explanations ----------------------------------------------- */

/* Explains every predicted outlier of `f` (every row when explain_all). */
evad_status evad_local_explain(const evad_model* m, const evad_features* f, int32_t explain_all,
                               evad_explanations** out);

void evad_explanations_free(evad_explanations* e);
size_t evad_explanations_count(const evad_explanations* e);
const char* evad_explanations_session_id(const evad_explanations* e, size_t i);
double evad_explanations_score(const evad_explanations* e, size_t i);
/* `lfi`/`ranking` must hold model-dimension entries. */
evad_status evad_explanations_lfi(const evad_explanations* e, size_t i, double* lfi);
evad_status evad_explanations_ranking(const evad_explanations* e, size_t i, size_t* ranking);

evad_status evad_explanations_write_jsonl(const evad_explanations* e, const char* path);
evad_status evad_explanations_write_rank_distribution_csv(const evad_explanations* e,
                                                          const char* path);

/* Local importance of a single vector in model schema order; `lfi` and
 * `ranking` must hold dim entries (ranking may be NULL). */
evad_status evad_model_local_diffi(const evad_model* m, const double* x, size_t dim, double* lfi,
                                   size_t* ranking);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EVAD_H */
