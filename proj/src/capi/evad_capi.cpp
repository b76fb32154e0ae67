// C API implementation: thin error-code wrapper over the core library.

#include "evad.h"

#include <exception>
#include <string>
#include <vector>

#include "core/diffi_global.hpp"
#include "core/diffi_local.hpp"
#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/forest.hpp"
#include "core/ingest.hpp"
#include "core/synth.hpp"

namespace {

thread_local std::string g_last_error;

evad_status fail(evad_status code, const char* what) {
    g_last_error = what;
    return code;
}

// Maps core exceptions to status codes; guards every entry point.
template <typename Fn>
evad_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return EVAD_OK;
    } catch (const evad::SchemaError& e) {
        return fail(EVAD_ERR_SCHEMA, e.what());
    } catch (const evad::FormatError& e) {
        return fail(EVAD_ERR_FORMAT, e.what());
    } catch (const evad::IoError& e) {
        return fail(EVAD_ERR_IO, e.what());
    } catch (const evad::ValidationError& e) {
        return fail(EVAD_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(EVAD_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(EVAD_ERR_INTERNAL, "unknown error");
    }
}

evad_status require(bool ok, const char* what) {
    return ok ? EVAD_OK : fail(EVAD_ERR_INVALID_ARG, what);
}

evad::ForestParams to_core(const evad_fit_params& p) {
    evad::ForestParams out;
    out.n_trees = p.n_trees;
    out.subsample_size = p.subsample_size;
    out.max_depth = p.max_depth;
    out.contamination = p.contamination;
    out.seed = p.seed;
    out.sample_with_replacement = p.sample_with_replacement != 0;
    return out;
}

evad_fit_params from_core(const evad::ForestParams& p) {
    evad_fit_params out;
    out.n_trees = p.n_trees;
    out.subsample_size = p.subsample_size;
    out.max_depth = p.max_depth;
    out.contamination = p.contamination;
    out.seed = p.seed;
    out.sample_with_replacement = p.sample_with_replacement ? 1 : 0;
    return out;
}

}  // namespace

struct evad_sessions {
    std::vector<evad::SessionRecord> sessions;
    std::vector<evad::DropReport> dropped;
    std::vector<evad::GroundTruthLabel> labels;  // synth corpora only
};

struct evad_features {
    evad::FeatureMatrix matrix;
};

struct evad_model {
    evad::IsolationForest forest;
};

struct evad_gfi {
    evad::GfiReport report;
};

struct evad_explanations {
    std::vector<evad::LocalExplanation> explanations;
    std::vector<std::string> schema;
};

extern "C" {

const char* evad_version(void) { return "0.1.0"; }

int32_t evad_model_format_version(void) { return evad::kModelFormatVersion; }

const char* evad_last_error(void) { return g_last_error.c_str(); }

void evad_fit_params_init(evad_fit_params* params) {
    if (params == nullptr) return;
    *params = from_core(evad::ForestParams{});
}

/* ---- sessions -------------------------------------------------------- */

evad_status evad_sessions_parse(const char* meta_csv_path, const char* signals_csv_path,
                                evad_sessions** out) {
    if (auto rc = require(meta_csv_path && signals_csv_path && out, "null argument")) return rc;
    return guarded([&] {
        auto result = evad::parse_sessions(meta_csv_path, signals_csv_path);
        auto* handle = new evad_sessions;
        handle->sessions = std::move(result.sessions);
        handle->dropped = std::move(result.dropped);
        *out = handle;
    });
}

evad_status evad_sessions_synth(int64_t n_sessions, double contamination, uint64_t seed,
                                evad_sessions** out) {
    if (auto rc = require(out != nullptr, "null argument")) return rc;
    return guarded([&] {
        const auto mix = evad::default_anomaly_mix();
        auto result = evad::synth_generate(n_sessions, contamination, mix, seed);
        auto* handle = new evad_sessions;
        handle->sessions = std::move(result.sessions);
        handle->labels = std::move(result.labels);
        *out = handle;
    });
}

void evad_sessions_free(evad_sessions* s) { delete s; }

size_t evad_sessions_count(const evad_sessions* s) { return s ? s->sessions.size() : 0; }

size_t evad_sessions_dropped_count(const evad_sessions* s) { return s ? s->dropped.size() : 0; }

int32_t evad_sessions_has_labels(const evad_sessions* s) {
    return s && !s->labels.empty() ? 1 : 0;
}

evad_status evad_sessions_write_csv(const evad_sessions* s, const char* meta_csv_path,
                                    const char* signals_csv_path) {
    if (auto rc = require(s && meta_csv_path && signals_csv_path, "null argument")) return rc;
    return guarded([&] { evad::write_sessions_csv(s->sessions, meta_csv_path, signals_csv_path); });
}

evad_status evad_sessions_write_drop_report(const evad_sessions* s, const char* jsonl_path) {
    if (auto rc = require(s && jsonl_path, "null argument")) return rc;
    return guarded([&] { evad::write_drop_report(s->dropped, jsonl_path); });
}

evad_status evad_sessions_write_labels(const evad_sessions* s, const char* csv_path) {
    if (auto rc = require(s && csv_path, "null argument")) return rc;
    if (auto rc = require(!s->labels.empty(), "corpus has no ground-truth labels")) return rc;
    return guarded([&] { evad::write_labels_csv(s->labels, csv_path); });
}

/* ---- features -------------------------------------------------------- */

evad_status evad_features_extract(const evad_sessions* s, evad_features** out) {
    if (auto rc = require(s && out, "null argument")) return rc;
    return guarded([&] { *out = new evad_features{evad::extract_all(s->sessions)}; });
}

evad_status evad_features_read_csv(const char* path, evad_features** out) {
    if (auto rc = require(path && out, "null argument")) return rc;
    return guarded([&] { *out = new evad_features{evad::read_features_csv(path)}; });
}

evad_status evad_features_write_csv(const evad_features* f, const char* path) {
    if (auto rc = require(f && path, "null argument")) return rc;
    return guarded([&] { evad::write_features_csv(f->matrix, path); });
}

void evad_features_free(evad_features* f) { delete f; }

size_t evad_features_rows(const evad_features* f) { return f ? f->matrix.rows() : 0; }

size_t evad_features_cols(const evad_features* f) { return f ? f->matrix.cols() : 0; }

const char* evad_features_name(const evad_features* f, size_t col) {
    return f && col < f->matrix.cols() ? f->matrix.schema[col].c_str() : nullptr;
}

const char* evad_features_row_id(const evad_features* f, size_t row) {
    return f && row < f->matrix.rows() ? f->matrix.row_ids[row].c_str() : nullptr;
}

double evad_features_value(const evad_features* f, size_t row, size_t col) {
    return f && row < f->matrix.rows() && col < f->matrix.cols() ? f->matrix.at(row, col) : 0.0;
}

evad_status evad_features_select(const evad_features* f, const size_t* columns, size_t count,
                                 evad_features** out) {
    if (auto rc = require(f && columns && out && count > 0, "null or empty argument")) return rc;
    return guarded([&] {
        *out = new evad_features{f->matrix.select_columns({columns, count})};
    });
}

/* ---- model ----------------------------------------------------------- */

evad_status evad_fit(const evad_features* f, const evad_fit_params* params, evad_model** out) {
    if (auto rc = require(f && params && out, "null argument")) return rc;
    return guarded([&] {
        *out = new evad_model{evad::IsolationForest::fit(f->matrix, to_core(*params))};
    });
}

void evad_model_free(evad_model* m) { delete m; }

evad_status evad_model_save(const evad_model* m, const char* path) {
    if (auto rc = require(m && path, "null argument")) return rc;
    return guarded([&] { m->forest.save(path); });
}

evad_status evad_model_load(const char* path, evad_model** out) {
    if (auto rc = require(path && out, "null argument")) return rc;
    return guarded([&] { *out = new evad_model{evad::IsolationForest::load(path)}; });
}

size_t evad_model_num_trees(const evad_model* m) { return m ? m->forest.trees().size() : 0; }

size_t evad_model_num_features(const evad_model* m) { return m ? m->forest.schema().size() : 0; }

const char* evad_model_feature_name(const evad_model* m, size_t col) {
    return m && col < m->forest.schema().size() ? m->forest.schema()[col].c_str() : nullptr;
}

double evad_model_threshold(const evad_model* m) { return m ? m->forest.threshold_score() : 0.0; }

int32_t evad_model_max_depth(const evad_model* m) { return m ? m->forest.max_depth() : 0; }

void evad_model_get_params(const evad_model* m, evad_fit_params* out) {
    if (m == nullptr || out == nullptr) return;
    *out = from_core(m->forest.params());
}

evad_status evad_model_score(const evad_model* m, const double* x, size_t dim, double* out_score) {
    if (auto rc = require(m && x && out_score, "null argument")) return rc;
    return guarded([&] { *out_score = m->forest.score({x, dim}); });
}

evad_status evad_model_score_batch(const evad_model* m, const evad_features* f, double* scores,
                                   int32_t* labels) {
    if (auto rc = require(m && f && scores, "null argument")) return rc;
    return guarded([&] {
        const auto values = m->forest.score_all(f->matrix);
        for (std::size_t i = 0; i < values.size(); ++i) {
            scores[i] = values[i];
            if (labels != nullptr) labels[i] = values[i] >= m->forest.threshold_score() ? 1 : 0;
        }
    });
}

evad_status evad_model_write_scores_csv(const evad_model* m, const evad_features* f,
                                        const char* path) {
    if (auto rc = require(m && f && path, "null argument")) return rc;
    return guarded([&] { evad::write_scores_csv(m->forest.classify(f->matrix), path); });
}

/* ---- global importance ------------------------------------------------ */

evad_status evad_gfi_compute(const evad_model* m, const evad_features* f, evad_gfi** out) {
    if (auto rc = require(m && f && out, "null argument")) return rc;
    return guarded([&] {
        const auto report = m->forest.classify(f->matrix);
        auto result = evad::compute_gfi(m->forest, f->matrix, report);
        *out = new evad_gfi{std::move(result.report)};
    });
}

evad_status evad_gfi_multi_run(const evad_features* f, const evad_fit_params* params,
                               int32_t n_runs, evad_gfi** out) {
    if (auto rc = require(f && params && out, "null argument")) return rc;
    return guarded([&] {
        *out = new evad_gfi{evad::multi_run_gfi(f->matrix, to_core(*params), n_runs)};
    });
}

void evad_gfi_free(evad_gfi* g) { delete g; }

size_t evad_gfi_dim(const evad_gfi* g) { return g ? g->report.schema.size() : 0; }

const char* evad_gfi_feature_name(const evad_gfi* g, size_t col) {
    return g && col < g->report.schema.size() ? g->report.schema[col].c_str() : nullptr;
}

evad_status evad_gfi_values(const evad_gfi* g, double* values) {
    if (auto rc = require(g && values, "null argument")) return rc;
    for (std::size_t j = 0; j < g->report.gfi.size(); ++j) values[j] = g->report.gfi[j];
    return EVAD_OK;
}

evad_status evad_gfi_ranking(const evad_gfi* g, size_t* ranking) {
    if (auto rc = require(g && ranking, "null argument")) return rc;
    for (std::size_t j = 0; j < g->report.ranking.size(); ++j) ranking[j] = g->report.ranking[j];
    return EVAD_OK;
}

evad_status evad_gfi_write_csv(const evad_gfi* g, const char* path) {
    if (auto rc = require(g && path, "null argument")) return rc;
    return guarded([&] { evad::write_gfi_csv(g->report, path); });
}

evad_status evad_gfi_write_selection_json(const evad_gfi* g, size_t k, const char* path) {
    if (auto rc = require(g && path, "null argument")) return rc;
    return guarded([&] {
        const auto selection = evad::select_features(g->report, k);
        evad::write_selection_json(g->report, selection, path);
    });
}

/* ---- local explanations ----------------------------------------------- */

evad_status evad_local_explain(const evad_model* m, const evad_features* f, int32_t explain_all,
                               evad_explanations** out) {
    if (auto rc = require(m && f && out, "null argument")) return rc;
    return guarded([&] {
        auto* handle = new evad_explanations;
        handle->explanations = evad::explain_outliers(m->forest, f->matrix, explain_all != 0);
        handle->schema = m->forest.schema();
        *out = handle;
    });
}

void evad_explanations_free(evad_explanations* e) { delete e; }

size_t evad_explanations_count(const evad_explanations* e) {
    return e ? e->explanations.size() : 0;
}

const char* evad_explanations_session_id(const evad_explanations* e, size_t i) {
    return e && i < e->explanations.size() ? e->explanations[i].session_id.c_str() : nullptr;
}

double evad_explanations_score(const evad_explanations* e, size_t i) {
    return e && i < e->explanations.size() ? e->explanations[i].score : 0.0;
}

evad_status evad_explanations_lfi(const evad_explanations* e, size_t i, double* lfi) {
    if (auto rc = require(e && lfi && i < e->explanations.size(), "bad index or null argument"))
        return rc;
    const auto& values = e->explanations[i].lfi;
    for (std::size_t j = 0; j < values.size(); ++j) lfi[j] = values[j];
    return EVAD_OK;
}

evad_status evad_explanations_ranking(const evad_explanations* e, size_t i, size_t* ranking) {
    if (auto rc = require(e && ranking && i < e->explanations.size(), "bad index or null argument"))
        return rc;
    const auto& order = e->explanations[i].ranking;
    for (std::size_t j = 0; j < order.size(); ++j) ranking[j] = order[j];
    return EVAD_OK;
}

evad_status evad_explanations_write_jsonl(const evad_explanations* e, const char* path) {
    if (auto rc = require(e && path, "null argument")) return rc;
    return guarded([&] { evad::write_explanations_jsonl(e->explanations, e->schema, path); });
}

evad_status evad_explanations_write_rank_distribution_csv(const evad_explanations* e,
                                                          const char* path) {
    if (auto rc = require(e && path, "null argument")) return rc;
    return guarded([&] {
        const auto dist = evad::rank_distribution(e->explanations, e->schema);
        evad::write_rank_distribution_csv(dist, path);
    });
}

evad_status evad_model_local_diffi(const evad_model* m, const double* x, size_t dim, double* lfi,
                                   size_t* ranking) {
    if (auto rc = require(m && x && lfi, "null argument")) return rc;
    return guarded([&] {
        const auto expl = evad::local_diffi(m->forest, {x, dim});
        for (std::size_t j = 0; j < expl.lfi.size(); ++j) lfi[j] = expl.lfi[j];
        if (ranking != nullptr) {
            for (std::size_t j = 0; j < expl.ranking.size(); ++j) ranking[j] = expl.ranking[j];
        }
    });
}

}  // extern "C"
