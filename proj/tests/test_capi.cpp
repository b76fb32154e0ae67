// Exercises the public C API surface end to end: synth -> extract -> fit ->
// save/load -> score -> global importance -> selection -> local explanations,
// plus the error-path contract.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "evad.h"
#include "test_util.hpp"

TEST_CASE("version strings are exposed") {
    CHECK(evad_version() != nullptr);
    CHECK(evad_model_format_version() == 1);
}

TEST_CASE("defaults are populated by evad_fit_params_init") {
    evad_fit_params params;
    evad_fit_params_init(&params);
    CHECK(params.n_trees == 100);
    CHECK(params.subsample_size == 256);
    CHECK(params.max_depth == 0);
    CHECK(params.contamination == 0.05);
    CHECK(params.sample_with_replacement == 0);
}

TEST_CASE("full workflow through the C API") {
    testutil::TempDir dir;

    evad_sessions* sessions = nullptr;
    REQUIRE(evad_sessions_synth(400, 0.05, 42, &sessions) == EVAD_OK);
    CHECK(evad_sessions_count(sessions) == 400);
    CHECK(evad_sessions_dropped_count(sessions) == 0);
    CHECK(evad_sessions_has_labels(sessions) == 1);
    REQUIRE(evad_sessions_write_csv(sessions, dir.file("meta.csv").c_str(),
                                    dir.file("signals.csv").c_str()) == EVAD_OK);
    REQUIRE(evad_sessions_write_labels(sessions, dir.file("labels.csv").c_str()) == EVAD_OK);
    REQUIRE(evad_sessions_write_drop_report(sessions, dir.file("drops.jsonl").c_str()) == EVAD_OK);

    // Round-trip through the file formats.
    evad_sessions* parsed = nullptr;
    REQUIRE(evad_sessions_parse(dir.file("meta.csv").c_str(), dir.file("signals.csv").c_str(),
                                &parsed) == EVAD_OK);
    CHECK(evad_sessions_count(parsed) == 400);
    CHECK(evad_sessions_has_labels(parsed) == 0);
    CHECK(evad_sessions_write_labels(parsed, dir.file("nolabels.csv").c_str()) ==
          EVAD_ERR_INVALID_ARG);

    evad_features* features = nullptr;
    REQUIRE(evad_features_extract(sessions, &features) == EVAD_OK);
    CHECK(evad_features_rows(features) == 400);
    CHECK(evad_features_cols(features) == 22);
    CHECK(std::string(evad_features_name(features, 0)) == "P_mean");
    CHECK(std::string(evad_features_row_id(features, 0)) == "S000000");
    CHECK(evad_features_name(features, 99) == nullptr);

    REQUIRE(evad_features_write_csv(features, dir.file("features.csv").c_str()) == EVAD_OK);
    evad_features* reread = nullptr;
    REQUIRE(evad_features_read_csv(dir.file("features.csv").c_str(), &reread) == EVAD_OK);
    CHECK(evad_features_rows(reread) == 400);
    CHECK(evad_features_value(reread, 3, 4) == evad_features_value(features, 3, 4));

    evad_fit_params params;
    evad_fit_params_init(&params);
    params.seed = 7;
    evad_model* model = nullptr;
    REQUIRE(evad_fit(features, &params, &model) == EVAD_OK);
    CHECK(evad_model_num_trees(model) == 100);
    CHECK(evad_model_num_features(model) == 22);
    CHECK(evad_model_max_depth(model) == 8);  // ceil(log2 256)
    CHECK(std::string(evad_model_feature_name(model, 21)) == "T_corrlag");

    evad_fit_params resolved;
    evad_model_get_params(model, &resolved);
    CHECK(resolved.subsample_size == 256);
    CHECK(resolved.max_depth == 8);
    CHECK(resolved.seed == 7);

    REQUIRE(evad_model_save(model, dir.file("model.json").c_str()) == EVAD_OK);
    evad_model* loaded = nullptr;
    REQUIRE(evad_model_load(dir.file("model.json").c_str(), &loaded) == EVAD_OK);
    CHECK(evad_model_threshold(loaded) == evad_model_threshold(model));

    const std::size_t n = evad_features_rows(features);
    std::vector<double> scores(n), scores2(n);
    std::vector<int32_t> labels(n);
    REQUIRE(evad_model_score_batch(model, features, scores.data(), labels.data()) == EVAD_OK);
    REQUIRE(evad_model_score_batch(loaded, features, scores2.data(), nullptr) == EVAD_OK);
    std::size_t outliers = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(scores[i] > 0.0);
        CHECK(scores[i] < 1.0);
        CHECK(scores[i] == scores2[i]);
        outliers += static_cast<std::size_t>(labels[i]);
    }
    CHECK(outliers >= 19);
    CHECK(outliers <= 21);  // contamination 0.05 on n=400

    std::vector<double> row(evad_features_cols(features));
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = evad_features_value(features, 0, j);
    double one_score = 0.0;
    REQUIRE(evad_model_score(model, row.data(), row.size(), &one_score) == EVAD_OK);
    CHECK(one_score == scores[0]);

    REQUIRE(evad_model_write_scores_csv(model, features, dir.file("scores.csv").c_str()) ==
            EVAD_OK);
    CHECK(testutil::read_lines(dir.file("scores.csv")).size() == n + 1);

    // Global importance on the fitted model and via multi-run averaging.
    evad_gfi* gfi = nullptr;
    REQUIRE(evad_gfi_compute(model, features, &gfi) == EVAD_OK);
    CHECK(evad_gfi_dim(gfi) == 22);
    std::vector<double> gfi_values(22);
    std::vector<size_t> ranking(22);
    REQUIRE(evad_gfi_values(gfi, gfi_values.data()) == EVAD_OK);
    REQUIRE(evad_gfi_ranking(gfi, ranking.data()) == EVAD_OK);
    CHECK(gfi_values[ranking[0]] >= gfi_values[ranking[21]]);

    evad_gfi* averaged = nullptr;
    REQUIRE(evad_gfi_multi_run(features, &params, 2, &averaged) == EVAD_OK);
    REQUIRE(evad_gfi_write_csv(averaged, dir.file("gfi.csv").c_str()) == EVAD_OK);
    REQUIRE(evad_gfi_write_selection_json(averaged, 9, dir.file("selection.json").c_str()) ==
            EVAD_OK);
    CHECK(testutil::read_lines(dir.file("gfi.csv")).size() == 23);
    CHECK(evad_gfi_write_selection_json(averaged, 0, dir.file("bad.json").c_str()) ==
          EVAD_ERR_INVALID_ARG);
    CHECK(evad_gfi_write_selection_json(averaged, 23, dir.file("bad.json").c_str()) ==
          EVAD_ERR_INVALID_ARG);

    // Reduced refit through the selection.
    std::vector<size_t> avg_ranking(22);
    REQUIRE(evad_gfi_ranking(averaged, avg_ranking.data()) == EVAD_OK);
    evad_features* reduced = nullptr;
    REQUIRE(evad_features_select(features, avg_ranking.data(), 9, &reduced) == EVAD_OK);
    CHECK(evad_features_cols(reduced) == 9);
    evad_model* reduced_model = nullptr;
    REQUIRE(evad_fit(reduced, &params, &reduced_model) == EVAD_OK);
    CHECK(evad_model_num_features(reduced_model) == 9);

    // Local explanations.
    evad_explanations* expl = nullptr;
    REQUIRE(evad_local_explain(model, features, 0, &expl) == EVAD_OK);
    CHECK(evad_explanations_count(expl) == outliers);
    std::vector<double> lfi(22);
    std::vector<size_t> local_rank(22);
    REQUIRE(evad_explanations_lfi(expl, 0, lfi.data()) == EVAD_OK);
    REQUIRE(evad_explanations_ranking(expl, 0, local_rank.data()) == EVAD_OK);
    for (double v : lfi) CHECK(v >= 0.0);
    CHECK(evad_explanations_session_id(expl, 0) != nullptr);
    CHECK(evad_explanations_score(expl, 0) >= evad_model_threshold(model));
    REQUIRE(evad_explanations_write_jsonl(expl, dir.file("expl.jsonl").c_str()) == EVAD_OK);
    REQUIRE(evad_explanations_write_rank_distribution_csv(
                expl, dir.file("rank_distribution.csv").c_str()) == EVAD_OK);
    CHECK(testutil::read_lines(dir.file("expl.jsonl")).size() == outliers);
    CHECK(testutil::read_lines(dir.file("rank_distribution.csv")).size() == 1 + 22 * 22);

    double single_lfi[22];
    size_t single_rank[22];
    REQUIRE(evad_model_local_diffi(model, row.data(), row.size(), single_lfi, single_rank) ==
            EVAD_OK);

    evad_explanations_free(expl);
    evad_model_free(reduced_model);
    evad_features_free(reduced);
    evad_gfi_free(averaged);
    evad_gfi_free(gfi);
    evad_model_free(loaded);
    evad_model_free(model);
    evad_features_free(reread);
    evad_features_free(features);
    evad_sessions_free(parsed);
    evad_sessions_free(sessions);
}

TEST_CASE("failures set a status and a message") {
    testutil::TempDir dir;

    evad_sessions* sessions = nullptr;
    CHECK(evad_sessions_parse(nullptr, "x", &sessions) == EVAD_ERR_INVALID_ARG);
    CHECK(evad_sessions_parse(dir.file("absent.csv").c_str(), dir.file("absent2.csv").c_str(),
                              &sessions) == EVAD_ERR_IO);
    CHECK(std::strlen(evad_last_error()) > 0);

    testutil::write_file(dir.file("bad_meta.csv"), "nope\nS1\n");
    testutil::write_file(dir.file("signals.csv"),
                         "session_id,timestamp,power_kw,temperature_c\n");
    CHECK(evad_sessions_parse(dir.file("bad_meta.csv").c_str(), dir.file("signals.csv").c_str(),
                              &sessions) == EVAD_ERR_FORMAT);

    CHECK(evad_sessions_synth(10, 0.0, 1, &sessions) == EVAD_ERR_INVALID_ARG);
    CHECK(evad_sessions_synth(10, 0.5, 1, nullptr) == EVAD_ERR_INVALID_ARG);

    evad_model* model = nullptr;
    CHECK(evad_model_load(dir.file("no_model.json").c_str(), &model) == EVAD_ERR_IO);
    testutil::write_file(dir.file("garbage.json"), "{not json");
    CHECK(evad_model_load(dir.file("garbage.json").c_str(), &model) == EVAD_ERR_FORMAT);

    // Schema mismatch between a model and a feature matrix.
    evad_sessions* synth = nullptr;
    REQUIRE(evad_sessions_synth(80, 0.1, 3, &synth) == EVAD_OK);
    evad_features* features = nullptr;
    REQUIRE(evad_features_extract(synth, &features) == EVAD_OK);
    evad_fit_params params;
    evad_fit_params_init(&params);
    params.subsample_size = 64;
    evad_model* fitted = nullptr;
    REQUIRE(evad_fit(features, &params, &fitted) == EVAD_OK);

    std::vector<size_t> first_two = {0, 1};
    evad_features* narrow = nullptr;
    REQUIRE(evad_features_select(features, first_two.data(), 2, &narrow) == EVAD_OK);
    std::vector<double> scores(80);
    CHECK(evad_model_score_batch(fitted, narrow, scores.data(), nullptr) == EVAD_ERR_SCHEMA);
    CHECK(std::strlen(evad_last_error()) > 0);

    double s = 0.0;
    CHECK(evad_model_score(fitted, scores.data(), 2, &s) == EVAD_ERR_SCHEMA);

    evad_features* empty_sel = nullptr;
    CHECK(evad_features_select(features, first_two.data(), 0, &empty_sel) ==
          EVAD_ERR_INVALID_ARG);

    evad_model_free(fitted);
    evad_features_free(narrow);
    evad_features_free(features);
    evad_sessions_free(synth);
}
