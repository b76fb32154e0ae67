#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "core/diffi_local.hpp"
#include "core/features.hpp"
#include "core/synth.hpp"
#include "core/errors.hpp"
#include "core/forest.hpp"
#include "core/rng.hpp"
#include "test_util.hpp"

using namespace evad;

namespace {

FeatureMatrix gaussian_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    FeatureMatrix m;
    for (std::size_t j = 0; j < d; ++j) m.schema.push_back("f" + std::to_string(j));
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        m.row_ids.push_back("R" + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) m.values.push_back(rng.normal());
    }
    return m;
}

FeatureMatrix planted_matrix(std::size_t n, std::size_t d, std::size_t n_anom,
                             std::size_t feature, std::uint64_t seed) {
    FeatureMatrix m = gaussian_matrix(n, d, seed);
    Rng rng(seed ^ 0xF00Dull);
    for (std::size_t k = 0; k < n_anom; ++k) {
        const double sign = rng.below(2) ? 1.0 : -1.0;
        m.values[k * d + feature] = sign * rng.uniform(6.0, 10.0);
    }
    return m;
}

}  // namespace

TEST_CASE("a depth-1 isolation through one feature carries all the credit") {
    FeatureMatrix data;
    data.schema = {"x"};
    data.row_ids = {"A", "B"};
    data.values = {0.0, 100.0};

    ForestParams params;
    params.n_trees = 1;
    params.subsample_size = 2;
    params.max_depth = 8;
    params.contamination = 0.5;
    params.seed = 2;
    const auto forest = IsolationForest::fit(data, params);

    const auto expl = local_diffi(forest, std::vector<double>{0.0});
    REQUIRE(expl.lfi.size() == 1);
    CHECK(expl.lfi[0] == doctest::Approx(0.875).epsilon(1e-12));  // 1/1 - 1/8
    CHECK(expl.ranking == std::vector<std::size_t>{0});
}

TEST_CASE("paths that always reach max_depth explain nothing") {
    FeatureMatrix data;
    data.schema = {"x"};
    data.row_ids = {"A", "B"};
    data.values = {0.0, 100.0};

    ForestParams params;
    params.n_trees = 5;
    params.subsample_size = 2;
    params.max_depth = 1;  // every split lands exactly on the cap
    params.contamination = 0.5;
    params.seed = 3;
    const auto forest = IsolationForest::fit(data, params);

    const auto expl = local_diffi(forest, std::vector<double>{0.0});
    CHECK(expl.lfi[0] == 0.0);
}

TEST_CASE("local importances are non-negative and deterministic") {
    const auto data = gaussian_matrix(300, 5, 201);
    ForestParams params;
    params.seed = 7;
    const auto forest = IsolationForest::fit(data, params);

    for (std::size_t i = 0; i < 20; ++i) {
        const auto a = local_diffi(forest, data.row(i));
        const auto b = local_diffi(forest, data.row(i));
        for (std::size_t j = 0; j < a.lfi.size(); ++j) {
            CHECK(a.lfi[j] >= 0.0);
            CHECK(a.lfi[j] == b.lfi[j]);
        }
        CHECK(a.ranking == b.ranking);
        CHECK(a.score == forest.score(data.row(i)));
    }
    CHECK_THROWS_AS(local_diffi(forest, std::vector<double>{1.0}), SchemaError);
}

TEST_CASE("explain_outliers covers exactly the predicted outliers by default") {
    const auto data = planted_matrix(400, 4, 20, 0, 203);
    ForestParams params;
    params.contamination = 0.05;
    params.seed = 9;
    const auto forest = IsolationForest::fit(data, params);
    const auto report = forest.classify(data);

    const auto expl = explain_outliers(forest, data);
    CHECK(expl.size() == report.outliers.size());
    for (const auto& e : expl) CHECK(e.predicted_outlier);

    const auto all = explain_outliers(forest, data, true);
    CHECK(all.size() == data.rows());
}

TEST_CASE("planted anomalies rank the planted feature first locally") {
    const auto data = planted_matrix(800, 6, 40, 0, 207);
    ForestParams params;
    params.contamination = 0.05;
    params.seed = 11;
    const auto forest = IsolationForest::fit(data, params);
    const auto report = forest.classify(data);

    std::size_t detected = 0, rank1_hits = 0;
    for (std::size_t k = 0; k < 40; ++k) {
        if (!report.labels[k]) continue;
        ++detected;
        const auto expl = local_diffi(forest, data.row(k));
        if (expl.ranking[0] == 0) ++rank1_hits;
    }
    REQUIRE(detected >= 20);
    CHECK(static_cast<double>(rank1_hits) >= 0.8 * static_cast<double>(detected));
}

TEST_CASE("temperature spikes are explained by the temperature-shape features") {
    std::vector<AnomalySpec> spikes = {
        {AnomalyKind::temperature_spike, default_target_hint(AnomalyKind::temperature_spike), 1.0}};
    std::size_t detected = 0, in_set = 0;
    for (std::uint64_t seed : {8ull, 21ull}) {
        const auto corpus = synth_generate(2000, 0.01, spikes, seed);
        const auto data = extract_all(corpus.sessions);
        ForestParams params;
        params.contamination = 0.05;
        params.seed = seed;
        const auto forest = IsolationForest::fit(data, params);
        const auto report = forest.classify(data);
        for (std::size_t i = 0; i < corpus.labels.size(); ++i) {
            if (!corpus.labels[i].is_anomaly || !report.labels[i]) continue;
            ++detected;
            const auto expl = local_diffi(forest, data.row(i));
            const auto& top = data.schema[expl.ranking[0]];
            const auto& expected = expected_feature_set(AnomalyKind::temperature_spike);
            if (std::find(expected.begin(), expected.end(), top) != expected.end()) ++in_set;
        }
    }
    REQUIRE(detected >= 30);
    CHECK(static_cast<double>(in_set) >= 0.8 * static_cast<double>(detected));
}

TEST_CASE("rank_distribution is a doubly stochastic summary of the rankings") {
    const auto data = planted_matrix(500, 5, 25, 2, 211);
    ForestParams params;
    params.contamination = 0.05;
    params.seed = 13;
    const auto forest = IsolationForest::fit(data, params);
    const auto expl = explain_outliers(forest, data);
    REQUIRE(!expl.empty());

    const auto dist = rank_distribution(expl, data.schema);
    const std::size_t d = data.schema.size();
    for (std::size_t r = 1; r <= d; ++r) {
        double column = 0.0;
        for (std::size_t f = 0; f < d; ++f) column += dist.at(f, r);
        CHECK(column == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t f = 0; f < d; ++f) {
        double row = 0.0;
        for (std::size_t r = 1; r <= d; ++r) row += dist.at(f, r);
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
    // The planted feature should take rank 1 for most explained anomalies.
    CHECK(dist.at(2, 1) >= 0.5);
}

TEST_CASE("two anomalies agreeing on the top feature put its rank-1 fraction at 1") {
    LocalExplanation a;
    a.session_id = "A";
    a.lfi = {0.9, 0.1, 0.0};
    a.ranking = {0, 1, 2};
    LocalExplanation b;
    b.session_id = "B";
    b.lfi = {0.8, 0.0, 0.2};
    b.ranking = {0, 2, 1};

    const std::vector<std::string> schema = {"x", "y", "z"};
    const auto dist = rank_distribution(std::vector<LocalExplanation>{a, b}, schema);
    CHECK(dist.at(0, 1) == 1.0);
    CHECK(dist.at(1, 2) == 0.5);
    CHECK(dist.at(2, 2) == 0.5);

    CHECK_THROWS_AS(rank_distribution(std::vector<LocalExplanation>{}, schema), ValidationError);
}

TEST_CASE("explanation files have the documented layout") {
    const auto data = planted_matrix(300, 4, 15, 1, 213);
    ForestParams params;
    params.contamination = 0.05;
    params.seed = 15;
    const auto forest = IsolationForest::fit(data, params);
    const auto expl = explain_outliers(forest, data);
    REQUIRE(!expl.empty());

    testutil::TempDir dir;
    write_explanations_jsonl(expl, data.schema, dir.file("expl.jsonl"));
    const auto lines = testutil::read_lines(dir.file("expl.jsonl"));
    REQUIRE(lines.size() == expl.size());
    for (const auto& line : lines) {
        const auto doc = nlohmann::json::parse(line);
        CHECK(doc.contains("session_id"));
        CHECK(doc.contains("score"));
        CHECK(doc["lfi"].size() == 4);
        CHECK(doc["ranking"].size() == 4);
        CHECK_FALSE(doc.contains("predicted_outlier"));  // outliers only
    }

    const auto all = explain_outliers(forest, data, true);
    write_explanations_jsonl(all, data.schema, dir.file("all.jsonl"));
    const auto all_lines = testutil::read_lines(dir.file("all.jsonl"));
    CHECK(nlohmann::json::parse(all_lines[0]).contains("predicted_outlier"));

    const auto dist = rank_distribution(expl, data.schema);
    write_rank_distribution_csv(dist, dir.file("dist.csv"));
    const auto dist_lines = testutil::read_lines(dir.file("dist.csv"));
    REQUIRE(dist_lines.size() == 1 + 4 * 4);
    CHECK(dist_lines[0] == "feature,rank,fraction");
    CHECK(dist_lines[1].substr(0, 5) == "f0,1,");
}
