#include <doctest.h>

#include <vector>

#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/ingest.hpp"
#include "core/synth.hpp"
#include "test_util.hpp"

using namespace evad;

TEST_CASE("synth_generate plants exactly round(contamination * n) anomalies") {
    const auto mix = default_anomaly_mix();
    const auto result = synth_generate(100, 0.05, mix, 1);
    REQUIRE(result.sessions.size() == 100);
    REQUIRE(result.labels.size() == 100);
    std::size_t anomalies = 0;
    for (const auto& l : result.labels) anomalies += l.is_anomaly ? 1 : 0;
    CHECK(anomalies == 5);
    for (const auto& l : result.labels) CHECK(l.is_anomaly == l.injected.has_value());
}

TEST_CASE("synth_generate is deterministic in the seed, down to the bytes") {
    const auto mix = default_anomaly_mix();
    const auto a = synth_generate(50, 0.1, mix, 42);
    const auto b = synth_generate(50, 0.1, mix, 42);
    REQUIRE(a.sessions.size() == b.sessions.size());
    for (std::size_t i = 0; i < a.sessions.size(); ++i) CHECK(a.sessions[i] == b.sessions[i]);

    testutil::TempDir dir;
    write_sessions_csv(a.sessions, dir.file("ma.csv"), dir.file("sa.csv"));
    write_sessions_csv(b.sessions, dir.file("mb.csv"), dir.file("sb.csv"));
    CHECK(testutil::read_file(dir.file("ma.csv")) == testutil::read_file(dir.file("mb.csv")));
    CHECK(testutil::read_file(dir.file("sa.csv")) == testutil::read_file(dir.file("sb.csv")));

    const auto c = synth_generate(50, 0.1, mix, 43);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.sessions.size(); ++i) {
        if (!(a.sessions[i] == c.sessions[i])) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("generated sessions are valid by construction") {
    const auto mix = default_anomaly_mix();
    const auto result = synth_generate(200, 0.05, mix, 7);
    for (const auto& s : result.sessions) {
        CHECK(s.power.size() >= 3);
        CHECK(s.power.timestamps == s.temperature.timestamps);
        CHECK(s.end_time > s.start_time);
        CHECK(s.energy_kwh >= 0.0);
        CHECK(s.co2_kg >= 0.0);
        for (double v : s.power.values) CHECK(std::isfinite(v));
        for (double v : s.temperature.values) CHECK(std::isfinite(v));
        for (std::size_t i = 1; i < s.power.size(); ++i) {
            CHECK(s.power.timestamps[i] > s.power.timestamps[i - 1]);
        }
    }
}

TEST_CASE("temperature spikes push kurtosis past the nominal 99th percentile") {
    std::vector<AnomalySpec> spikes = {
        {AnomalyKind::temperature_spike, default_target_hint(AnomalyKind::temperature_spike), 1.0}};
    const auto result = synth_generate(500, 0.02, spikes, 3);

    std::vector<double> nominal_kurt;
    std::vector<double> spiked_kurt;
    for (std::size_t i = 0; i < result.sessions.size(); ++i) {
        const auto f = extract_features(result.sessions[i]);
        (result.labels[i].is_anomaly ? spiked_kurt : nominal_kurt).push_back(f[kTKurt]);
    }
    REQUIRE(spiked_kurt.size() == 10);

    std::sort(nominal_kurt.begin(), nominal_kurt.end());
    const double p99 = nominal_kurt[static_cast<std::size_t>(0.99 * nominal_kurt.size())];
    for (double k : spiked_kurt) CHECK(k > p99);
}

TEST_CASE("synth_generate validates its preconditions") {
    const auto mix = default_anomaly_mix();
    CHECK_THROWS_AS(synth_generate(0, 0.1, mix, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate(100, 0.0, mix, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate(100, 1.0, mix, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate(5, 0.1, mix, 1), ValidationError);  // c*n < 1
    std::vector<AnomalySpec> bad = {{AnomalyKind::power_dropout, "P_min", 0.0}};
    CHECK_THROWS_AS(synth_generate(100, 0.1, bad, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate(100, 0.1, std::vector<AnomalySpec>{}, 1), ValidationError);
}

TEST_CASE("labels.csv records kind and hint for anomalous sessions") {
    const auto mix = default_anomaly_mix();
    const auto result = synth_generate(40, 0.1, mix, 5);
    testutil::TempDir dir;
    write_labels_csv(result.labels, dir.file("labels.csv"));
    const auto lines = testutil::read_lines(dir.file("labels.csv"));
    REQUIRE(lines.size() == 41);
    CHECK(lines[0] == "session_id,label,kind,magnitude,target_feature_hint");
    std::size_t flagged = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].find(",1,") != std::string::npos) ++flagged;
    }
    CHECK(flagged == 4);
}
