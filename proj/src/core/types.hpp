#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/time_util.hpp"

namespace evad {

// A sampled signal on a strictly increasing UTC timestamp grid.
struct SignalSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> values;

    std::size_t size() const { return timestamps.size(); }
    bool operator==(const SignalSeries&) const = default;
};

// One full recharge: tabular metadata plus the sampled power and temperature
// signals. After ingest both signals share one timestamp grid.
struct SessionRecord {
    std::string session_id;
    std::string station_id;
    Timestamp start_time = 0;
    Timestamp end_time = 0;
    double energy_kwh = 0.0;
    double co2_kg = 0.0;
    SignalSeries power;        // kW
    SignalSeries temperature;  // degC

    bool operator==(const SessionRecord&) const = default;
};

struct DropReport {
    std::string session_id;
    std::string reason;  // machine-readable code, see ingest.hpp
};

enum class AnomalyKind {
    temperature_spike,
    power_oscillation,
    truncated_session,
    power_dropout,
};

const char* anomaly_kind_name(AnomalyKind kind);
std::optional<AnomalyKind> anomaly_kind_from_name(std::string_view name);

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::temperature_spike;
    std::string target_feature_hint;  // feature expected to dominate explanations
    double magnitude = 1.0;           // > 0, scales the injected deviation
};

struct GroundTruthLabel {
    std::string session_id;
    bool is_anomaly = false;
    std::optional<AnomalySpec> injected;
};

}  // namespace evad
