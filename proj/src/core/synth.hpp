#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace evad {

struct SynthResult {
    std::vector<SessionRecord> sessions;
    std::vector<GroundTruthLabel> labels;  // parallel to sessions
};

// One spec per anomaly kind, unit magnitude, default hints.
std::vector<AnomalySpec> default_anomaly_mix();

// Feature name expected to respond most strongly to a given kind.
std::string default_target_hint(AnomalyKind kind);

// Features that plausibly take rank 1 in a local explanation of the kind.
const std::vector<std::string>& expected_feature_set(AnomalyKind kind);

// Generates n_sessions charging sessions on a fixed 60 s grid. Nominal power
// follows a ramp-plateau-taper profile with Gaussian noise; temperature is a
// smooth warm-up plus ambient drift. Exactly round(contamination * n)
// sessions receive one injected anomaly, assigned round-robin from
// `anomalies`. Fully deterministic in `seed`; metadata (energy, CO2,
// end_time) is derived from the final signals so injected anomalies stay
// self-consistent.
SynthResult synth_generate(std::int64_t n_sessions, double contamination,
                           std::span<const AnomalySpec> anomalies, std::uint64_t seed);

// CSV `session_id,label,kind,magnitude,target_feature_hint`; kind columns are
// empty for nominal sessions.
void write_labels_csv(std::span<const GroundTruthLabel> labels, const std::string& path);

}  // namespace evad
