#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace evad {

inline constexpr std::size_t kNumFeatures = 22;

// Column indices into the canonical schema.
enum FeatureIndex : std::size_t {
    kPMean, kEMean, kTMean, kCo2, kDurationS, kCorrPT,
    kPStd, kTStd, kPMax, kTMax, kPMin, kTMin,
    kPAbsDiff, kTAbsDiff, kPSkew, kTSkew, kPKurt, kTKurt,
    kPNPeaks, kTNPeaks, kPCorrLag, kTCorrLag,
};

// Canonical column order of the tabular representation.
const std::vector<std::string>& feature_schema();

using FeatureVector = std::array<double, kNumFeatures>;

// n rows of d named columns; the dataset the forest operates on.
struct FeatureMatrix {
    std::vector<std::string> schema;
    std::vector<std::string> row_ids;
    std::vector<double> values;  // row-major, rows() x cols()

    std::size_t rows() const { return row_ids.size(); }
    std::size_t cols() const { return schema.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols(), cols()};
    }

    // New matrix with the given columns, in the given order.
    FeatureMatrix select_columns(std::span<const std::size_t> keep) const;
};

// Computes the full feature vector of one valid (aligned, length >= 3)
// session. E_mean, co2_kg and duration_s come from the metadata; everything
// else from the signals.
FeatureVector extract_features(const SessionRecord& session);

FeatureMatrix extract_all(std::span<const SessionRecord> sessions);

// features.csv: header `session_id,<schema...>`, one row per session.
void write_features_csv(const FeatureMatrix& matrix, const std::string& path);
FeatureMatrix read_features_csv(const std::string& path);

}  // namespace evad
