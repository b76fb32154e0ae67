#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/forest.hpp"

namespace evad {

struct LocalExplanation {
    std::string session_id;
    double score = 0.0;
    bool predicted_outlier = true;
    std::vector<double> lfi;            // per-feature local importance, >= 0
    std::vector<std::size_t> ranking;   // descending lfi; ties by ascending index
};

// Per-point attribution from path depths alone: every internal node on x's
// path in tree t credits its split feature 1/h_t(x) - 1/max_depth, and the
// final importance is that sum divided by the feature's usage count. Paths
// that reach max_depth contribute zero, shallow isolations the most.
LocalExplanation local_diffi(const IsolationForest& forest, std::span<const double> x);

// Explanations for the predicted outliers of `data` (every point when
// explain_all is set), in row order.
std::vector<LocalExplanation> explain_outliers(const IsolationForest& forest,
                                               const FeatureMatrix& data,
                                               bool explain_all = false);

// fraction[f][r-1] = share of explanations in which feature f holds rank r.
struct RankDistribution {
    std::vector<std::string> schema;
    std::vector<double> fraction;  // row-major, d x d

    double at(std::size_t feature, std::size_t rank1based) const {
        return fraction[feature * schema.size() + rank1based - 1];
    }
};

RankDistribution rank_distribution(std::span<const LocalExplanation> explanations,
                                   const std::vector<std::string>& schema);

// JSON Lines: {"session_id":...,"score":...,"lfi":{...},"ranking":[...]}
// ("predicted_outlier" added only when inliers were explained).
void write_explanations_jsonl(std::span<const LocalExplanation> explanations,
                              const std::vector<std::string>& schema, const std::string& path);

// rank_distribution.csv: `feature,rank,fraction`, all d x d combinations.
void write_rank_distribution_csv(const RankDistribution& dist, const std::string& path);

}  // namespace evad
