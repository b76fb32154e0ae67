#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/forest.hpp"

namespace evad {

// Per-feature running sums built while walking predicted inliers and
// outliers through every tree.
struct ImportanceAccumulators {
    std::vector<double> inlier_importance;        // I_I
    std::vector<double> outlier_importance;       // I_O
    std::vector<std::int64_t> inlier_counts;      // V_I
    std::vector<std::int64_t> outlier_counts;     // V_O
};

struct GfiReport {
    std::vector<std::string> schema;
    std::vector<double> gfi;
    std::vector<std::size_t> ranking;  // descending gfi; ties by ascending index
    std::int32_t runs = 1;
};

struct SelectionResult {
    std::vector<std::size_t> kept;     // top-k of the ranking, rank order
    std::vector<std::size_t> dropped;  // remainder, rank order
};

// Which node point-counts feed the imbalance coefficients: the scored
// dataset's pass through each tree (default), or the training-time counts
// stored in the model.
enum class IicCounts { evaluation, training };

// Induced imbalance coefficient of a split of n points into (n_left,
// n_right): 0 when a child is empty, otherwise in [0.5, 1]. n of 2 or 3
// admits a single split balance, and the coefficient degenerates to 1.
double iic(std::int64_t n, std::int64_t n_left, std::int64_t n_right);

// Componentwise (I_O/V_O) / (I_I/V_I). A feature with a zero counter on
// either side has no usable evidence and gets 0; likewise when the inlier
// ratio vanishes.
std::vector<double> gfi_from_accumulators(const ImportanceAccumulators& acc);

// Indices sorted by descending value; ties broken by ascending index.
std::vector<std::size_t> rank_descending(std::span<const double> values);

struct GfiResult {
    GfiReport report;
    ImportanceAccumulators accumulators;
};

// Walks every scored point through every tree. At each internal node on the
// point's path the splitting feature is credited 1/depth * iic(node) into
// the inlier or outlier accumulator according to the point's predicted
// label, and its counter is incremented. Requires non-empty P_I and P_O.
GfiResult compute_gfi(const IsolationForest& forest, const FeatureMatrix& data,
                      const ScoreReport& report, IicCounts counts = IicCounts::evaluation);

// Fits n_runs forests with seeds derived from params.seed, averages their
// GFI vectors componentwise and re-ranks.
GfiReport multi_run_gfi(const FeatureMatrix& data, const ForestParams& params,
                        std::int32_t n_runs, IicCounts counts = IicCounts::evaluation);

SelectionResult select_features(const GfiReport& report, std::size_t k);

// gfi.csv: `feature,gfi,rank` in schema order, ranks 1-based.
void write_gfi_csv(const GfiReport& report, const std::string& path);

// selection.json: {"k":..., "kept":[names...], "dropped":[names...]}.
void write_selection_json(const GfiReport& report, const SelectionResult& selection,
                          const std::string& path);

}  // namespace evad
