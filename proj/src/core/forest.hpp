#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/features.hpp"

namespace evad {

inline constexpr std::int32_t kModelFormatVersion = 1;

struct ForestParams {
    std::int32_t n_trees = 100;
    std::int32_t subsample_size = 256;  // clamped to n at fit
    std::int32_t max_depth = 0;         // 0 = auto: ceil(log2(subsample))
    double contamination = 0.05;        // (0, 0.5]
    std::uint64_t seed = 0;
    // Classical bootstrap (with replacement) instead of distinct subsets.
    bool sample_with_replacement = false;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int64_t n_train = 0;  // training points that reached this node

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root; children follow parents
};

struct ScoreReport {
    std::vector<std::string> session_ids;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;   // 1 = predicted outlier (score >= threshold)
    std::vector<std::size_t> inliers;   // row indices with label 0
    std::vector<std::size_t> outliers;  // row indices with label 1
    double threshold = 0.0;
};

// Average unsuccessful-search path length in a binary search tree of m
// points: c(m) = 2 H(m-1) - 2 (m-1)/m, with c(0) = c(1) = 0.
double avg_path_adjustment(std::int64_t m);

// s = 2^(-mean_depth / c_psi).
double score_from_mean_depth(double mean_depth, double c_psi);

// Internal nodes visited by x, root first; depth equals steps.size().
struct PathTrace {
    std::vector<std::int32_t> nodes;
    std::int32_t leaf = 0;
    std::int32_t depth = 0;
};
PathTrace trace_path(const Tree& tree, std::span<const double> x);

class IsolationForest {
public:
    // Builds n_trees isolation trees, each on its own subsample drawn with a
    // per-tree seed derived from params.seed, then fixes the score threshold
    // at the (1 - contamination) quantile of the training scores.
    static IsolationForest fit(const FeatureMatrix& data, const ForestParams& params);

    // Resolved parameters: subsample clamped, max_depth made explicit.
    const ForestParams& params() const { return params_; }
    const std::vector<std::string>& schema() const { return schema_; }
    const std::vector<Tree>& trees() const { return trees_; }
    double threshold_score() const { return threshold_; }
    std::int32_t max_depth() const { return params_.max_depth; }

    // Depth-adjusted path length of x in one tree: edges + c(n_train(leaf)).
    double path_length(const Tree& tree, std::span<const double> x) const;

    // Anomaly score in (0, 1); larger is more anomalous.
    double score(std::span<const double> x) const;

    std::vector<double> score_all(const FeatureMatrix& data) const;
    ScoreReport classify(const FeatureMatrix& data) const;

    std::string to_json() const;  // canonical, checksummed serialization
    void save(const std::string& path) const;
    static IsolationForest from_json(const std::string& text);
    static IsolationForest load(const std::string& path);

private:
    IsolationForest() = default;
    void check_schema(const FeatureMatrix& data) const;
    void rebuild_path_cache();

    ForestParams params_;
    std::vector<std::string> schema_;
    std::vector<Tree> trees_;
    double threshold_ = 0.0;
    double c_psi_ = 0.0;
    std::vector<double> c_cache_;  // c(m) for m in [0, subsample]
};

// scores.csv: `session_id,score,label`.
void write_scores_csv(const ScoreReport& report, const std::string& path);

}  // namespace evad
