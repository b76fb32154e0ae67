#include "core/diffi_global.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace evad {

double iic(std::int64_t n, std::int64_t n_left, std::int64_t n_right) {
    if (n_left < 0 || n_right < 0 || n != n_left + n_right || n < 1)
        throw ValidationError("iic: inconsistent node counts");
    if (n_left == 0 || n_right == 0) return 0.0;
    // Two non-empty children imply n >= 2 here.
    const double lam_min = static_cast<double>((n + 1) / 2) / static_cast<double>(n);
    const double lam_max = static_cast<double>(n - 1) / static_cast<double>(n);
    if (lam_min == lam_max) return 1.0;  // n == 2 or 3
    const double a = static_cast<double>(std::max(n_left, n_right)) / static_cast<double>(n);
    return (a - lam_min) / (2.0 * (lam_max - lam_min)) + 0.5;
}

std::vector<double> gfi_from_accumulators(const ImportanceAccumulators& acc) {
    const std::size_t d = acc.inlier_importance.size();
    std::vector<double> gfi(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (acc.inlier_counts[j] == 0 || acc.outlier_counts[j] == 0) continue;
        const double num = acc.outlier_importance[j] / static_cast<double>(acc.outlier_counts[j]);
        const double den = acc.inlier_importance[j] / static_cast<double>(acc.inlier_counts[j]);
        if (den > 0.0) gfi[j] = num / den;
    }
    return gfi;
}

std::vector<std::size_t> rank_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    return order;
}

GfiResult compute_gfi(const IsolationForest& forest, const FeatureMatrix& data,
                      const ScoreReport& report, IicCounts counts) {
    if (data.schema != forest.schema()) throw SchemaError("feature schema does not match the model");
    if (report.labels.size() != data.rows())
        throw ValidationError("compute_gfi: report does not match the data");
    if (report.outliers.empty()) throw ValidationError("compute_gfi: no predicted outliers");
    if (report.inliers.empty()) throw ValidationError("compute_gfi: no predicted inliers");

    const std::size_t d = data.cols();
    const std::size_t n = data.rows();
    GfiResult result;
    auto& acc = result.accumulators;
    acc.inlier_importance.assign(d, 0.0);
    acc.outlier_importance.assign(d, 0.0);
    acc.inlier_counts.assign(d, 0);
    acc.outlier_counts.assign(d, 0);

    std::vector<std::int64_t> eval_counts;
    for (const Tree& tree : forest.trees()) {
        // First pass: how many scored points reach each node.
        if (counts == IicCounts::evaluation) {
            eval_counts.assign(tree.nodes.size(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = data.row(i);
                std::int32_t cur = 0;
                ++eval_counts[0];
                while (!tree.nodes[cur].is_leaf()) {
                    const TreeNode& node = tree.nodes[cur];
                    cur = row[node.feature] <= node.threshold ? node.left : node.right;
                    ++eval_counts[cur];
                }
            }
        }
        auto node_count = [&](std::int32_t id) {
            return counts == IicCounts::evaluation ? eval_counts[id]
                                                   : tree.nodes[id].n_train;
        };

        // Second pass: credit split features along each point's path,
        // weighted by 1/depth.
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = data.row(i);
            const bool outlier = report.labels[i] != 0;
            auto& importance = outlier ? acc.outlier_importance : acc.inlier_importance;
            auto& counters = outlier ? acc.outlier_counts : acc.inlier_counts;

            std::int32_t cur = 0;
            std::int64_t depth = 0;
            while (!tree.nodes[cur].is_leaf()) {
                cur = row[tree.nodes[cur].feature] <= tree.nodes[cur].threshold
                          ? tree.nodes[cur].left
                          : tree.nodes[cur].right;
                ++depth;
            }
            if (depth == 0) continue;  // single-leaf tree: nothing to credit
            const double inv_depth = 1.0 / static_cast<double>(depth);

            cur = 0;
            while (!tree.nodes[cur].is_leaf()) {
                const TreeNode& node = tree.nodes[cur];
                const double lambda =
                    iic(node_count(cur), node_count(node.left), node_count(node.right));
                importance[static_cast<std::size_t>(node.feature)] += inv_depth * lambda;
                ++counters[static_cast<std::size_t>(node.feature)];
                cur = row[node.feature] <= node.threshold ? node.left : node.right;
            }
        }
    }

    result.report.schema = data.schema;
    result.report.gfi = gfi_from_accumulators(acc);
    result.report.ranking = rank_descending(result.report.gfi);
    result.report.runs = 1;
    return result;
}

GfiReport multi_run_gfi(const FeatureMatrix& data, const ForestParams& params,
                        std::int32_t n_runs, IicCounts counts) {
    if (n_runs < 1) throw ValidationError("multi_run_gfi: n_runs must be >= 1");
    GfiReport report;
    report.schema = data.schema;
    report.gfi.assign(data.cols(), 0.0);
    for (std::int32_t r = 0; r < n_runs; ++r) {
        ForestParams run_params = params;
        run_params.seed = derive_seed(params.seed, SeedStream::run, static_cast<std::uint64_t>(r));
        const IsolationForest forest = IsolationForest::fit(data, run_params);
        const ScoreReport scored = forest.classify(data);
        const auto run = compute_gfi(forest, data, scored, counts);
        for (std::size_t j = 0; j < report.gfi.size(); ++j) report.gfi[j] += run.report.gfi[j];
    }
    for (auto& g : report.gfi) g /= static_cast<double>(n_runs);
    report.ranking = rank_descending(report.gfi);
    report.runs = n_runs;
    return report;
}

SelectionResult select_features(const GfiReport& report, std::size_t k) {
    const std::size_t d = report.schema.size();
    if (k < 1 || k > d) throw ValidationError("select_features: k must be in [1, d]");
    SelectionResult sel;
    sel.kept.assign(report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(k));
    sel.dropped.assign(report.ranking.begin() + static_cast<std::ptrdiff_t>(k), report.ranking.end());
    return sel;
}

void write_gfi_csv(const GfiReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    std::vector<std::size_t> rank_of(report.schema.size());
    for (std::size_t r = 0; r < report.ranking.size(); ++r) rank_of[report.ranking[r]] = r + 1;
    out << "feature,gfi,rank\n";
    for (std::size_t j = 0; j < report.schema.size(); ++j) {
        out << csv_join({csv_escape(report.schema[j]), format_double(report.gfi[j]),
                         std::to_string(rank_of[j])})
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_selection_json(const GfiReport& report, const SelectionResult& selection,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    nlohmann::json kept = nlohmann::json::array();
    for (auto j : selection.kept) kept.push_back(report.schema[j]);
    nlohmann::json dropped = nlohmann::json::array();
    for (auto j : selection.dropped) dropped.push_back(report.schema[j]);
    const nlohmann::json doc = {
        {"k", selection.kept.size()}, {"kept", std::move(kept)}, {"dropped", std::move(dropped)}};
    out << doc.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evad
