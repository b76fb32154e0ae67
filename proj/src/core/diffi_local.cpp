#include "core/diffi_local.hpp"

#include <fstream>

#include <json.hpp>

#include "core/csv.hpp"
#include "core/diffi_global.hpp"
#include "core/errors.hpp"

namespace evad {

LocalExplanation local_diffi(const IsolationForest& forest, std::span<const double> x) {
    const std::size_t d = forest.schema().size();
    if (x.size() != d) throw SchemaError("feature vector length does not match the model");

    LocalExplanation expl;
    expl.lfi.assign(d, 0.0);
    std::vector<std::int64_t> counters(d, 0);
    const double inv_max_depth = 1.0 / static_cast<double>(forest.max_depth());

    for (const Tree& tree : forest.trees()) {
        std::int32_t cur = 0;
        std::int64_t depth = 0;
        while (!tree.nodes[cur].is_leaf()) {
            cur = x[tree.nodes[cur].feature] <= tree.nodes[cur].threshold ? tree.nodes[cur].left
                                                                          : tree.nodes[cur].right;
            ++depth;
        }
        if (depth == 0) continue;
        const double credit = 1.0 / static_cast<double>(depth) - inv_max_depth;

        cur = 0;
        while (!tree.nodes[cur].is_leaf()) {
            const TreeNode& node = tree.nodes[cur];
            expl.lfi[static_cast<std::size_t>(node.feature)] += credit;
            ++counters[static_cast<std::size_t>(node.feature)];
            cur = x[node.feature] <= node.threshold ? node.left : node.right;
        }
    }

    for (std::size_t j = 0; j < d; ++j) {
        expl.lfi[j] = counters[j] > 0 ? expl.lfi[j] / static_cast<double>(counters[j]) : 0.0;
    }
    expl.ranking = rank_descending(expl.lfi);
    expl.score = forest.score(x);
    expl.predicted_outlier = expl.score >= forest.threshold_score();
    return expl;
}

std::vector<LocalExplanation> explain_outliers(const IsolationForest& forest,
                                               const FeatureMatrix& data, bool explain_all) {
    const ScoreReport report = forest.classify(data);
    std::vector<LocalExplanation> out;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (report.labels[i] == 0 && !explain_all) continue;
        LocalExplanation expl = local_diffi(forest, data.row(i));
        expl.session_id = data.row_ids[i];
        out.push_back(std::move(expl));
    }
    return out;
}

RankDistribution rank_distribution(std::span<const LocalExplanation> explanations,
                                   const std::vector<std::string>& schema) {
    if (explanations.empty()) throw ValidationError("rank_distribution: no explanations");
    const std::size_t d = schema.size();
    RankDistribution dist;
    dist.schema = schema;
    dist.fraction.assign(d * d, 0.0);
    for (const auto& expl : explanations) {
        if (expl.ranking.size() != d)
            throw ValidationError("rank_distribution: explanation schema mismatch");
        for (std::size_t r = 0; r < d; ++r) {
            dist.fraction[expl.ranking[r] * d + r] += 1.0;
        }
    }
    const double total = static_cast<double>(explanations.size());
    for (auto& f : dist.fraction) f /= total;
    return dist;
}

void write_explanations_jsonl(std::span<const LocalExplanation> explanations,
                              const std::vector<std::string>& schema, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    bool any_inlier = false;
    for (const auto& e : explanations) any_inlier |= !e.predicted_outlier;
    for (const auto& e : explanations) {
        out << "{\"session_id\":" << nlohmann::json(e.session_id).dump()
            << ",\"score\":" << format_double(e.score);
        if (any_inlier) out << ",\"predicted_outlier\":" << (e.predicted_outlier ? "true" : "false");
        out << ",\"lfi\":{";
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (j) out << ',';
            out << nlohmann::json(schema[j]).dump() << ':' << format_double(e.lfi[j]);
        }
        out << "},\"ranking\":[";
        for (std::size_t r = 0; r < e.ranking.size(); ++r) {
            if (r) out << ',';
            out << nlohmann::json(schema[e.ranking[r]]).dump();
        }
        out << "]}\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_rank_distribution_csv(const RankDistribution& dist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "feature,rank,fraction\n";
    const std::size_t d = dist.schema.size();
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t r = 1; r <= d; ++r) {
            out << csv_join({csv_escape(dist.schema[f]), std::to_string(r),
                             format_double(dist.at(f, r))})
                << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evad
