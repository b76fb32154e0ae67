#include "core/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace evad {

namespace {

std::int32_t ceil_log2(std::int64_t n) {
    std::int32_t k = 0;
    std::int64_t p = 1;
    while (p < n) {
        p <<= 1;
        ++k;
    }
    return std::max<std::int32_t>(1, k);
}

void validate_params(const ForestParams& p) {
    if (p.n_trees < 1) throw ValidationError("n_trees must be >= 1");
    if (p.subsample_size < 2) throw ValidationError("subsample_size must be >= 2");
    if (p.max_depth < 0) throw ValidationError("max_depth must be >= 0");
    if (!(p.contamination > 0.0 && p.contamination <= 0.5))
        throw ValidationError("contamination must be in (0, 0.5]");
}

// 64-bit FNV-1a over the canonical payload text.
std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct BuildItem {
    std::size_t begin, end;  // range into the index buffer
    std::int32_t depth;
    std::int32_t parent;  // -1 for root
    bool is_left;
};

Tree build_tree(const FeatureMatrix& data, std::span<const std::size_t> sample,
                std::int32_t depth_cap, Rng& rng) {
    Tree tree;
    std::vector<std::size_t> idx(sample.begin(), sample.end());
    std::vector<BuildItem> stack;
    stack.push_back({0, idx.size(), 0, -1, false});

    const std::size_t d = data.cols();
    std::vector<double> lo(d), hi(d);
    std::vector<std::size_t> candidates;
    candidates.reserve(d);

    while (!stack.empty()) {
        const BuildItem item = stack.back();
        stack.pop_back();
        const std::int32_t node_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].n_train = static_cast<std::int64_t>(item.end - item.begin);
        if (item.parent >= 0) {
            (item.is_left ? tree.nodes[item.parent].left : tree.nodes[item.parent].right) = node_id;
        }

        const std::size_t size = item.end - item.begin;
        if (item.depth >= depth_cap || size <= 1) continue;  // leaf

        // Split features must vary inside the node; the node becomes a leaf
        // when every feature is constant over its points.
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::numeric_limits<double>::infinity();
            hi[j] = -std::numeric_limits<double>::infinity();
        }
        for (std::size_t k = item.begin; k < item.end; ++k) {
            const auto row = data.row(idx[k]);
            for (std::size_t j = 0; j < d; ++j) {
                lo[j] = std::min(lo[j], row[j]);
                hi[j] = std::max(hi[j], row[j]);
            }
        }
        candidates.clear();
        for (std::size_t j = 0; j < d; ++j)
            if (lo[j] < hi[j]) candidates.push_back(j);
        if (candidates.empty()) continue;  // all points identical

        const std::size_t feature = candidates[rng.below(candidates.size())];
        double threshold = lo[feature] + rng.u01() * (hi[feature] - lo[feature]);
        // Drawn in [min, max); the <= rule then guarantees two non-empty
        // children. A rounding hit on max falls back to min.
        if (threshold >= hi[feature]) threshold = lo[feature];

        auto* base = idx.data();
        auto* mid = std::partition(base + item.begin, base + item.end, [&](std::size_t r) {
            return data.at(r, feature) <= threshold;
        });
        const std::size_t split = static_cast<std::size_t>(mid - base);

        tree.nodes[node_id].feature = static_cast<std::int32_t>(feature);
        tree.nodes[node_id].threshold = threshold;
        // Right pushed first so the left child is built (and numbered) first.
        stack.push_back({split, item.end, item.depth + 1, node_id, false});
        stack.push_back({item.begin, split, item.depth + 1, node_id, true});
    }
    return tree;
}

// Threshold at the (1 - contamination) quantile: the m-th largest training
// score with m = round(contamination * n). When ties at that value would
// inflate the outlier set past m, the threshold moves one ulp up, so
// |P_O|/n never exceeds contamination + 1/n.
double select_threshold(std::vector<double> scores, double contamination) {
    const auto n = static_cast<std::int64_t>(scores.size());
    std::sort(scores.begin(), scores.end(), std::greater<>());
    const std::int64_t m = std::llround(contamination * static_cast<double>(n));
    if (m <= 0) return std::nextafter(scores.front(), std::numeric_limits<double>::infinity());
    const double v = scores[static_cast<std::size_t>(std::min(m, n)) - 1];
    const auto tied_end =
        std::upper_bound(scores.begin(), scores.end(), v, std::greater<>()) - scores.begin();
    if (tied_end > m) return std::nextafter(v, std::numeric_limits<double>::infinity());
    return v;
}

}  // namespace

double avg_path_adjustment(std::int64_t m) {
    if (m <= 1) return 0.0;
    double harmonic = 0.0;
    for (std::int64_t i = 1; i < m; ++i) harmonic += 1.0 / static_cast<double>(i);
    return 2.0 * harmonic - 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
}

double score_from_mean_depth(double mean_depth, double c_psi) {
    return std::exp2(-mean_depth / c_psi);
}

PathTrace trace_path(const Tree& tree, std::span<const double> x) {
    PathTrace trace;
    std::int32_t cur = 0;
    while (!tree.nodes[cur].is_leaf()) {
        trace.nodes.push_back(cur);
        const TreeNode& node = tree.nodes[cur];
        cur = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    trace.leaf = cur;
    trace.depth = static_cast<std::int32_t>(trace.nodes.size());
    return trace;
}

IsolationForest IsolationForest::fit(const FeatureMatrix& data, const ForestParams& params) {
    validate_params(params);
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) throw ValidationError("fit: need at least 2 rows");
    if (d < 1) throw ValidationError("fit: need at least 1 feature");
    for (double v : data.values) {
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite value in data");
    }

    IsolationForest forest;
    forest.params_ = params;
    forest.params_.subsample_size =
        static_cast<std::int32_t>(std::min<std::int64_t>(params.subsample_size, n));
    if (forest.params_.max_depth == 0)
        forest.params_.max_depth = ceil_log2(forest.params_.subsample_size);
    forest.schema_ = data.schema;

    const auto psi = static_cast<std::size_t>(forest.params_.subsample_size);
    std::vector<std::size_t> pool(n);
    std::vector<std::size_t> sample(psi);

    forest.trees_.reserve(static_cast<std::size_t>(params.n_trees));
    for (std::int32_t t = 0; t < params.n_trees; ++t) {
        // Each tree's sample is a function of (seed, t) only, so trees are
        // mutually independent and could be built in parallel.
        Rng rng(derive_seed(params.seed, SeedStream::tree, static_cast<std::uint64_t>(t)));
        if (params.sample_with_replacement) {
            for (auto& s : sample) s = rng.below(n);
        } else {
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t i = 0; i < psi; ++i) {
                const std::size_t j = i + rng.below(n - i);
                std::swap(pool[i], pool[j]);
                sample[i] = pool[i];
            }
        }
        forest.trees_.push_back(build_tree(data, sample, forest.params_.max_depth, rng));
    }

    forest.rebuild_path_cache();
    forest.threshold_ = select_threshold(forest.score_all(data), forest.params_.contamination);
    return forest;
}

void IsolationForest::rebuild_path_cache() {
    const auto psi = static_cast<std::size_t>(params_.subsample_size);
    c_cache_.assign(psi + 1, 0.0);
    double harmonic = 0.0;
    for (std::size_t m = 2; m <= psi; ++m) {
        harmonic += 1.0 / static_cast<double>(m - 1);
        c_cache_[m] = 2.0 * harmonic - 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
    }
    c_psi_ = c_cache_[psi];
}

void IsolationForest::check_schema(const FeatureMatrix& data) const {
    if (data.schema != schema_) throw SchemaError("feature schema does not match the model");
}

double IsolationForest::path_length(const Tree& tree, std::span<const double> x) const {
    std::int32_t cur = 0;
    double depth = 0.0;
    while (!tree.nodes[cur].is_leaf()) {
        const TreeNode& node = tree.nodes[cur];
        cur = x[node.feature] <= node.threshold ? node.left : node.right;
        depth += 1.0;
    }
    const std::int64_t m = tree.nodes[cur].n_train;
    const double adjust = m >= 0 && m < static_cast<std::int64_t>(c_cache_.size())
                              ? c_cache_[static_cast<std::size_t>(m)]
                              : avg_path_adjustment(m);
    return depth + adjust;
}

double IsolationForest::score(std::span<const double> x) const {
    if (x.size() != schema_.size()) throw SchemaError("feature vector length does not match the model");
    double total = 0.0;
    for (const Tree& tree : trees_) total += path_length(tree, x);
    return score_from_mean_depth(total / static_cast<double>(trees_.size()), c_psi_);
}

std::vector<double> IsolationForest::score_all(const FeatureMatrix& data) const {
    check_schema(data);
    std::vector<double> scores(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double total = 0.0;
        for (const Tree& tree : trees_) total += path_length(tree, data.row(i));
        scores[i] = score_from_mean_depth(total / static_cast<double>(trees_.size()), c_psi_);
    }
    return scores;
}

ScoreReport IsolationForest::classify(const FeatureMatrix& data) const {
    ScoreReport report;
    report.session_ids = data.row_ids;
    report.scores = score_all(data);
    report.threshold = threshold_;
    report.labels.resize(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const bool outlier = report.scores[i] >= threshold_;
        report.labels[i] = outlier ? 1 : 0;
        (outlier ? report.outliers : report.inliers).push_back(i);
    }
    return report;
}

std::string IsolationForest::to_json() const {
    nlohmann::json params = {
        {"n_trees", params_.n_trees},
        {"subsample_size", params_.subsample_size},
        {"max_depth", params_.max_depth},
        {"contamination", params_.contamination},
        {"seed", params_.seed},
        {"sample_with_replacement", params_.sample_with_replacement},
    };
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : tree.nodes) {
            if (n.is_leaf()) {
                nodes.push_back({{"leaf", n.n_train}});
            } else {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"n_train", n.n_train}});
            }
        }
        trees.push_back({{"root", 0}, {"nodes", std::move(nodes)}});
    }
    nlohmann::json payload = {
        {"version", kModelFormatVersion},
        {"params", std::move(params)},
        {"schema", schema_},
        {"threshold_score", threshold_},
        {"trees", std::move(trees)},
    };
    const std::string body = payload.dump();
    payload["checksum"] = fnv1a_hex(body);
    return payload.dump();
}

void IsolationForest::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

IsolationForest IsolationForest::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid model file: ") + e.what());
    }
    try {
        if (!doc.contains("version") || doc["version"].get<std::int32_t>() != kModelFormatVersion)
            throw FormatError("unsupported model format version");
        if (!doc.contains("checksum")) throw FormatError("model file has no checksum");
        const std::string stored = doc["checksum"].get<std::string>();
        doc.erase("checksum");
        if (fnv1a_hex(doc.dump()) != stored) throw FormatError("model checksum mismatch");

        IsolationForest forest;
        const auto& p = doc["params"];
        forest.params_.n_trees = p["n_trees"].get<std::int32_t>();
        forest.params_.subsample_size = p["subsample_size"].get<std::int32_t>();
        forest.params_.max_depth = p["max_depth"].get<std::int32_t>();
        forest.params_.contamination = p["contamination"].get<double>();
        forest.params_.seed = p["seed"].get<std::uint64_t>();
        forest.params_.sample_with_replacement = p["sample_with_replacement"].get<bool>();
        forest.schema_ = doc["schema"].get<std::vector<std::string>>();
        forest.threshold_ = doc["threshold_score"].get<double>();

        const std::size_t d = forest.schema_.size();
        for (const auto& jt : doc["trees"]) {
            Tree tree;
            if (jt["root"].get<std::int32_t>() != 0)
                throw FormatError("model tree root must be node 0");
            const auto& nodes = jt["nodes"];
            for (const auto& jn : nodes) {
                TreeNode node;
                if (jn.contains("leaf")) {
                    node.n_train = jn["leaf"].get<std::int64_t>();
                } else {
                    node.feature = jn["feature"].get<std::int32_t>();
                    node.threshold = jn["threshold"].get<double>();
                    node.left = jn["left"].get<std::int32_t>();
                    node.right = jn["right"].get<std::int32_t>();
                    node.n_train = jn["n_train"].get<std::int64_t>();
                    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= d)
                        throw FormatError("model node references unknown feature");
                }
                tree.nodes.push_back(node);
            }
            const auto size = static_cast<std::int32_t>(tree.nodes.size());
            if (size == 0) throw FormatError("model tree has no nodes");
            for (std::int32_t i = 0; i < size; ++i) {
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
                if (node.is_leaf()) continue;
                // Children must come after their parent; this also rules out cycles.
                if (node.left <= i || node.left >= size || node.right <= i || node.right >= size)
                    throw FormatError("model tree structure is inconsistent");
            }
            forest.trees_.push_back(std::move(tree));
        }
        if (forest.trees_.empty()) throw FormatError("model has no trees");
        validate_params(forest.params_);
        forest.rebuild_path_cache();
        return forest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid model file: ") + e.what());
    }
}

IsolationForest IsolationForest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void write_scores_csv(const ScoreReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "session_id,score,label\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        out << csv_join({csv_escape(report.session_ids[i]), format_double(report.scores[i]),
                         report.labels[i] ? "1" : "0"})
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evad
