// evad command-line tool: synth / extract / fit / score / explain / pipeline.
//
// Talks to the library exclusively through the public C API. Every command is
// a pure function of its input files and flags; rerunning with the same
// inputs produces byte-identical outputs.
//
// Exit codes: 0 success, 1 internal error, 2 input or validation error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evad.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

int exit_code(evad_status status) {
    switch (status) {
        case EVAD_OK: return kExitOk;
        case EVAD_ERR_INTERNAL: return kExitInternal;
        default: return kExitInput;
    }
}

// Returns the command exit code for a failed call, after reporting it.
int report_failure(evad_status status) {
    std::cerr << "error: " << evad_last_error() << "\n";
    return exit_code(status);
}

#define CHECK_CALL(expr)                                        \
    do {                                                        \
        const evad_status status_ = (expr);                     \
        if (status_ != EVAD_OK) return report_failure(status_); \
    } while (0)

template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, decltype([](T* p) { Free(p); })>;

using SessionsHandle = Handle<evad_sessions, evad_sessions_free>;
using FeaturesHandle = Handle<evad_features, evad_features_free>;
using ModelHandle = Handle<evad_model, evad_model_free>;
using GfiHandle = Handle<evad_gfi, evad_gfi_free>;
using ExplanationsHandle = Handle<evad_explanations, evad_explanations_free>;

struct Options {
    std::string meta, signals, features, model, out, config, mode = "global";
    std::int64_t n = 1000;
    double contamination = 0.05;
    std::uint64_t seed = 0;
    std::int32_t trees = 100;
    std::int32_t subsample = 256;
    std::int32_t max_depth = 0;
    std::int32_t runs = 5;
    std::size_t top_k = 9;
    bool bootstrap = false;
    bool explain_all = false;
};

evad_fit_params fit_params(const Options& opt) {
    evad_fit_params params;
    evad_fit_params_init(&params);
    params.n_trees = opt.trees;
    params.subsample_size = opt.subsample;
    params.max_depth = opt.max_depth;
    params.contamination = opt.contamination;
    params.seed = opt.seed;
    params.sample_with_replacement = opt.bootstrap ? 1 : 0;
    return params;
}

// Key-value config file: one `key = value` per line, `#` comments. Keys are
// the long flag names with dashes replaced by underscores. Values from the
// file override command-line flags.
bool apply_config(const std::string& path, Options& opt, std::string& error) {
    std::ifstream in(path);
    if (!in) {
        error = "cannot open config file: " + path;
        return false;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            error = path + ":" + std::to_string(line_no) + ": expected key = value";
            return false;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "meta") opt.meta = value;
            else if (key == "signals") opt.signals = value;
            else if (key == "features") opt.features = value;
            else if (key == "model") opt.model = value;
            else if (key == "out") opt.out = value;
            else if (key == "mode") opt.mode = value;
            else if (key == "n") opt.n = std::stoll(value);
            else if (key == "contamination") opt.contamination = std::stod(value);
            else if (key == "seed") opt.seed = std::stoull(value);
            else if (key == "trees") opt.trees = std::stoi(value);
            else if (key == "subsample") opt.subsample = std::stoi(value);
            else if (key == "max_depth") opt.max_depth = std::stoi(value);
            else if (key == "runs") opt.runs = std::stoi(value);
            else if (key == "top_k") opt.top_k = static_cast<std::size_t>(std::stoull(value));
            else if (key == "bootstrap") opt.bootstrap = value == "true" || value == "1";
            else if (key == "explain_all") opt.explain_all = value == "true" || value == "1";
            else {
                error = path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'";
                return false;
            }
        } catch (const std::exception&) {
            error = path + ":" + std::to_string(line_no) + ": bad value for '" + key + "'";
            return false;
        }
    }
    return true;
}

bool ensure_out_dir(const std::string& dir, std::string& error) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        error = "cannot create output directory " + dir + ": " + ec.message();
        return false;
    }
    return true;
}

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

int cmd_synth(const Options& opt) {
    std::string error;
    if (!ensure_out_dir(opt.out, error)) {
        std::cerr << "error: " << error << "\n";
        return kExitInput;
    }
    evad_sessions* raw = nullptr;
    CHECK_CALL(evad_sessions_synth(opt.n, opt.contamination, opt.seed, &raw));
    SessionsHandle sessions(raw);
    CHECK_CALL(evad_sessions_write_csv(sessions.get(), join_path(opt.out, "sessions_meta.csv").c_str(),
                                       join_path(opt.out, "sessions_signals.csv").c_str()));
    CHECK_CALL(evad_sessions_write_labels(sessions.get(), join_path(opt.out, "labels.csv").c_str()));
    std::cout << "sessions=" << evad_sessions_count(sessions.get()) << " out=" << opt.out << "\n";
    return kExitOk;
}

// Shared by extract and pipeline: parse, report drops, extract features.
int load_and_extract(const Options& opt, FeaturesHandle& features, std::size_t& kept,
                     std::size_t& dropped) {
    evad_sessions* raw_sessions = nullptr;
    CHECK_CALL(evad_sessions_parse(opt.meta.c_str(), opt.signals.c_str(), &raw_sessions));
    SessionsHandle sessions(raw_sessions);
    CHECK_CALL(evad_sessions_write_drop_report(sessions.get(),
                                               join_path(opt.out, "drops.jsonl").c_str()));
    evad_features* raw_features = nullptr;
    CHECK_CALL(evad_features_extract(sessions.get(), &raw_features));
    features.reset(raw_features);
    CHECK_CALL(evad_features_write_csv(features.get(),
                                       join_path(opt.out, "features.csv").c_str()));
    kept = evad_sessions_count(sessions.get());
    dropped = evad_sessions_dropped_count(sessions.get());
    return kExitOk;
}

int cmd_extract(const Options& opt) {
    std::string error;
    if (!ensure_out_dir(opt.out, error)) {
        std::cerr << "error: " << error << "\n";
        return kExitInput;
    }
    FeaturesHandle features;
    std::size_t kept = 0, dropped = 0;
    if (int rc = load_and_extract(opt, features, kept, dropped); rc != kExitOk) return rc;
    std::cout << "sessions=" << kept << " dropped=" << dropped << " out=" << opt.out << "\n";
    if (kept == 0) {
        std::cerr << "error: no valid sessions in input\n";
        return kExitInput;
    }
    return kExitOk;
}

int cmd_fit(const Options& opt) {
    evad_features* raw_features = nullptr;
    CHECK_CALL(evad_features_read_csv(opt.features.c_str(), &raw_features));
    FeaturesHandle features(raw_features);

    const evad_fit_params params = fit_params(opt);
    evad_model* raw_model = nullptr;
    CHECK_CALL(evad_fit(features.get(), &params, &raw_model));
    ModelHandle model(raw_model);
    CHECK_CALL(evad_model_save(model.get(), opt.out.c_str()));

    const std::size_t n = evad_features_rows(features.get());
    std::vector<double> scores(n);
    std::vector<std::int32_t> labels(n);
    CHECK_CALL(evad_model_score_batch(model.get(), features.get(), scores.data(), labels.data()));
    std::size_t outliers = 0;
    for (auto l : labels) outliers += static_cast<std::size_t>(l);

    evad_fit_params resolved;
    evad_model_get_params(model.get(), &resolved);
    std::cout << "n=" << n << " d=" << evad_features_cols(features.get())
              << " trees=" << resolved.n_trees << " subsample=" << resolved.subsample_size
              << " max_depth=" << resolved.max_depth
              << " threshold=" << evad_model_threshold(model.get())
              << " train_outliers=" << outliers << " model=" << opt.out << "\n";
    return kExitOk;
}

int cmd_score(const Options& opt) {
    evad_model* raw_model = nullptr;
    CHECK_CALL(evad_model_load(opt.model.c_str(), &raw_model));
    ModelHandle model(raw_model);
    evad_features* raw_features = nullptr;
    CHECK_CALL(evad_features_read_csv(opt.features.c_str(), &raw_features));
    FeaturesHandle features(raw_features);
    CHECK_CALL(evad_model_write_scores_csv(model.get(), features.get(), opt.out.c_str()));
    std::cout << "rows=" << evad_features_rows(features.get()) << " scores=" << opt.out << "\n";
    return kExitOk;
}

int explain_global(const evad_features* features, const evad_fit_params& params,
                   const Options& opt) {
    evad_gfi* raw_gfi = nullptr;
    CHECK_CALL(evad_gfi_multi_run(features, &params, opt.runs, &raw_gfi));
    GfiHandle gfi(raw_gfi);
    CHECK_CALL(evad_gfi_write_csv(gfi.get(), join_path(opt.out, "gfi.csv").c_str()));
    CHECK_CALL(evad_gfi_write_selection_json(gfi.get(), opt.top_k,
                                             join_path(opt.out, "selection.json").c_str()));
    std::cout << "runs=" << opt.runs << " top_k=" << opt.top_k << " out=" << opt.out << "\n";
    return kExitOk;
}

int explain_local(const evad_model* model, const evad_features* features, const Options& opt) {
    evad_explanations* raw = nullptr;
    CHECK_CALL(evad_local_explain(model, features, opt.explain_all ? 1 : 0, &raw));
    ExplanationsHandle explanations(raw);
    CHECK_CALL(evad_explanations_write_jsonl(explanations.get(),
                                             join_path(opt.out, "explanations.jsonl").c_str()));
    CHECK_CALL(evad_explanations_write_rank_distribution_csv(
        explanations.get(), join_path(opt.out, "rank_distribution.csv").c_str()));
    std::cout << "explained=" << evad_explanations_count(explanations.get())
              << " out=" << opt.out << "\n";
    return kExitOk;
}

int cmd_explain(const Options& opt) {
    std::string error;
    if (opt.mode != "global" && opt.mode != "local") {
        std::cerr << "error: --mode must be 'global' or 'local'\n";
        return kExitInput;
    }
    if (!ensure_out_dir(opt.out, error)) {
        std::cerr << "error: " << error << "\n";
        return kExitInput;
    }
    evad_model* raw_model = nullptr;
    CHECK_CALL(evad_model_load(opt.model.c_str(), &raw_model));
    ModelHandle model(raw_model);
    evad_features* raw_features = nullptr;
    CHECK_CALL(evad_features_read_csv(opt.features.c_str(), &raw_features));
    FeaturesHandle features(raw_features);

    if (opt.mode == "global") {
        evad_fit_params params;
        evad_model_get_params(model.get(), &params);
        return explain_global(features.get(), params, opt);
    }
    return explain_local(model.get(), features.get(), opt);
}

// extract -> fit -> global explain -> select top-k -> refit on the reduced
// schema -> score + local explanations, all into one output directory.
int cmd_pipeline(const Options& opt) {
    std::string error;
    if (!ensure_out_dir(opt.out, error)) {
        std::cerr << "error: " << error << "\n";
        return kExitInput;
    }
    FeaturesHandle features;
    std::size_t kept = 0, dropped = 0;
    if (int rc = load_and_extract(opt, features, kept, dropped); rc != kExitOk) return rc;
    std::cout << "sessions=" << kept << " dropped=" << dropped << "\n";
    if (kept == 0) {
        std::cerr << "error: no valid sessions in input\n";
        return kExitInput;
    }

    const evad_fit_params params = fit_params(opt);
    evad_model* raw_model = nullptr;
    CHECK_CALL(evad_fit(features.get(), &params, &raw_model));
    ModelHandle full_model(raw_model);
    CHECK_CALL(evad_model_save(full_model.get(), join_path(opt.out, "model_full.json").c_str()));

    evad_gfi* raw_gfi = nullptr;
    CHECK_CALL(evad_gfi_multi_run(features.get(), &params, opt.runs, &raw_gfi));
    GfiHandle gfi(raw_gfi);
    CHECK_CALL(evad_gfi_write_csv(gfi.get(), join_path(opt.out, "gfi.csv").c_str()));
    CHECK_CALL(evad_gfi_write_selection_json(gfi.get(), opt.top_k,
                                             join_path(opt.out, "selection.json").c_str()));

    const std::size_t d = evad_gfi_dim(gfi.get());
    if (opt.top_k < 1 || opt.top_k > d) {
        std::cerr << "error: --top-k must be in [1, " << d << "]\n";
        return kExitInput;
    }
    std::vector<std::size_t> ranking(d);
    CHECK_CALL(evad_gfi_ranking(gfi.get(), ranking.data()));
    ranking.resize(opt.top_k);

    evad_features* raw_selected = nullptr;
    CHECK_CALL(evad_features_select(features.get(), ranking.data(), ranking.size(), &raw_selected));
    FeaturesHandle selected(raw_selected);
    CHECK_CALL(evad_features_write_csv(selected.get(),
                                       join_path(opt.out, "features_selected.csv").c_str()));

    evad_model* raw_reduced = nullptr;
    CHECK_CALL(evad_fit(selected.get(), &params, &raw_reduced));
    ModelHandle reduced(raw_reduced);
    CHECK_CALL(evad_model_save(reduced.get(), join_path(opt.out, "model_selected.json").c_str()));
    CHECK_CALL(evad_model_write_scores_csv(reduced.get(), selected.get(),
                                           join_path(opt.out, "scores.csv").c_str()));
    return explain_local(reduced.get(), selected.get(), opt);
}

void add_forest_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--trees", opt.trees, "Number of isolation trees")->capture_default_str();
    cmd->add_option("--subsample", opt.subsample, "Per-tree subsample size")
        ->capture_default_str();
    cmd->add_option("--max-depth", opt.max_depth, "Tree depth limit (0 = ceil(log2(subsample)))")
        ->capture_default_str();
    cmd->add_option("--contamination", opt.contamination, "Assumed outlier fraction")
        ->capture_default_str();
    cmd->add_option("--seed", opt.seed, "Master seed")->capture_default_str();
    cmd->add_flag("--bootstrap", opt.bootstrap, "Sample with replacement");
}

void add_config_flag(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config,
                    "Key-value config file; values override command-line flags");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Isolation-forest anomaly detection with DIFFI explanations for EV charging "
                 "sessions"};
    app.require_subcommand(1);
    std::ostringstream version;
    version << "evad " << evad_version() << " (model format " << evad_model_format_version()
            << ")";
    app.set_version_flag("--version", version.str());

    Options opt;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted anomalies");
    synth->add_option("--n", opt.n, "Number of sessions")->capture_default_str();
    synth->add_option("--contamination", opt.contamination, "Fraction of anomalous sessions")
        ->capture_default_str();
    synth->add_option("--seed", opt.seed, "Master seed")->capture_default_str();
    synth->add_option("--out", opt.out, "Output directory")->required();
    add_config_flag(synth, opt);

    auto* extract = app.add_subcommand("extract", "Parse sessions and emit features.csv");
    extract->add_option("--meta", opt.meta, "sessions_meta.csv path")->required();
    extract->add_option("--signals", opt.signals, "sessions_signals.csv path")->required();
    extract->add_option("--out", opt.out, "Output directory")->required();
    add_config_flag(extract, opt);

    auto* fit = app.add_subcommand("fit", "Fit an isolation forest on features.csv");
    fit->add_option("--features", opt.features, "features.csv path")->required();
    fit->add_option("--out", opt.out, "Model file path")->required();
    add_forest_flags(fit, opt);
    add_config_flag(fit, opt);

    auto* score = app.add_subcommand("score", "Score features against a saved model");
    score->add_option("--model", opt.model, "Model file path")->required();
    score->add_option("--features", opt.features, "features.csv path")->required();
    score->add_option("--out", opt.out, "scores.csv path")->required();
    add_config_flag(score, opt);

    auto* explain = app.add_subcommand("explain", "Global or local DIFFI explanations");
    explain->add_option("--model", opt.model, "Model file path")->required();
    explain->add_option("--features", opt.features, "features.csv path")->required();
    explain->add_option("--mode", opt.mode, "'global' or 'local'")->capture_default_str();
    explain->add_option("--runs", opt.runs, "Forests averaged in global mode")
        ->capture_default_str();
    explain->add_option("--top-k", opt.top_k, "Features kept in selection.json")
        ->capture_default_str();
    explain->add_flag("--explain-all", opt.explain_all,
                      "Explain every point, not only predicted outliers");
    explain->add_option("--out", opt.out, "Output directory")->required();
    add_config_flag(explain, opt);

    auto* pipeline =
        app.add_subcommand("pipeline", "extract + fit + explain + top-k refit in one run");
    pipeline->add_option("--meta", opt.meta, "sessions_meta.csv path");
    pipeline->add_option("--signals", opt.signals, "sessions_signals.csv path");
    pipeline->add_option("--out", opt.out, "Output directory");
    pipeline->add_option("--runs", opt.runs, "Forests averaged for the global ranking")
        ->capture_default_str();
    pipeline->add_option("--top-k", opt.top_k, "Features kept for the refit")
        ->capture_default_str();
    pipeline->add_flag("--explain-all", opt.explain_all,
                       "Explain every point, not only predicted outliers");
    add_forest_flags(pipeline, opt);
    add_config_flag(pipeline, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    if (!opt.config.empty()) {
        std::string error;
        if (!apply_config(opt.config, opt, error)) {
            std::cerr << "error: " << error << "\n";
            return kExitInput;
        }
    }

    try {
        if (synth->parsed()) return cmd_synth(opt);
        if (extract->parsed()) return cmd_extract(opt);
        if (fit->parsed()) return cmd_fit(opt);
        if (score->parsed()) return cmd_score(opt);
        if (explain->parsed()) return cmd_explain(opt);
        if (pipeline->parsed()) {
            if (opt.meta.empty() || opt.signals.empty() || opt.out.empty()) {
                std::cerr << "error: pipeline requires meta, signals and out (flags or config)\n";
                return kExitInput;
            }
            return cmd_pipeline(opt);
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
