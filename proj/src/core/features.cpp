#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/stats.hpp"

namespace evad {

const std::vector<std::string>& feature_schema() {
    static const std::vector<std::string> schema = {
        "P_mean",    "E_mean",    "T_mean",  "co2_kg",  "duration_s", "Corr_PT",
        "P_std",     "T_std",     "P_max",   "T_max",   "P_min",      "T_min",
        "P_absdiff", "T_absdiff", "P_skew",  "T_skew",  "P_kurt",     "T_kurt",
        "P_npeaks",  "T_npeaks",  "P_corrlag", "T_corrlag",
    };
    return schema;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> keep) const {
    if (keep.empty()) throw ValidationError("select_columns: empty selection");
    std::unordered_set<std::size_t> seen;
    for (auto j : keep) {
        if (j >= cols()) throw ValidationError("select_columns: column index out of range");
        if (!seen.insert(j).second) throw ValidationError("select_columns: duplicate column");
    }
    FeatureMatrix out;
    out.row_ids = row_ids;
    out.schema.reserve(keep.size());
    for (auto j : keep) out.schema.push_back(schema[j]);
    out.values.reserve(rows() * keep.size());
    for (std::size_t i = 0; i < rows(); ++i) {
        for (auto j : keep) out.values.push_back(at(i, j));
    }
    return out;
}

FeatureVector extract_features(const SessionRecord& s) {
    const auto& p = s.power.values;
    const auto& t = s.temperature.values;
    if (p.size() != t.size()) throw ValidationError("extract_features: signals not aligned");
    if (p.size() < 3) throw ValidationError("extract_features: session too short");

    FeatureVector f{};
    f[kPMean] = mean(p);
    f[kEMean] = s.energy_kwh;
    f[kTMean] = mean(t);
    f[kCo2] = s.co2_kg;
    f[kDurationS] = static_cast<double>(s.end_time - s.start_time) / 1e6;
    f[kCorrPT] = pearson_corr(p, t);
    f[kPStd] = population_std(p);
    f[kTStd] = population_std(t);
    const auto [p_min, p_max] = std::minmax_element(p.begin(), p.end());
    const auto [t_min, t_max] = std::minmax_element(t.begin(), t.end());
    f[kPMax] = *p_max;
    f[kTMax] = *t_max;
    f[kPMin] = *p_min;
    f[kTMin] = *t_min;
    f[kPAbsDiff] = abs_diff(p);
    f[kTAbsDiff] = abs_diff(t);
    f[kPSkew] = skewness(p);
    f[kTSkew] = skewness(t);
    f[kPKurt] = kurtosis(p);
    f[kTKurt] = kurtosis(t);
    f[kPNPeaks] = static_cast<double>(count_peaks(p));
    f[kTNPeaks] = static_cast<double>(count_peaks(t));
    f[kPCorrLag] = static_cast<double>(autocorr_lag(p));
    f[kTCorrLag] = static_cast<double>(autocorr_lag(t));
    return f;
}

FeatureMatrix extract_all(std::span<const SessionRecord> sessions) {
    FeatureMatrix m;
    m.schema = feature_schema();
    m.row_ids.reserve(sessions.size());
    m.values.reserve(sessions.size() * kNumFeatures);
    for (const auto& s : sessions) {
        m.row_ids.push_back(s.session_id);
        const auto f = extract_features(s);
        m.values.insert(m.values.end(), f.begin(), f.end());
    }
    return m;
}

void write_features_csv(const FeatureMatrix& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "session_id";
    for (const auto& name : matrix.schema) out << ',' << csv_escape(name);
    out << '\n';
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        out << csv_escape(matrix.row_ids[i]);
        for (std::size_t j = 0; j < matrix.cols(); ++j) out << ',' << format_double(matrix.at(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

FeatureMatrix read_features_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    CsvReader csv(in);
    std::vector<std::string> fields;
    if (!csv.next(fields) || fields.size() < 2 || fields[0] != "session_id")
        throw FormatError(path + ": malformed header");

    FeatureMatrix m;
    m.schema.assign(fields.begin() + 1, fields.end());
    std::unordered_set<std::string> names(m.schema.begin(), m.schema.end());
    if (names.size() != m.schema.size())
        throw FormatError(path + ": duplicate feature column");

    while (csv.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != m.schema.size() + 1) {
            throw FormatError(path + ": line " + std::to_string(csv.line()) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(m.schema.size() + 1));
        }
        m.row_ids.push_back(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            const auto v = parse_double(fields[j]);
            if (!v) {
                throw FormatError(path + ": line " + std::to_string(csv.line()) +
                                  ": bad number '" + fields[j] + "'");
            }
            m.values.push_back(*v);
        }
    }
    return m;
}

}  // namespace evad
