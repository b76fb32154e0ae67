#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/errors.hpp"

namespace evad {

namespace {

constexpr double kInvE = 0.36787944117144233;

void require_length(std::span<const double> v, std::size_t min_len, const char* op) {
    if (v.size() < min_len) {
        throw ValidationError(std::string(op) + ": need at least " + std::to_string(min_len) +
                              " samples, got " + std::to_string(v.size()));
    }
}

// Constant input must hit the degenerate branch exactly, and a floating-point
// mean of n equal values need not equal that value, so detect it up front.
bool is_constant(std::span<const double> v) {
    for (double x : v)
        if (x != v.front()) return false;
    return true;
}

struct CentralMoments {
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

CentralMoments central_moments(std::span<const double> v) {
    const double mu = mean(v);
    CentralMoments m;
    for (double x : v) {
        const double d = x - mu;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    const double n = static_cast<double>(v.size());
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    return m;
}

}  // namespace

double mean(std::span<const double> values) {
    double sum = 0.0;
    for (double x : values) sum += x;
    return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
    if (is_constant(values)) return 0.0;
    return std::sqrt(central_moments(values).m2);
}

double skewness(std::span<const double> values) {
    require_length(values, 3, "skewness");
    if (is_constant(values)) return 0.0;
    const auto m = central_moments(values);
    if (m.m2 == 0.0) return 0.0;
    return m.m3 / (m.m2 * std::sqrt(m.m2));
}

double kurtosis(std::span<const double> values) {
    require_length(values, 3, "kurtosis");
    if (is_constant(values)) return 0.0;
    const auto m = central_moments(values);
    if (m.m2 == 0.0) return 0.0;
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

double abs_diff(std::span<const double> values) {
    require_length(values, 2, "abs_diff");
    double sum = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) sum += std::abs(values[i] - values[i - 1]);
    return sum / static_cast<double>(values.size() - 1);
}

std::int64_t count_peaks(std::span<const double> values) {
    require_length(values, 3, "count_peaks");
    std::int64_t peaks = 0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        if (values[i - 1] < values[i] && values[i] > values[i + 1]) ++peaks;
    }
    return peaks;
}

std::int64_t autocorr_lag(std::span<const double> values) {
    require_length(values, 3, "autocorr_lag");
    if (is_constant(values)) return 0;

    const std::size_t n = values.size();
    const double mu = mean(values);
    std::vector<double> dev(n);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dev[i] = values[i] - mu;
        denom += dev[i] * dev[i];
    }
    if (denom == 0.0) return 0;

    const std::int64_t cap = static_cast<std::int64_t>(n / 2);
    for (std::int64_t lag = 1; lag <= cap; ++lag) {
        double num = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) num += dev[i] * dev[i + lag];
        if (num / denom < kInvE) return lag;
    }
    return cap;
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("pearson_corr: length mismatch");
    require_length(a, 3, "pearson_corr");
    if (is_constant(a) || is_constant(b)) return 0.0;

    const double ma = mean(a);
    const double mb = mean(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    const double r = sab / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

}  // namespace evad
