#pragma once

#include <cstdint>
#include <span>

namespace evad {

// Signal statistics backing the tabular features. Moments are population
// moments (no bias correction). Degenerate convention: zero-variance input
// yields 0 for skewness, kurtosis, correlation and the decorrelation lag, so
// downstream consumers never see NaN.

double mean(std::span<const double> values);

// sqrt of the population second central moment.
double population_std(std::span<const double> values);

// Fisher-Pearson moment coefficient g1 = m3 / m2^(3/2). Length >= 3.
double skewness(std::span<const double> values);

// Excess kurtosis g2 = m4 / m2^2 - 3. Length >= 3.
double kurtosis(std::span<const double> values);

// Mean absolute successive difference. Length >= 2.
double abs_diff(std::span<const double> values);

// Strict interior local maxima (v[i-1] < v[i] > v[i+1]); plateaus do not
// count. Length >= 3.
std::int64_t count_peaks(std::span<const double> values);

// Smallest lag in [1, floor(N/2)] at which the biased sample autocorrelation
// drops below 1/e; floor(N/2) when it never does; 0 for zero variance.
// Length >= 3.
std::int64_t autocorr_lag(std::span<const double> values);

// Pearson correlation; 0 when either side has zero variance. Equal lengths,
// each >= 3.
double pearson_corr(std::span<const double> a, std::span<const double> b);

}  // namespace evad
