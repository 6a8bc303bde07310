#pragma once

#include <span>
#include <vector>

namespace calltopics::stats {

struct KendallResult {
    double tau = 0.0;
    double p_value = 1.0;
    long long s = 0;  // concordant minus discordant pairs
};

/// Largest length whose p-value comes from the exact permutation distribution.
inline constexpr std::size_t kExactKendallMax = 8;

/// Tau-b of `series` against the time index 1..n with a two-sided p-value.
/// Exact permutation distribution for n <= 8, otherwise the tie-corrected
/// normal approximation with continuity correction. A constant series gives
/// tau 0, p 1. Throws InsufficientDataError for n < 3.
KendallResult kendall_tau(std::span<const double> series);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Local regression at every x_i over its ceil(span * n) nearest neighbours
/// with tricube weights. Degree 0 is a weighted mean, degree 1 a weighted
/// line. Throws ParameterError on bad span/degree, fewer than two points,
/// non-increasing x or a window too small for the degree.
std::vector<double> loess_smooth(std::span<const Point> points, double span = 0.5, int degree = 1);

}  // namespace calltopics::stats
