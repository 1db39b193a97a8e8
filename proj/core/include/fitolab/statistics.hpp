#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fitolab {

/// Streaming moment accumulator (up to the fourth power, so RMS values can
/// carry delta-method standard errors). merge() must be called in a fixed
/// order for bitwise-reproducible reductions (see parallel.hpp).
struct MomentAccumulator {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double sum_quad = 0.0;

    void add(double x) {
        ++n;
        const double x2 = x * x;
        sum += x;
        sum_sq += x2;
        sum_quad += x2 * x2;
    }
    void merge(const MomentAccumulator& other) {
        n += other.n;
        sum += other.sum;
        sum_sq += other.sum_sq;
        sum_quad += other.sum_quad;
    }

    double mean() const;
    /// Second raw moment estimate E[x^2].
    double mean_sq() const;
    /// Unbiased sample variance.
    double variance() const;
    /// Plain standard error of the mean, s / sqrt(n).
    double standard_error() const;
    /// sqrt(E[x^2]) and its delta-method standard error.
    double rms() const;
    double rms_standard_error() const;
};

/// Ordinary least squares slope of y against x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// log-log slope: fit log(y) = a + b log(x), returns b. Inputs must be positive.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile of a sorted sample, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Distribution-free standard error of a sample quantile: half the width of
/// the 68% order-statistic confidence interval around rank n q.
double quantile_se_sorted(std::span<const double> sorted, double q);

}  // namespace fitolab
