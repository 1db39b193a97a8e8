#include "fitolab/statistics.hpp"

#include <cmath>
#include <stdexcept>

namespace fitolab {

double MomentAccumulator::mean() const {
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double MomentAccumulator::mean_sq() const {
    return n > 0 ? sum_sq / static_cast<double>(n) : 0.0;
}

double MomentAccumulator::variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double raw = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return raw > 0.0 ? raw : 0.0;
}

double MomentAccumulator::standard_error() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

double MomentAccumulator::rms() const {
    return std::sqrt(mean_sq());
}

double MomentAccumulator::rms_standard_error() const {
    // delta method: Var(sqrt(m2_hat)) ~ Var(x^2) / (4 n m2)
    if (n < 2) return 0.0;
    const double m2 = mean_sq();
    if (!(m2 > 0.0)) return 0.0;
    const double m4 = sum_quad / static_cast<double>(n);
    const double var_sq = m4 - m2 * m2;
    if (!(var_sq > 0.0)) return 0.0;
    const double se_mean_sq = std::sqrt(var_sq / static_cast<double>(n));
    return se_mean_sq / (2.0 * std::sqrt(m2));
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("ols_slope: need two or more paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("ols_slope: degenerate abscissae");
    }
    return sxy / sxx;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("loglog_slope: inputs must be positive");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return ols_slope(lx, ly);
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile_sorted: empty sample");
    }
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile_se_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile_se_sorted: empty sample");
    }
    const double n = static_cast<double>(sorted.size());
    const double spread = std::sqrt(n * q * (1.0 - q));
    const double center = n * q;
    auto clamp_rank = [&](double r) {
        if (r < 0.0) r = 0.0;
        if (r > n - 1.0) r = n - 1.0;
        return static_cast<std::size_t>(r);
    };
    const double lo = sorted[clamp_rank(center - spread)];
    const double hi = sorted[clamp_rank(center + spread)];
    return 0.5 * (hi - lo);
}

}  // namespace fitolab
