#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fitolab/functional.hpp"
#include "fitolab/wiener.hpp"

namespace fitolab {

/// Reconstruction residual statistics for one ensemble:
///   residual(k) = F(t_k, W) - F(0, W) - sum_{j<k} phi_j' dW_j
/// with phi the finite-difference vertical gradient. Scenarios with
/// singular failures are excluded from the statistics and counted.
struct ResidualReport {
    std::vector<double> per_t_rms;     // N + 1 entries
    std::vector<double> per_t_rms_se;
    double terminal_rms = 0.0;
    double terminal_rms_se = 0.0;
    double terminal_mean = 0.0;
    double terminal_mean_se = 0.0;
    double sup_p50 = 0.0;  // quantiles of per-scenario sup_k |residual(k)|
    double sup_p50_se = 0.0;
    double sup_p90 = 0.0;
    double sup_p90_se = 0.0;
    double sup_p99 = 0.0;
    double sup_p99_se = 0.0;
    std::size_t scenarios_used = 0;
    std::size_t singular_count = 0;
};

/// Monte Carlo check of the constructive representation on the ensemble.
/// Requires F to claim the (local) martingale property.
ResidualReport representation_residual(const FunctionalSpec& f, const WienerBatch& batch,
                                       const FdOptions& opt = {}, std::size_t threads = 0);

/// Both sides of the terminal pairing identity
///   E[Y(T) Z(T)] = E[ integral_0^T grad_W Y' grad_W Z dt ]
/// for centered martingale functionals (values taken as F - F(0, .)),
/// discretized with left-point rows and dt weights. diff is the paired
/// per-scenario difference lhs - rhs, the sharpest agreement gauge.
struct PairingStats {
    double lhs_mean = 0.0, lhs_se = 0.0;
    double rhs_mean = 0.0, rhs_se = 0.0;
    double diff_mean = 0.0, diff_se = 0.0;
    std::size_t scenarios_used = 0;
    std::size_t singular_count = 0;
};

PairingStats pairing_check(const FunctionalSpec& y, const FunctionalSpec& z,
                           const WienerBatch& batch, const FdOptions& opt = {},
                           std::size_t threads = 0);

/// Strict-locality experiment: the terminal mean of a strict local
/// martingale drops below M(0), while every ladder level n stops it into a
/// bounded martingale with E[M(T ^ tau_n)] = M(0).
struct StrictLocalityStats {
    double terminal_mean = 0.0, terminal_se = 0.0;
    std::size_t scenarios_used = 0;
    std::size_t singular_count = 0;  // excluded from the unstopped mean, never dropped silently
    struct LevelStats {
        double level = 0.0;
        double stopped_mean = 0.0, stopped_se = 0.0;
        double tau_mean = 0.0;              // mean stopping index / N
        std::size_t stopped_excluded = 0;   // stopped value itself unavailable (tau at the failure)
    };
    std::vector<LevelStats> levels;
};

StrictLocalityStats strict_locality_diagnostic(const FunctionalSpec& f, const WienerBatch& batch,
                                               std::span<const double> levels,
                                               std::size_t threads = 0);

/// Closed-form E[1 / |x0 + W(t)|] for a 3-d Wiener path from distance
/// r0 = |x0|: (2 Phi(r0 / sqrt(t)) - 1) / r0. Reference value for the
/// strict-locality report.
double inverse_bessel_expected_terminal(double anchor_norm, double t);

}  // namespace fitolab
