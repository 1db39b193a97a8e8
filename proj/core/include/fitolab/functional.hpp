#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fitolab/path.hpp"

namespace fitolab {

enum class FdScheme { Central, OneSided };

/// Finite-difference controls shared by the derivative operators.
///
/// bump == 0 selects the adaptive default: the relative-absolute hybrid
/// 1e-5 * (1 + |w_i(t_k)|) snapped up to the next power of two, so that
/// bumped evaluations of affine functionals stay exact in floating point.
struct FdOptions {
    double bump = 0.0;
    double time_step = 1e-6;  // forward step of the horizontal difference
    FdScheme scheme = FdScheme::Central;
};

/// Power-of-two bump near 1e-5 * (1 + |x|).
double default_bump(double coordinate_value);

/// Resolved bump size for coordinate value x under the given options.
inline double resolve_bump(const FdOptions& opt, double x) {
    return opt.bump > 0.0 ? opt.bump : default_bump(x);
}

/// Regularity and process-class assertions for a functional. These are
/// catalog-level claims, not runtime-verified facts; engines use them to
/// gate which operations make sense.
struct FunctionalClaims {
    bool martingale = false;
    bool strict_local_martingale = false;
    bool c12b = false;  // smooth enough for the pathwise change-of-variable check
};

/// A non-anticipative path functional F(t, omega) with optional closed-form
/// derivative oracles.
///
/// eval(view, k, t) returns F(t, omega_{t_k}): the time argument may run
/// ahead of the stopping index (t >= t_k), in which case the path is frozen
/// at t_k and the formula extended in t. Implementations must read rows
/// 0..k only and must be pure: no mutable state, safe for concurrent calls.
/// Evaluation failures (singularities, non-finite values) are reported by
/// throwing NumericError.
struct FunctionalSpec {
    std::string id;
    std::size_t dim = 1;
    std::vector<double> params;
    FunctionalClaims claims;
    bool supports_offgrid_time = true;

    std::function<double(const PathView&, std::size_t k, double t)> eval;

    // Closed-form derivatives at (t_k, omega_{t_k}); null when unavailable.
    std::function<double(const PathView&, std::size_t k)> oracle_horizontal;
    std::function<void(const PathView&, std::size_t k, std::span<double> out)> oracle_vertical;
    std::function<void(const PathView&, std::size_t k, std::span<double> out)> oracle_vertical2;

    bool has_oracles() const {
        return static_cast<bool>(oracle_vertical);
    }

    double operator()(const PathView& p, std::size_t k) const { return eval(p, k, p.grid()[k]); }
};

/// One derivative measurement at (t_k, omega): the horizontal rate, the
/// vertical gradient, and optionally the second vertical derivative matrix.
struct DerivativeSample {
    double horizontal = 0.0;
    std::vector<double> vertical;   // d
    std::vector<double> vertical2;  // d x d, empty when not requested
    double bump_used = 0.0;         // bump of the first coordinate (adaptive bumps vary per axis)
    FdScheme scheme = FdScheme::Central;
};

}  // namespace fitolab
