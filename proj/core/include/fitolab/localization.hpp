#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fitolab/process.hpp"

namespace fitolab {

inline constexpr std::uint16_t kNotStabilized = std::numeric_limits<std::uint16_t>::max();

/// First grid index at or beyond the threshold: per scenario the smallest k
/// with |M(t_k)| >= level (right-continuous detection), capped at N and at
/// the scenario's singular-failure index. Returns N when never crossed.
std::vector<std::uint32_t> hitting_time(const ProcessOnGrid& m, double level);

/// Pluggable localizing sequence theta_n. index() returns a grid index in
/// [0, N]; N plays +infinity on this horizon. Rules must be per-scenario
/// non-decreasing across levels and must not be stuck at 0 (both checked
/// when a ladder is built).
struct ThetaRule {
    std::string id;
    std::function<std::size_t(const Path& path, std::size_t level_index, double level)> index;
};

/// theta_n = +infinity: localization by the |M| >= n crossing alone.
ThetaRule theta_unbounded();
/// theta_n = first k with |W(t_k)|_2 >= level: a genuine alternative
/// localizing sequence read off the driving path.
ThetaRule theta_wiener_hitting();

ThetaRule theta_rule_by_id(const std::string& id);
std::vector<std::string> theta_rule_ids();

/// Localization ladder tau_n = theta_n ^ inf{t: |M(t)| >= n} ^ T over
/// increasing truncation levels, with the per-(scenario, k) stabilization
/// level: the smallest ladder level whose stopped region starts after k.
class StoppingLadder {
public:
    StoppingLadder(std::vector<double> levels, std::size_t scenarios, std::size_t steps,
                   std::vector<std::uint32_t> theta, std::vector<std::uint32_t> tau);

    std::span<const double> levels() const { return levels_; }
    std::size_t level_count() const { return levels_.size(); }
    std::size_t scenarios() const { return scenarios_; }
    std::size_t steps() const { return steps_; }

    std::uint32_t theta(std::size_t scenario, std::size_t level) const {
        return theta_[scenario * levels_.size() + level];
    }
    std::uint32_t tau(std::size_t scenario, std::size_t level) const {
        return tau_[scenario * levels_.size() + level];
    }
    /// Stopping indices of one ladder level across scenarios.
    std::vector<std::uint32_t> tau_column(std::size_t level) const;

    /// Smallest level index l with k + 1 <= tau_l(scenario), kNotStabilized
    /// when even the top level stops before covering step k.
    std::uint16_t stabilization_level(std::size_t scenario, std::size_t k) const {
        return stab_[scenario * steps_ + k];
    }

private:
    std::vector<double> levels_;
    std::size_t scenarios_;
    std::size_t steps_;
    std::vector<std::uint32_t> theta_;  // scenarios x levels
    std::vector<std::uint32_t> tau_;    // scenarios x levels
    std::vector<std::uint16_t> stab_;   // scenarios x steps
};

/// Build the ladder for M over strictly increasing levels. Rejects
/// non-monotone theta rules and rules stuck at zero.
StoppingLadder build_ladder(const ProcessOnGrid& m, std::span<const double> levels,
                            const ThetaRule& theta, std::size_t threads = 0);

/// M_n(t_k) = M(t_{k ^ tau}): freeze each scenario at its stopping index.
ProcessOnGrid stop_process(const ProcessOnGrid& m, std::span<const std::uint32_t> tau);

/// Keep row k exactly when the whole step [t_k, t_{k+1}] lies in the
/// stopped region (k + 1 <= tau); zero it otherwise. This interval rule
/// makes reconstruct(m0, truncated) == stop_process(reconstruct(m0, phi))
/// bitwise on the grid.
IntegrandOnGrid truncate_integrand(const IntegrandOnGrid& phi,
                                   std::span<const std::uint32_t> tau);

/// Per-level fraction of (scenario, k) where the truncated row equals the
/// full row bitwise. Equality holds exactly when the row survives truncation
/// or is exactly zero, which is how the count is taken.
std::vector<double> stabilization_check(const IntegrandOnGrid& phi, const StoppingLadder& ladder);

struct ThetaIndependenceResult {
    bool pass = false;
    std::size_t compared = 0;    // (scenario, k) stabilized under both ladders
    std::size_t mismatches = 0;
    std::size_t uncovered = 0;   // positions not stabilized under one of the rules
};

/// Stabilized-limit integrands under two theta rules must agree bitwise on
/// positions stabilized under both. Truncations are materialized per level
/// and compared row by row, so a wrong truncation convention would fail here.
ThetaIndependenceResult theta_independence_check(const IntegrandOnGrid& phi,
                                                 const ProcessOnGrid& m,
                                                 std::span<const double> levels,
                                                 const ThetaRule& theta_a,
                                                 const ThetaRule& theta_b,
                                                 std::size_t threads = 0);

}  // namespace fitolab
