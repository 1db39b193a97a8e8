#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fitolab/functional.hpp"
#include "fitolab/wiener.hpp"

namespace fitolab {

/// Sentinel for "scenario never failed".
inline constexpr std::uint32_t kNoSingular = std::numeric_limits<std::uint32_t>::max();

/// Per-scenario adapted process values M(t_k) on the ensemble grid.
///
/// Values are finite except from a scenario's singular-failure index onward
/// (inverse-Bessel near-hits); failed positions hold NaN and the first failed
/// step is recorded, never silently dropped.
class ProcessOnGrid {
public:
    ProcessOnGrid(WienerBatch batch, std::vector<double> values,
                  std::vector<std::uint32_t> singular_at);

    const WienerBatch& batch() const { return batch_; }
    const TimeGrid& grid() const { return batch_.grid(); }
    std::size_t scenarios() const { return batch_.scenarios(); }
    std::size_t points() const { return grid().size(); }

    double value(std::size_t scenario, std::size_t k) const {
        return values_[scenario * points() + k];
    }
    std::span<const double> scenario_values(std::size_t scenario) const {
        return {values_.data() + scenario * points(), points()};
    }
    double initial(std::size_t scenario) const { return value(scenario, 0); }

    /// First grid index where evaluation failed, or kNoSingular.
    std::uint32_t singular_at(std::size_t scenario) const { return singular_[scenario]; }
    std::size_t singular_count() const;

private:
    WienerBatch batch_;
    std::vector<double> values_;          // scenarios x (N + 1)
    std::vector<std::uint32_t> singular_;
};

/// Per-scenario left-point integrand rows phi(t_k) in R^d.
///
/// Row k is produced from the path stopped at k, so it depends on
/// information up to t_k only. Rows at and after a singular-failure index
/// are exact zeros.
class IntegrandOnGrid {
public:
    IntegrandOnGrid(WienerBatch batch, std::vector<double> rows,
                    std::vector<std::uint32_t> singular_at);

    const WienerBatch& batch() const { return batch_; }
    const TimeGrid& grid() const { return batch_.grid(); }
    std::size_t scenarios() const { return batch_.scenarios(); }
    std::size_t dim() const { return batch_.dim(); }
    std::size_t steps() const { return grid().steps(); }

    std::span<const double> scenario_rows(std::size_t scenario) const {
        return {rows_.data() + scenario * steps() * dim(), steps() * dim()};
    }
    std::span<const double> row(std::size_t scenario, std::size_t k) const {
        return {rows_.data() + (scenario * steps() + k) * dim(), dim()};
    }

    std::uint32_t singular_at(std::size_t scenario) const { return singular_[scenario]; }
    std::size_t singular_count() const;

private:
    WienerBatch batch_;
    std::vector<double> rows_;  // scenarios x N x d
    std::vector<std::uint32_t> singular_;
};

/// M(t_k) = F(t_k, W) per scenario. Evaluation failures mark the scenario
/// singular from the failing index onward.
ProcessOnGrid eval_process(const FunctionalSpec& f, const WienerBatch& batch,
                           std::size_t threads = 0);

/// Row k of scenario p = finite-difference vertical gradient of F at
/// (t_k, path_p): the constructive representation integrand.
IntegrandOnGrid integrand_from_functional(const FunctionalSpec& f, const WienerBatch& batch,
                                          const FdOptions& opt = {}, std::size_t threads = 0);

/// M(t_k) = initial_value + sum_{j<k} phi_j' dW_j per scenario (left-point
/// Ito sums, ascending, so partial sums match ito_integral bitwise).
ProcessOnGrid reconstruct(double initial_value, const IntegrandOnGrid& phi,
                          std::size_t threads = 0);

}  // namespace fitolab
