#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace fitolab {

/// Partition 0 = t_0 < t_1 < ... < t_N = T of the trading horizon.
///
/// Invariants enforced at construction: strictly increasing times, first
/// element exactly 0, all steps positive. Grids default to uniform but any
/// strictly increasing partition is accepted.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times);

    static TimeGrid uniform(double horizon, std::size_t steps);

    /// Number of steps N (intervals), not points.
    std::size_t steps() const { return times_.size() - 1; }
    /// Number of grid points N + 1.
    std::size_t size() const { return times_.size(); }
    double horizon() const { return times_.back(); }

    double operator[](std::size_t k) const { return times_[k]; }
    double at(std::size_t k) const;
    /// dt_k = t_{k+1} - t_k, k in [0, N).
    double dt(std::size_t k) const;

    const std::vector<double>& times() const { return times_; }

    bool operator==(const TimeGrid& other) const { return times_ == other.times_; }

private:
    std::vector<double> times_;
};

using TimeGridPtr = std::shared_ptr<const TimeGrid>;

inline TimeGridPtr make_uniform_grid(double horizon, std::size_t steps) {
    return std::make_shared<const TimeGrid>(TimeGrid::uniform(horizon, steps));
}

}  // namespace fitolab
