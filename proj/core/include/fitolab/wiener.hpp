#pragma once

#include <cstdint>
#include <cstddef>

#include "fitolab/path.hpp"
#include "fitolab/time_grid.hpp"

namespace fitolab {

/// Ensemble of independent Wiener paths on one grid.
///
/// Paths are materialized on demand from the counter-based generator (see
/// rng.hpp): path(p) is a pure function of (seed, p, grid, dim), so ensembles
/// never hold P x N storage and the same scenario index yields the same path
/// in ensembles of different sizes. Every path starts at the zero vector and
/// has increments N(0, dt_k) per coordinate, independent across steps,
/// coordinates and scenarios.
class WienerBatch {
public:
    WienerBatch(TimeGridPtr grid, std::size_t dim, std::size_t scenarios, std::uint64_t seed);

    const TimeGrid& grid() const { return *grid_; }
    const TimeGridPtr& grid_ptr() const { return grid_; }
    std::size_t dim() const { return dim_; }
    std::size_t scenarios() const { return scenarios_; }
    std::uint64_t seed() const { return seed_; }

    Path path(std::size_t scenario) const;

private:
    TimeGridPtr grid_;
    std::size_t dim_;
    std::size_t scenarios_;
    std::uint64_t seed_;
};

WienerBatch generate_wiener(TimeGridPtr grid, std::size_t dim, std::size_t scenarios,
                            std::uint64_t seed);

}  // namespace fitolab
