#include "fitolab/wiener.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fitolab/rng.hpp"

namespace fitolab {

WienerBatch::WienerBatch(TimeGridPtr grid, std::size_t dim, std::size_t scenarios,
                         std::uint64_t seed)
    : grid_(std::move(grid)), dim_(dim), scenarios_(scenarios), seed_(seed) {
    if (!grid_) throw std::invalid_argument("WienerBatch: null grid");
    if (dim_ < 1) throw std::invalid_argument("WienerBatch: dimension must be >= 1");
    if (scenarios_ < 1) throw std::invalid_argument("WienerBatch: scenario count must be >= 1");
}

Path WienerBatch::path(std::size_t scenario) const {
    if (scenario >= scenarios_) {
        throw std::out_of_range("WienerBatch: scenario index out of range");
    }
    const std::size_t steps = grid_->steps();
    GaussianStream stream(seed_, static_cast<std::uint64_t>(scenario));
    std::vector<double> increments(steps * dim_);
    stream.fill(increments);
    for (std::size_t k = 0; k < steps; ++k) {
        const double scale = std::sqrt(grid_->dt(k));
        for (std::size_t i = 0; i < dim_; ++i) increments[k * dim_ + i] *= scale;
    }
    const std::vector<double> origin(dim_, 0.0);
    return Path::from_increments(grid_, dim_, origin, std::move(increments));
}

WienerBatch generate_wiener(TimeGridPtr grid, std::size_t dim, std::size_t scenarios,
                            std::uint64_t seed) {
    return WienerBatch(std::move(grid), dim, scenarios, seed);
}

}  // namespace fitolab
