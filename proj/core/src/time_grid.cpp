#include "fitolab/time_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fitolab {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) {
        throw std::invalid_argument("TimeGrid needs at least two points");
    }
    if (times_.front() != 0.0) {
        throw std::invalid_argument("TimeGrid must start at exactly 0");
    }
    for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
        if (!std::isfinite(times_[k + 1]) || !(times_[k + 1] > times_[k])) {
            throw std::invalid_argument("TimeGrid times must be finite and strictly increasing (index " +
                                        std::to_string(k + 1) + ")");
        }
    }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeGrid horizon must be positive and finite");
    }
    if (steps < 1) {
        throw std::invalid_argument("TimeGrid needs at least one step");
    }
    std::vector<double> times(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        times[k] = (horizon * static_cast<double>(k)) / static_cast<double>(steps);
    }
    times[steps] = horizon;  // last point is T exactly, whatever rounding did
    return TimeGrid(std::move(times));
}

double TimeGrid::at(std::size_t k) const {
    if (k >= times_.size()) {
        throw std::out_of_range("TimeGrid index " + std::to_string(k) + " out of range");
    }
    return times_[k];
}

double TimeGrid::dt(std::size_t k) const {
    if (k + 1 >= times_.size()) {
        throw std::out_of_range("TimeGrid step index " + std::to_string(k) + " out of range");
    }
    return times_[k + 1] - times_[k];
}

}  // namespace fitolab
