#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fitolab/time_grid.hpp"

namespace fitolab {

/// Vertical perturbation omega + h e_i 1_{[t_k, T]}: bump coordinate
/// `coordinate` by `magnitude` from grid index `time_index` onwards.
struct BumpSpec {
    std::size_t time_index = 0;
    std::size_t coordinate = 0;
    double magnitude = 0.0;
};

/// Read-only, non-owning view of path values on a grid. Functionals evaluate
/// through this view, so finite-difference engines can present scratch
/// buffers without copying whole paths.
class PathView {
public:
    PathView(const TimeGrid& grid, std::size_t dim, const double* values)
        : grid_(&grid), dim_(dim), values_(values) {}

    const TimeGrid& grid() const { return *grid_; }
    std::size_t dim() const { return dim_; }
    std::size_t steps() const { return grid_->steps(); }

    double operator()(std::size_t k, std::size_t i) const { return values_[k * dim_ + i]; }
    std::span<const double> row(std::size_t k) const { return {values_ + k * dim_, dim_}; }
    const double* data() const { return values_; }

private:
    const TimeGrid* grid_;
    std::size_t dim_;
    const double* values_;
};

/// Immutable d-dimensional sample path on a shared time grid.
///
/// A path stores its values and its per-step increments. For paths built
/// from increments (Wiener paths in particular) values are the running sums
/// of the increments, so stochastic integrals of the constant integrand
/// telescope bitwise back to the path values. stop/bump return fresh paths;
/// instances are safe to share across threads.
class Path {
public:
    /// values laid out row-major, (N+1) x d. Increments are derived by
    /// differencing; exact telescoping is only guaranteed for paths built
    /// with from_increments.
    static Path from_values(TimeGridPtr grid, std::size_t dim, std::vector<double> values);

    /// Canonical constructor: values are accumulated from the first row, so
    /// values[k+1] == values[k] + increments[k] holds bitwise.
    static Path from_increments(TimeGridPtr grid, std::size_t dim,
                                std::span<const double> first_row,
                                std::vector<double> increments);

    const TimeGrid& grid() const { return *grid_; }
    const TimeGridPtr& grid_ptr() const { return grid_; }
    std::size_t dim() const { return dim_; }
    std::size_t steps() const { return grid_->steps(); }

    double value(std::size_t k, std::size_t i) const { return values_[k * dim_ + i]; }
    std::span<const double> row(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }
    /// Increment over [t_k, t_{k+1}), coordinate i.
    double increment(std::size_t k, std::size_t i) const { return increments_[k * dim_ + i]; }
    std::span<const double> increment_row(std::size_t k) const {
        return {increments_.data() + k * dim_, dim_};
    }

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& increments() const { return increments_; }

    PathView view() const { return PathView(*grid_, dim_, values_.data()); }
    operator PathView() const { return view(); }

    bool all_finite() const;

private:
    Path(TimeGridPtr grid, std::size_t dim, std::vector<double> values,
         std::vector<double> increments);

    friend Path stop_path(const Path&, std::size_t);
    friend Path bump_path(const Path&, const BumpSpec&);

    TimeGridPtr grid_;
    std::size_t dim_;
    std::vector<double> values_;      // (N+1) x d
    std::vector<double> increments_;  // N x d
};

/// omega_t(s) = omega(t ^ s): freeze the path at grid index k.
Path stop_path(const Path& p, std::size_t k);

/// omega + h e_i 1_{[t_k, T]}. Rows before the bump index are reused bitwise.
Path bump_path(const Path& p, const BumpSpec& b);

/// CSV with header `t,w1,...,wd`, one row per grid point, '.' decimal separator.
void write_path_csv(std::ostream& out, const Path& p);
Path read_path_csv(std::istream& in);

}  // namespace fitolab
