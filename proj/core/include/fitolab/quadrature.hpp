#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fitolab/path.hpp"

namespace fitolab {

/// Left-point Ito sum  sum_{k < upto} phi(t_k)' (w(t_{k+1}) - w(t_k)).
///
/// `rows` holds at least `upto` left-point integrand rows of dimension
/// w.dim(), row-major. Summation order is fixed ascending in k; steps whose
/// integrand row is exactly zero are skipped, which keeps the truncated /
/// stopped reconstruction identity bitwise-exact. Left-point evaluation is
/// mandatory: the result never reads the path beyond index `upto`.
double ito_integral(std::span<const double> rows, const Path& w, std::size_t upto);

/// Running sum variant: out[k] = initial + ito_integral(rows, w, k) for
/// k = 0..N, computed with one ascending pass (identical partial sums).
void ito_partial_sums(double initial, std::span<const double> rows, const Path& w,
                      std::span<double> out);

/// Neumaier-compensated variant of ito_integral. Same fixed ascending
/// order; trades the bitwise telescoping contract for tighter rounding on
/// long sums, so it is a separate entry point rather than a default.
double compensated_ito_integral(std::span<const double> rows, const Path& w, std::size_t upto);

/// Realized covariation  sum_{k < upto} dW_k dW_k', row-major d x d.
std::vector<double> quadratic_variation(const Path& w, std::size_t upto);

}  // namespace fitolab
