#include "fitolab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace fitolab {

namespace {

inline bool zero_row(const double* row, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        if (row[i] != 0.0) return false;
    }
    return true;
}

inline double dot_step(const double* row, const double* inc, std::size_t d) {
    double acc = row[0] * inc[0];
    for (std::size_t i = 1; i < d; ++i) acc += row[i] * inc[i];
    return acc;
}

}  // namespace

double ito_integral(std::span<const double> rows, const Path& w, std::size_t upto) {
    const std::size_t d = w.dim();
    if (upto > w.steps()) {
        throw std::out_of_range("ito_integral: upto beyond grid");
    }
    if (rows.size() < upto * d) {
        throw std::invalid_argument("ito_integral: integrand shorter than upto");
    }
    const double* inc = w.increments().data();
    double acc = 0.0;
    for (std::size_t k = 0; k < upto; ++k) {
        const double* row = rows.data() + k * d;
        if (zero_row(row, d)) continue;
        acc += dot_step(row, inc + k * d, d);
    }
    return acc;
}

void ito_partial_sums(double initial, std::span<const double> rows, const Path& w,
                      std::span<double> out) {
    const std::size_t d = w.dim();
    const std::size_t steps = w.steps();
    if (out.size() != steps + 1) {
        throw std::invalid_argument("ito_partial_sums: output size must be N + 1");
    }
    if (rows.size() < steps * d) {
        throw std::invalid_argument("ito_partial_sums: integrand shorter than grid");
    }
    const double* inc = w.increments().data();
    double acc = initial;
    out[0] = acc;
    for (std::size_t k = 0; k < steps; ++k) {
        const double* row = rows.data() + k * d;
        if (!zero_row(row, d)) {
            acc += dot_step(row, inc + k * d, d);
        }
        out[k + 1] = acc;
    }
}

double compensated_ito_integral(std::span<const double> rows, const Path& w,
                                std::size_t upto) {
    const std::size_t d = w.dim();
    if (upto > w.steps()) {
        throw std::out_of_range("compensated_ito_integral: upto beyond grid");
    }
    if (rows.size() < upto * d) {
        throw std::invalid_argument("compensated_ito_integral: integrand shorter than upto");
    }
    const double* inc = w.increments().data();
    double acc = 0.0;
    double compensation = 0.0;
    for (std::size_t k = 0; k < upto; ++k) {
        const double* row = rows.data() + k * d;
        if (zero_row(row, d)) continue;
        const double term = dot_step(row, inc + k * d, d);
        const double next = acc + term;
        if (std::abs(acc) >= std::abs(term)) {
            compensation += (acc - next) + term;
        } else {
            compensation += (term - next) + acc;
        }
        acc = next;
    }
    return acc + compensation;
}

std::vector<double> quadratic_variation(const Path& w, std::size_t upto) {
    const std::size_t d = w.dim();
    if (upto > w.steps()) {
        throw std::out_of_range("quadratic_variation: upto beyond grid");
    }
    std::vector<double> qv(d * d, 0.0);
    const double* inc = w.increments().data();
    for (std::size_t k = 0; k < upto; ++k) {
        const double* dw = inc + k * d;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                qv[i * d + j] += dw[i] * dw[j];
            }
        }
    }
    return qv;
}

}  // namespace fitolab
