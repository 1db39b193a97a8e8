#include "fitolab/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fitolab/errors.hpp"

namespace fitolab {

namespace {

// Left-Riemann running integral of the first coordinate up to t_k, extended
// beyond t_k with the path frozen: integral_0^t omega_{t_k}(s) ds.
double frozen_left_riemann(const PathView& p, std::size_t k, double t) {
    const TimeGrid& grid = p.grid();
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += p(j, 0) * grid.dt(j);
    return acc + (t - grid[k]) * p(k, 0);
}

FunctionalSpec make_linear() {
    FunctionalSpec f;
    f.id = "linear";
    f.claims = {.martingale = true, .c12b = true};
    f.eval = [](const PathView& p, std::size_t k, double) { return p(k, 0); };
    f.oracle_horizontal = [](const PathView&, std::size_t) { return 0.0; };
    f.oracle_vertical = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 1.0; };
    f.oracle_vertical2 = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 0.0; };
    return f;
}

FunctionalSpec make_quadratic() {
    FunctionalSpec f;
    f.id = "quadratic";
    f.claims = {.martingale = true, .c12b = true};
    f.eval = [](const PathView& p, std::size_t k, double t) { return p(k, 0) * p(k, 0) - t; };
    f.oracle_horizontal = [](const PathView&, std::size_t) { return -1.0; };
    f.oracle_vertical = [](const PathView& p, std::size_t k, std::span<double> out) {
        out[0] = 2.0 * p(k, 0);
    };
    f.oracle_vertical2 = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 2.0; };
    return f;
}

FunctionalSpec make_conditional_square() {
    FunctionalSpec f;
    f.id = "conditional-square";
    f.claims = {.martingale = true, .c12b = true};
    // price at t of the W(T)^2 claim: E[W(T)^2 | F_t] = W(t)^2 + (T - t)
    f.eval = [](const PathView& p, std::size_t k, double t) {
        return p(k, 0) * p(k, 0) + (p.grid().horizon() - t);
    };
    f.oracle_horizontal = [](const PathView&, std::size_t) { return -1.0; };
    f.oracle_vertical = [](const PathView& p, std::size_t k, std::span<double> out) {
        out[0] = 2.0 * p(k, 0);
    };
    f.oracle_vertical2 = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 2.0; };
    return f;
}

FunctionalSpec make_exponential() {
    FunctionalSpec f;
    f.id = "exponential";
    f.claims = {.martingale = true, .c12b = true};
    f.eval = [](const PathView& p, std::size_t k, double t) {
        return std::exp(p(k, 0) - 0.5 * t);
    };
    f.oracle_horizontal = [](const PathView& p, std::size_t k) {
        return -0.5 * std::exp(p(k, 0) - 0.5 * p.grid()[k]);
    };
    f.oracle_vertical = [](const PathView& p, std::size_t k, std::span<double> out) {
        out[0] = std::exp(p(k, 0) - 0.5 * p.grid()[k]);
    };
    f.oracle_vertical2 = [](const PathView& p, std::size_t k, std::span<double> out) {
        out[0] = std::exp(p(k, 0) - 0.5 * p.grid()[k]);
    };
    return f;
}

FunctionalSpec make_integral() {
    FunctionalSpec f;
    f.id = "integral";
    f.claims = {.c12b = true};  // finite variation, not a martingale
    f.eval = frozen_left_riemann;
    f.oracle_horizontal = [](const PathView& p, std::size_t k) { return p(k, 0); };
    f.oracle_vertical = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 0.0; };
    f.oracle_vertical2 = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 0.0; };
    return f;
}

FunctionalSpec make_anticipated_average() {
    FunctionalSpec f;
    f.id = "anticipated-average";
    f.claims = {.martingale = true, .c12b = true};
    // E[ integral_0^T w ds | F_t ] = integral_0^t w ds + w(t) (T - t)
    f.eval = [](const PathView& p, std::size_t k, double t) {
        return frozen_left_riemann(p, k, t) + p(k, 0) * (p.grid().horizon() - t);
    };
    f.oracle_horizontal = [](const PathView&, std::size_t) { return 0.0; };
    f.oracle_vertical = [](const PathView& p, std::size_t k, std::span<double> out) {
        out[0] = p.grid().horizon() - p.grid()[k];
    };
    f.oracle_vertical2 = [](const PathView&, std::size_t, std::span<double> out) { out[0] = 0.0; };
    return f;
}

FunctionalSpec make_inverse_bessel(std::span<const double> params) {
    std::vector<double> anchor{1.0, 0.0, 0.0};
    if (!params.empty()) {
        if (params.size() != 3) {
            throw std::invalid_argument("inverse-bessel expects 3 anchor coordinates");
        }
        anchor.assign(params.begin(), params.end());
    }
    const double norm = std::sqrt(anchor[0] * anchor[0] + anchor[1] * anchor[1] +
                                  anchor[2] * anchor[2]);
    if (!(norm > 0.0)) {
        throw std::invalid_argument("inverse-bessel anchor must be nonzero");
    }
    FunctionalSpec f;
    f.id = "inverse-bessel";
    f.dim = 3;
    f.params = anchor;
    f.claims = {.strict_local_martingale = true};  // harmonic away from -x0, unbounded near it
    auto radius = [anchor](const PathView& p, std::size_t k, double r[3]) {
        for (std::size_t i = 0; i < 3; ++i) r[i] = anchor[i] + p(k, i);
        return std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    };
    f.eval = [radius](const PathView& p, std::size_t k, double) {
        double r[3];
        const double dist = radius(p, k, r);
        if (dist < kSingularRadius) {
            throw NumericError("inverse-bessel: path entered the singular ball at step " +
                               std::to_string(k));
        }
        return 1.0 / dist;
    };
    f.oracle_horizontal = [](const PathView&, std::size_t) { return 0.0; };
    f.oracle_vertical = [radius](const PathView& p, std::size_t k, std::span<double> out) {
        double r[3];
        const double dist = radius(p, k, r);
        const double inv3 = 1.0 / (dist * dist * dist);
        for (std::size_t i = 0; i < 3; ++i) out[i] = -r[i] * inv3;
    };
    f.oracle_vertical2 = [radius](const PathView& p, std::size_t k, std::span<double> out) {
        double r[3];
        const double dist = radius(p, k, r);
        const double inv5 = 1.0 / (dist * dist * dist * dist * dist);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                const double delta = (i == j) ? dist * dist : 0.0;
                out[i * 3 + j] = (3.0 * r[i] * r[j] - delta) * inv5;
            }
        }
    };
    return f;
}

FunctionalSpec make_running_max() {
    FunctionalSpec f;
    f.id = "running-max-to-t";
    // non-anticipativity fixture only: kinked at the running max, no
    // smoothness or martingale claims, no oracles
    f.eval = [](const PathView& p, std::size_t k, double) {
        double m = p(0, 0);
        for (std::size_t j = 1; j <= k; ++j) m = std::max(m, p(j, 0));
        return m;
    };
    return f;
}

void require_no_params(const std::string& id, std::span<const double> params) {
    if (!params.empty()) {
        throw std::invalid_argument("functional '" + id + "' takes no parameters");
    }
}

}  // namespace

std::vector<std::string> catalog_ids() {
    return {"linear",   "quadratic", "conditional-square",  "exponential",
            "integral", "anticipated-average", "inverse-bessel", "running-max-to-t"};
}

FunctionalSpec make_functional(const std::string& id, std::span<const double> params) {
    if (id == "inverse-bessel") return make_inverse_bessel(params);
    require_no_params(id, params);
    if (id == "linear") return make_linear();
    if (id == "quadratic") return make_quadratic();
    if (id == "conditional-square") return make_conditional_square();
    if (id == "exponential") return make_exponential();
    if (id == "integral") return make_integral();
    if (id == "anticipated-average") return make_anticipated_average();
    if (id == "running-max-to-t") return make_running_max();
    throw std::invalid_argument("unknown functional id '" + id + "'");
}

CatalogEntryInfo catalog_info(const std::string& id) {
    const FunctionalSpec f = make_functional(id);
    CatalogEntryInfo info;
    info.id = f.id;
    info.dim = f.dim;
    info.claims = f.claims;
    info.has_oracles = f.has_oracles();
    if (id == "linear") info.formula = "w(t)";
    else if (id == "quadratic") info.formula = "w(t)^2 - t";
    else if (id == "conditional-square") info.formula = "w(t)^2 + (T - t)";
    else if (id == "exponential") info.formula = "exp(w(t) - t/2)";
    else if (id == "integral") info.formula = "integral_0^t w ds (left Riemann)";
    else if (id == "anticipated-average") info.formula = "integral_0^t w ds + w(t) (T - t)";
    else if (id == "inverse-bessel") info.formula = "1 / |x0 + w(t)|, d = 3";
    else if (id == "running-max-to-t") info.formula = "max_{s <= t} w(s)";
    info.params_doc = (id == "inverse-bessel") ? "x0: 3 anchor coordinates, default (1, 0, 0)"
                                               : "none";
    return info;
}

FunctionalSpec shifted(FunctionalSpec f, double offset) {
    auto base = std::move(f.eval);
    f.eval = [base = std::move(base), offset](const PathView& p, std::size_t k, double t) {
        return base(p, k, t) - offset;
    };
    f.id += "-shifted";
    return f;
}

}  // namespace fitolab
