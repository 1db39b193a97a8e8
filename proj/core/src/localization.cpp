#include "fitolab/localization.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fitolab/parallel.hpp"

namespace fitolab {

namespace {

inline bool zero_row(const double* row, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        if (row[i] != 0.0) return false;
    }
    return true;
}

std::uint32_t scenario_hit(const ProcessOnGrid& m, std::size_t scenario, double level) {
    const std::size_t n = m.grid().steps();
    const std::uint32_t cap =
        std::min<std::uint32_t>(m.singular_at(scenario), static_cast<std::uint32_t>(n));
    const std::span<const double> values = m.scenario_values(scenario);
    for (std::uint32_t k = 0; k < cap; ++k) {
        if (std::abs(values[k]) >= level) return k;
    }
    return cap;
}

}  // namespace

std::vector<std::uint32_t> hitting_time(const ProcessOnGrid& m, double level) {
    if (!(level > 0.0)) {
        throw std::invalid_argument("hitting_time: level must be positive");
    }
    std::vector<std::uint32_t> tau(m.scenarios());
    for (std::size_t p = 0; p < m.scenarios(); ++p) {
        tau[p] = scenario_hit(m, p, level);
    }
    return tau;
}

ThetaRule theta_unbounded() {
    return ThetaRule{"unbounded", [](const Path& path, std::size_t, double) {
                         return path.steps();  // N acts as +infinity on this horizon
                     }};
}

ThetaRule theta_wiener_hitting() {
    return ThetaRule{"wiener-hitting", [](const Path& path, std::size_t, double level) {
                         const std::size_t n = path.steps();
                         const std::size_t d = path.dim();
                         for (std::size_t k = 0; k <= n; ++k) {
                             double norm_sq = 0.0;
                             for (std::size_t i = 0; i < d; ++i) {
                                 const double v = path.value(k, i);
                                 norm_sq += v * v;
                             }
                             if (norm_sq >= level * level) return k;
                         }
                         return n;
                     }};
}

ThetaRule theta_rule_by_id(const std::string& id) {
    if (id == "unbounded") return theta_unbounded();
    if (id == "wiener-hitting") return theta_wiener_hitting();
    throw std::invalid_argument("unknown theta rule '" + id + "'");
}

std::vector<std::string> theta_rule_ids() { return {"unbounded", "wiener-hitting"}; }

StoppingLadder::StoppingLadder(std::vector<double> levels, std::size_t scenarios,
                               std::size_t steps, std::vector<std::uint32_t> theta,
                               std::vector<std::uint32_t> tau)
    : levels_(std::move(levels)), scenarios_(scenarios), steps_(steps),
      theta_(std::move(theta)), tau_(std::move(tau)) {
    const std::size_t L = levels_.size();
    if (theta_.size() != scenarios_ * L || tau_.size() != scenarios_ * L) {
        throw std::invalid_argument("StoppingLadder: shape mismatch");
    }
    if (L > static_cast<std::size_t>(kNotStabilized)) {
        throw std::invalid_argument("StoppingLadder: too many levels");
    }
    // tau is non-decreasing in the level, so the smallest covering level is a
    // threshold along the level axis.
    stab_.assign(scenarios_ * steps_, kNotStabilized);
    for (std::size_t p = 0; p < scenarios_; ++p) {
        for (std::size_t k = 0; k < steps_; ++k) {
            for (std::size_t l = 0; l < L; ++l) {
                if (k + 1 <= tau_[p * L + l]) {
                    stab_[p * steps_ + k] = static_cast<std::uint16_t>(l);
                    break;
                }
            }
        }
    }
}

std::vector<std::uint32_t> StoppingLadder::tau_column(std::size_t level) const {
    std::vector<std::uint32_t> column(scenarios_);
    for (std::size_t p = 0; p < scenarios_; ++p) column[p] = tau(p, level);
    return column;
}

StoppingLadder build_ladder(const ProcessOnGrid& m, std::span<const double> levels,
                            const ThetaRule& theta, std::size_t threads) {
    const std::size_t L = levels.size();
    if (L == 0) throw std::invalid_argument("build_ladder: need at least one level");
    for (std::size_t l = 0; l + 1 < L; ++l) {
        if (!(levels[l] < levels[l + 1])) {
            throw std::invalid_argument("build_ladder: levels must be strictly increasing");
        }
    }
    if (!(levels[0] > 0.0)) {
        throw std::invalid_argument("build_ladder: levels must be positive");
    }
    if (!theta.index) throw std::invalid_argument("build_ladder: theta rule has no index fn");

    const std::size_t scenarios = m.scenarios();
    const std::size_t n = m.grid().steps();
    std::vector<std::uint32_t> theta_idx(scenarios * L);
    std::vector<std::uint32_t> tau(scenarios * L);

    struct Empty {};
    run_chunked<Empty>(scenarios, threads, [&](Empty&, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const Path path = m.batch().path(p);
            for (std::size_t l = 0; l < L; ++l) {
                const std::size_t raw = theta.index(path, l, levels[l]);
                if (raw > n) {
                    throw std::invalid_argument("build_ladder: theta index beyond grid");
                }
                theta_idx[p * L + l] = static_cast<std::uint32_t>(raw);
                if (l > 0 && theta_idx[p * L + l] < theta_idx[p * L + l - 1]) {
                    throw std::invalid_argument(
                        "build_ladder: theta rule '" + theta.id +
                        "' is not non-decreasing across levels");
                }
                const std::uint32_t hit = scenario_hit(m, p, levels[l]);
                tau[p * L + l] =
                    std::min({theta_idx[p * L + l], hit, static_cast<std::uint32_t>(n)});
            }
        }
    });

    // a localizing sequence must release eventually; a rule pinned at zero
    // even at the top level cannot tend to infinity
    bool any_positive = false;
    for (std::size_t p = 0; p < scenarios && !any_positive; ++p) {
        if (theta_idx[p * L + (L - 1)] > 0) any_positive = true;
    }
    if (!any_positive) {
        throw std::invalid_argument("build_ladder: theta rule '" + theta.id +
                                    "' is stuck at zero and cannot tend to infinity");
    }

    return StoppingLadder(std::vector<double>(levels.begin(), levels.end()), scenarios, n,
                          std::move(theta_idx), std::move(tau));
}

ProcessOnGrid stop_process(const ProcessOnGrid& m, std::span<const std::uint32_t> tau) {
    if (tau.size() != m.scenarios()) {
        throw std::invalid_argument("stop_process: one stopping index per scenario required");
    }
    const std::size_t points = m.points();
    const std::size_t n = points - 1;
    std::vector<double> values(m.scenarios() * points);
    std::vector<std::uint32_t> marks(m.scenarios());
    for (std::size_t p = 0; p < m.scenarios(); ++p) {
        if (tau[p] > n) throw std::out_of_range("stop_process: stopping index beyond grid");
        const auto src = m.scenario_values(p);
        double* dst = values.data() + p * points;
        const std::size_t stop = tau[p];
        for (std::size_t k = 0; k <= stop; ++k) dst[k] = src[k];
        for (std::size_t k = stop + 1; k < points; ++k) dst[k] = src[stop];
        // values past the failure index are never referenced once tau <= mark
        marks[p] = (tau[p] < m.singular_at(p)) ? kNoSingular : m.singular_at(p);
    }
    return ProcessOnGrid(m.batch(), std::move(values), std::move(marks));
}

IntegrandOnGrid truncate_integrand(const IntegrandOnGrid& phi,
                                   std::span<const std::uint32_t> tau) {
    if (tau.size() != phi.scenarios()) {
        throw std::invalid_argument("truncate_integrand: one stopping index per scenario required");
    }
    const std::size_t n = phi.steps();
    const std::size_t d = phi.dim();
    std::vector<double> rows(phi.scenarios() * n * d, 0.0);
    std::vector<std::uint32_t> marks(phi.scenarios());
    for (std::size_t p = 0; p < phi.scenarios(); ++p) {
        if (tau[p] > n) {
            throw std::out_of_range("truncate_integrand: stopping index beyond grid");
        }
        const auto src = phi.scenario_rows(p);
        double* dst = rows.data() + p * n * d;
        // keep [t_k, t_{k+1}) exactly when t_{k+1} <= t_tau
        const std::size_t kept = tau[p];
        std::memcpy(dst, src.data(), kept * d * sizeof(double));
        marks[p] = (tau[p] <= phi.singular_at(p)) ? kNoSingular : phi.singular_at(p);
    }
    return IntegrandOnGrid(phi.batch(), std::move(rows), std::move(marks));
}

std::vector<double> stabilization_check(const IntegrandOnGrid& phi,
                                        const StoppingLadder& ladder) {
    if (ladder.scenarios() != phi.scenarios() || ladder.steps() != phi.steps()) {
        throw std::invalid_argument("stabilization_check: ladder does not match integrand");
    }
    const std::size_t n = phi.steps();
    const std::size_t d = phi.dim();
    const std::size_t L = ladder.level_count();
    std::vector<std::size_t> agree(L, 0);
    for (std::size_t p = 0; p < phi.scenarios(); ++p) {
        const auto rows = phi.scenario_rows(p);
        for (std::size_t k = 0; k < n; ++k) {
            const bool zero = zero_row(rows.data() + k * d, d);
            for (std::size_t l = 0; l < L; ++l) {
                if (k + 1 <= ladder.tau(p, l) || zero) ++agree[l];
            }
        }
    }
    std::vector<double> fractions(L);
    const double total = static_cast<double>(phi.scenarios() * n);
    for (std::size_t l = 0; l < L; ++l) fractions[l] = static_cast<double>(agree[l]) / total;
    return fractions;
}

ThetaIndependenceResult theta_independence_check(const IntegrandOnGrid& phi,
                                                 const ProcessOnGrid& m,
                                                 std::span<const double> levels,
                                                 const ThetaRule& theta_a,
                                                 const ThetaRule& theta_b,
                                                 std::size_t threads) {
    const StoppingLadder ladder_a = build_ladder(m, levels, theta_a, threads);
    const StoppingLadder ladder_b = build_ladder(m, levels, theta_b, threads);

    // materialize the per-level truncations so the comparison exercises the
    // actual stored rows, not the counting shortcut
    std::vector<IntegrandOnGrid> trunc_a;
    std::vector<IntegrandOnGrid> trunc_b;
    trunc_a.reserve(levels.size());
    trunc_b.reserve(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        trunc_a.push_back(truncate_integrand(phi, ladder_a.tau_column(l)));
        trunc_b.push_back(truncate_integrand(phi, ladder_b.tau_column(l)));
    }

    ThetaIndependenceResult result;
    const std::size_t n = phi.steps();
    const std::size_t d = phi.dim();
    for (std::size_t p = 0; p < phi.scenarios(); ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint16_t la = ladder_a.stabilization_level(p, k);
            const std::uint16_t lb = ladder_b.stabilization_level(p, k);
            if (la == kNotStabilized || lb == kNotStabilized) {
                ++result.uncovered;
                continue;
            }
            ++result.compared;
            const auto row_a = trunc_a[la].row(p, k);
            const auto row_b = trunc_b[lb].row(p, k);
            if (std::memcmp(row_a.data(), row_b.data(), d * sizeof(double)) != 0) {
                ++result.mismatches;
            }
        }
    }
    result.pass = result.compared > 0 && result.mismatches == 0;
    return result;
}

}  // namespace fitolab
