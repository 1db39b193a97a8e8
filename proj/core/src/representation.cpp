#include "fitolab/representation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fitolab/derivatives.hpp"
#include "fitolab/errors.hpp"
#include "fitolab/parallel.hpp"
#include "fitolab/statistics.hpp"

namespace fitolab {

namespace {

void require_representable(const FunctionalSpec& f) {
    if (!f.claims.martingale && !f.claims.strict_local_martingale) {
        throw std::invalid_argument("representation: functional '" + f.id +
                                    "' claims neither martingale nor strict local martingale");
    }
}

}  // namespace

ResidualReport representation_residual(const FunctionalSpec& f, const WienerBatch& batch,
                                       const FdOptions& opt, std::size_t threads) {
    require_representable(f);
    const std::size_t points = batch.grid().size();
    const std::size_t n = points - 1;
    const std::size_t d = batch.dim();

    struct ChunkState {
        std::vector<MomentAccumulator> per_t;
        MomentAccumulator terminal;
        std::size_t singular = 0;
    };

    // per-scenario sups recorded by index: no write races, deterministic order
    std::vector<double> sups(batch.scenarios(),
                             std::numeric_limits<double>::quiet_NaN());

    auto states = run_chunked<ChunkState>(
        batch.scenarios(), threads, [&](ChunkState& state, std::size_t begin, std::size_t end) {
            if (state.per_t.empty()) state.per_t.resize(points);
            std::vector<double> grad(d);
            std::vector<double> residual(points);
            for (std::size_t p = begin; p < end; ++p) {
                const Path path = batch.path(p);
                BumpEvaluator ev(f, path.view());
                // evaluate the full scenario before committing anything, so a
                // singular failure excludes the scenario from every statistic
                try {
                    const double f0 = ev.plain(0, batch.grid()[0]);
                    double acc = 0.0;
                    residual[0] = 0.0;
                    for (std::size_t k = 0; k < n; ++k) {
                        ev.vertical(k, opt, grad);
                        const double* dw = path.increments().data() + k * d;
                        double step = 0.0;
                        for (std::size_t i = 0; i < d; ++i) step += grad[i] * dw[i];
                        acc += step;
                        residual[k + 1] = (ev.plain(k + 1, batch.grid()[k + 1]) - f0) - acc;
                    }
                } catch (const NumericError&) {
                    ++state.singular;
                    continue;
                }
                double sup = 0.0;
                for (std::size_t k = 0; k < points; ++k) {
                    state.per_t[k].add(residual[k]);
                    sup = std::max(sup, std::abs(residual[k]));
                }
                state.terminal.add(residual[n]);
                sups[p] = sup;
            }
        });

    ChunkState total;
    total.per_t.resize(points);
    for (const auto& s : states) {
        if (s.per_t.empty()) continue;
        for (std::size_t k = 0; k < points; ++k) total.per_t[k].merge(s.per_t[k]);
        total.terminal.merge(s.terminal);
        total.singular += s.singular;
    }

    ResidualReport report;
    report.per_t_rms.resize(points);
    report.per_t_rms_se.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
        report.per_t_rms[k] = total.per_t[k].rms();
        report.per_t_rms_se[k] = total.per_t[k].rms_standard_error();
    }
    report.terminal_rms = total.terminal.rms();
    report.terminal_rms_se = total.terminal.rms_standard_error();
    report.terminal_mean = total.terminal.mean();
    report.terminal_mean_se = total.terminal.standard_error();
    report.scenarios_used = total.terminal.n;
    report.singular_count = total.singular;

    std::vector<double> clean;
    clean.reserve(batch.scenarios());
    for (double s : sups) {
        if (!std::isnan(s)) clean.push_back(s);
    }
    std::sort(clean.begin(), clean.end());
    if (!clean.empty()) {
        report.sup_p50 = quantile_sorted(clean, 0.50);
        report.sup_p50_se = quantile_se_sorted(clean, 0.50);
        report.sup_p90 = quantile_sorted(clean, 0.90);
        report.sup_p90_se = quantile_se_sorted(clean, 0.90);
        report.sup_p99 = quantile_sorted(clean, 0.99);
        report.sup_p99_se = quantile_se_sorted(clean, 0.99);
    }
    return report;
}

PairingStats pairing_check(const FunctionalSpec& y, const FunctionalSpec& z,
                           const WienerBatch& batch, const FdOptions& opt,
                           std::size_t threads) {
    if (!y.claims.martingale || !z.claims.martingale) {
        throw std::invalid_argument("pairing_check: both functionals must claim the martingale "
                                    "property (values are centered at F(0, .))");
    }
    const std::size_t n = batch.grid().steps();
    const std::size_t d = batch.dim();

    struct ChunkState {
        MomentAccumulator lhs, rhs, diff;
        std::size_t singular = 0;
    };

    auto states = run_chunked<ChunkState>(
        batch.scenarios(), threads, [&](ChunkState& state, std::size_t begin, std::size_t end) {
            std::vector<double> grad_y(d), grad_z(d);
            for (std::size_t p = begin; p < end; ++p) {
                const Path path = batch.path(p);
                BumpEvaluator ev_y(y, path.view());
                BumpEvaluator ev_z(z, path.view());
                try {
                    double quad = 0.0;
                    for (std::size_t k = 0; k < n; ++k) {
                        ev_y.vertical(k, opt, grad_y);
                        ev_z.vertical(k, opt, grad_z);
                        double dot = 0.0;
                        for (std::size_t i = 0; i < d; ++i) dot += grad_y[i] * grad_z[i];
                        quad += dot * batch.grid().dt(k);
                    }
                    const double yt = ev_y.plain(n, batch.grid()[n]) - ev_y.plain(0, 0.0);
                    const double zt = ev_z.plain(n, batch.grid()[n]) - ev_z.plain(0, 0.0);
                    const double lhs = yt * zt;
                    state.lhs.add(lhs);
                    state.rhs.add(quad);
                    state.diff.add(lhs - quad);
                } catch (const NumericError&) {
                    ++state.singular;
                }
            }
        });

    ChunkState total;
    for (const auto& s : states) {
        total.lhs.merge(s.lhs);
        total.rhs.merge(s.rhs);
        total.diff.merge(s.diff);
        total.singular += s.singular;
    }

    PairingStats stats;
    stats.lhs_mean = total.lhs.mean();
    stats.lhs_se = total.lhs.standard_error();
    stats.rhs_mean = total.rhs.mean();
    stats.rhs_se = total.rhs.standard_error();
    stats.diff_mean = total.diff.mean();
    stats.diff_se = total.diff.standard_error();
    stats.scenarios_used = total.lhs.n;
    stats.singular_count = total.singular;
    return stats;
}

StrictLocalityStats strict_locality_diagnostic(const FunctionalSpec& f, const WienerBatch& batch,
                                               std::span<const double> levels,
                                               std::size_t threads) {
    require_representable(f);
    if (levels.empty()) {
        throw std::invalid_argument("strict_locality_diagnostic: need at least one level");
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (!(levels[l] > 0.0) || (l > 0 && !(levels[l] > levels[l - 1]))) {
            throw std::invalid_argument(
                "strict_locality_diagnostic: levels must be positive and increasing");
        }
    }
    const std::size_t points = batch.grid().size();
    const std::size_t n = points - 1;
    const std::size_t L = levels.size();

    struct ChunkState {
        MomentAccumulator terminal;
        std::vector<MomentAccumulator> stopped;
        std::vector<MomentAccumulator> tau_fraction;
        std::vector<std::size_t> stopped_excluded;
        std::size_t singular = 0;
    };

    auto states = run_chunked<ChunkState>(
        batch.scenarios(), threads, [&](ChunkState& state, std::size_t begin, std::size_t end) {
            if (state.stopped.empty()) {
                state.stopped.resize(L);
                state.tau_fraction.resize(L);
                state.stopped_excluded.assign(L, 0);
            }
            std::vector<double> m(points);
            for (std::size_t p = begin; p < end; ++p) {
                const Path path = batch.path(p);
                BumpEvaluator ev(f, path.view());
                std::size_t fail_at = points;  // first index whose value is unavailable
                for (std::size_t k = 0; k < points; ++k) {
                    try {
                        m[k] = ev.plain(k, batch.grid()[k]);
                    } catch (const NumericError&) {
                        fail_at = k;
                        break;
                    }
                }
                if (fail_at == points) {
                    state.terminal.add(m[n]);
                } else {
                    ++state.singular;
                }
                const std::size_t cap = std::min(fail_at, n);
                for (std::size_t l = 0; l < L; ++l) {
                    std::size_t tau = cap;
                    for (std::size_t k = 0; k < cap; ++k) {
                        if (std::abs(m[k]) >= levels[l]) {
                            tau = k;
                            break;
                        }
                    }
                    state.tau_fraction[l].add(static_cast<double>(tau) /
                                              static_cast<double>(n));
                    if (tau < fail_at) {
                        state.stopped[l].add(m[tau]);
                    } else {
                        // the level was never crossed before the failure: the
                        // stopped value itself sits at the unavailable index
                        ++state.stopped_excluded[l];
                    }
                }
            }
        });

    ChunkState total;
    total.stopped.resize(L);
    total.tau_fraction.resize(L);
    total.stopped_excluded.assign(L, 0);
    for (const auto& s : states) {
        if (s.stopped.empty()) continue;
        total.terminal.merge(s.terminal);
        total.singular += s.singular;
        for (std::size_t l = 0; l < L; ++l) {
            total.stopped[l].merge(s.stopped[l]);
            total.tau_fraction[l].merge(s.tau_fraction[l]);
            total.stopped_excluded[l] += s.stopped_excluded[l];
        }
    }

    StrictLocalityStats stats;
    stats.terminal_mean = total.terminal.mean();
    stats.terminal_se = total.terminal.standard_error();
    stats.scenarios_used = total.terminal.n;
    stats.singular_count = total.singular;
    stats.levels.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        stats.levels[l].level = levels[l];
        stats.levels[l].stopped_mean = total.stopped[l].mean();
        stats.levels[l].stopped_se = total.stopped[l].standard_error();
        stats.levels[l].tau_mean = total.tau_fraction[l].mean();
        stats.levels[l].stopped_excluded = total.stopped_excluded[l];
    }
    return stats;
}

double inverse_bessel_expected_terminal(double anchor_norm, double t) {
    if (!(anchor_norm > 0.0) || !(t > 0.0)) {
        throw std::invalid_argument("inverse_bessel_expected_terminal: need r0 > 0 and t > 0");
    }
    return std::erf(anchor_norm / std::sqrt(2.0 * t)) / anchor_norm;
}

}  // namespace fitolab
