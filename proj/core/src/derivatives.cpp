#include "fitolab/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fitolab/errors.hpp"
#include "fitolab/parallel.hpp"
#include "fitolab/rng.hpp"
#include "fitolab/statistics.hpp"

namespace fitolab {

double default_bump(double coordinate_value) {
    const double target = 1e-5 * (1.0 + std::abs(coordinate_value));
    return std::exp2(std::ceil(std::log2(target)));
}

BumpEvaluator::BumpEvaluator(const FunctionalSpec& f, const PathView& base)
    : f_(&f), base_(base),
      scratch_(base.data(), base.data() + base.grid().size() * base.dim()) {
    if (f.dim != base.dim()) {
        throw std::invalid_argument("functional '" + f.id + "' expects dimension " +
                                    std::to_string(f.dim) + ", path has " +
                                    std::to_string(base.dim()));
    }
    if (!f.eval) {
        throw std::invalid_argument("functional '" + f.id + "' has no evaluator");
    }
}

double BumpEvaluator::plain(std::size_t k, double t) {
    const double v = f_->eval(PathView(base_.grid(), base_.dim(), scratch_.data()), k, t);
    if (!std::isfinite(v)) {
        throw NumericError("functional '" + f_->id + "' returned non-finite value at step " +
                           std::to_string(k));
    }
    return v;
}

double BumpEvaluator::at_coordinate(std::size_t k, std::size_t coordinate, double x, double t) {
    double& cell = scratch_[k * base_.dim() + coordinate];
    const double saved = cell;
    cell = x;
    double v;
    try {
        v = f_->eval(PathView(base_.grid(), base_.dim(), scratch_.data()), k, t);
    } catch (...) {
        cell = saved;
        throw;
    }
    cell = saved;
    if (!std::isfinite(v)) {
        throw NumericError("functional '" + f_->id + "' returned non-finite value at step " +
                           std::to_string(k));
    }
    return v;
}

double BumpEvaluator::bumped(std::size_t k, std::size_t coordinate, double h, double t) {
    return at_coordinate(k, coordinate, scratch_[k * base_.dim() + coordinate] + h, t);
}

void BumpEvaluator::vertical(std::size_t k, const FdOptions& opt, std::span<double> out) {
    const std::size_t d = base_.dim();
    const double t = base_.grid()[k];
    // divide by the realized spread of the bumped coordinates, not the
    // nominal 2h: v + h may round near binade boundaries, and the divided
    // difference of the points actually evaluated is what keeps the
    // derivative of the identity exactly one
    if (opt.scheme == FdScheme::Central) {
        for (std::size_t i = 0; i < d; ++i) {
            const double v = base_(k, i);
            const double h = resolve_bump(opt, v);
            const double up_x = v + h;
            const double down_x = v - h;
            const double up = at_coordinate(k, i, up_x, t);
            const double down = at_coordinate(k, i, down_x, t);
            out[i] = (up - down) / (up_x - down_x);
        }
    } else {
        const double at = plain(k, t);
        for (std::size_t i = 0; i < d; ++i) {
            const double v = base_(k, i);
            const double h = resolve_bump(opt, v);
            const double up_x = v + h;
            out[i] = (at_coordinate(k, i, up_x, t) - at) / (up_x - v);
        }
    }
}

void BumpEvaluator::second_vertical(std::size_t k, const FdOptions& opt, std::span<double> out) {
    const std::size_t d = base_.dim();
    const double t = base_.grid()[k];
    const double at = plain(k, t);
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = base_(k, i);
        const double hi = resolve_bump(opt, vi);
        const double up_xi = vi + hi;
        const double down_xi = vi - hi;
        // diagonal: twice the second divided difference over the realized
        // abscissae; one-sided slopes of an affine functional agree bitwise,
        // so its second derivative is exactly zero
        {
            const double up = at_coordinate(k, i, up_xi, t);
            const double down = at_coordinate(k, i, down_xi, t);
            const double slope_up = (up - at) / (up_xi - vi);
            const double slope_down = (at - down) / (vi - down_xi);
            out[i * d + i] = (slope_up - slope_down) / (0.5 * (up_xi - down_xi));
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (j == i) continue;
            const double vj = base_(k, j);
            const double hj = resolve_bump(opt, vj);
            const double up_xj = vj + hj;
            const double down_xj = vj - hj;
            double& cell_i = scratch_[k * d + i];
            const double saved_i = cell_i;
            cell_i = up_xi;
            try {
                const double pp = at_coordinate(k, j, up_xj, t);
                const double pm = at_coordinate(k, j, down_xj, t);
                cell_i = down_xi;
                const double mp = at_coordinate(k, j, up_xj, t);
                const double mm = at_coordinate(k, j, down_xj, t);
                cell_i = saved_i;
                out[i * d + j] =
                    ((pp - pm) - (mp - mm)) / ((up_xi - down_xi) * (up_xj - down_xj));
            } catch (...) {
                cell_i = saved_i;
                throw;
            }
        }
    }
}

namespace {

Path owned_copy(const PathView& view) {
    std::vector<double> values(view.data(), view.data() + view.grid().size() * view.dim());
    auto grid = std::make_shared<const TimeGrid>(view.grid());
    return Path::from_values(std::move(grid), view.dim(), std::move(values));
}

double checked_eval(const FunctionalSpec& f, const Path& p, std::size_t k, double t) {
    const double v = f.eval(p.view(), k, t);
    if (!std::isfinite(v)) {
        throw NumericError("functional '" + f.id + "' returned non-finite value at step " +
                           std::to_string(k));
    }
    return v;
}

}  // namespace

// The free operators materialize the stopped and bumped paths literally, so
// their semantics hold for any functional. BumpEvaluator is the equivalent
// fast path for functionals that honor the read-rows-<=-k contract.

std::vector<double> vertical_derivative(const FunctionalSpec& f, const PathView& p,
                                        std::size_t k, const FdOptions& opt) {
    if (k >= p.grid().size()) {
        throw std::out_of_range("vertical_derivative: grid index out of range");
    }
    if (f.dim != p.dim()) {
        throw std::invalid_argument("vertical_derivative: dimension mismatch");
    }
    const Path stopped = stop_path(owned_copy(p), k);
    const double t = stopped.grid()[k];
    std::vector<double> out(p.dim());
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double v = p(k, i);
        const double h = resolve_bump(opt, v);
        const double up_x = v + h;    // the realized abscissae: bump_path adds h
        const double down_x = v - h;  // with exactly these roundings
        const double up = checked_eval(f, bump_path(stopped, {k, i, h}), k, t);
        if (opt.scheme == FdScheme::Central) {
            const double down = checked_eval(f, bump_path(stopped, {k, i, -h}), k, t);
            out[i] = (up - down) / (up_x - down_x);
        } else {
            out[i] = (up - checked_eval(f, stopped, k, t)) / (up_x - v);
        }
    }
    return out;
}

double horizontal_derivative(const FunctionalSpec& f, const PathView& p, std::size_t k,
                             const FdOptions& opt) {
    const double t = p.grid().at(k);
    const double horizon = p.grid().horizon();
    if (!(t < horizon)) {
        throw std::out_of_range("horizontal_derivative: no room for a forward step at k = N");
    }
    if (!f.supports_offgrid_time) {
        throw std::invalid_argument("functional '" + f.id +
                                    "' does not support off-grid time evaluation");
    }
    const double h = std::min(opt.time_step, horizon - t);
    const Path stopped = stop_path(owned_copy(p), k);
    return (checked_eval(f, stopped, k, t + h) - checked_eval(f, stopped, k, t)) / h;
}

std::vector<double> second_vertical_derivative(const FunctionalSpec& f, const PathView& p,
                                               std::size_t k, const FdOptions& opt) {
    if (k >= p.grid().size()) {
        throw std::out_of_range("second_vertical_derivative: grid index out of range");
    }
    if (f.dim != p.dim()) {
        throw std::invalid_argument("second_vertical_derivative: dimension mismatch");
    }
    const std::size_t d = p.dim();
    const Path stopped = stop_path(owned_copy(p), k);
    const double t = stopped.grid()[k];
    const double at = checked_eval(f, stopped, k, t);
    std::vector<double> out(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = p(k, i);
        const double hi = resolve_bump(opt, vi);
        const double up_xi = vi + hi;
        const double down_xi = vi - hi;
        {
            const double up = checked_eval(f, bump_path(stopped, {k, i, hi}), k, t);
            const double down = checked_eval(f, bump_path(stopped, {k, i, -hi}), k, t);
            const double slope_up = (up - at) / (up_xi - vi);
            const double slope_down = (at - down) / (vi - down_xi);
            out[i * d + i] = (slope_up - slope_down) / (0.5 * (up_xi - down_xi));
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (j == i) continue;
            const double vj = p(k, j);
            const double hj = resolve_bump(opt, vj);
            const double up_xj = vj + hj;
            const double down_xj = vj - hj;
            const Path up_i = bump_path(stopped, {k, i, hi});
            const Path down_i = bump_path(stopped, {k, i, -hi});
            const double pp = checked_eval(f, bump_path(up_i, {k, j, hj}), k, t);
            const double pm = checked_eval(f, bump_path(up_i, {k, j, -hj}), k, t);
            const double mp = checked_eval(f, bump_path(down_i, {k, j, hj}), k, t);
            const double mm = checked_eval(f, bump_path(down_i, {k, j, -hj}), k, t);
            out[i * d + j] =
                ((pp - pm) - (mp - mm)) / ((up_xi - down_xi) * (up_xj - down_xj));
        }
    }
    return out;
}

DerivativeSample sample_derivatives(const FunctionalSpec& f, const PathView& p, std::size_t k,
                                    const FdOptions& opt, bool with_second) {
    DerivativeSample s;
    s.scheme = opt.scheme;
    s.bump_used = resolve_bump(opt, p(k, 0));
    s.vertical = vertical_derivative(f, p, k, opt);
    s.horizontal = horizontal_derivative(f, p, k, opt);
    if (with_second) {
        s.vertical2 = second_vertical_derivative(f, p, k, opt);
    }
    return s;
}

std::vector<double> ito_formula_residual(const FunctionalSpec& f, const Path& w,
                                         const ItoResidualOptions& opt) {
    if (!f.claims.c12b) {
        throw std::invalid_argument("ito_formula_residual: functional '" + f.id +
                                    "' does not claim the required regularity");
    }
    if (opt.use_oracles && !(f.oracle_horizontal && f.oracle_vertical && f.oracle_vertical2)) {
        throw std::invalid_argument("ito_formula_residual: oracles requested but functional '" +
                                    f.id + "' does not provide them");
    }
    const std::size_t n = w.steps();
    const std::size_t d = w.dim();
    const TimeGrid& grid = w.grid();
    const double horizon = grid.horizon();

    BumpEvaluator ev(f, w.view());
    std::vector<double> grad(d);
    std::vector<double> hess(d * d);
    std::vector<double> residual(n + 1, 0.0);

    const double f0 = ev.plain(0, grid[0]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = grid[j];
        const double dt = grid.dt(j);

        double df;
        if (opt.use_oracles) {
            df = f.oracle_horizontal(w.view(), j);
            f.oracle_vertical(w.view(), j, grad);
            f.oracle_vertical2(w.view(), j, hess);
        } else {
            const double ht = std::min(opt.fd.time_step, horizon - t);
            df = (ev.plain(j, t + ht) - ev.plain(j, t)) / ht;
            ev.vertical(j, opt.fd, grad);
            ev.second_vertical(j, opt.fd, hess);
        }

        const double* dw = w.increments().data() + j * d;
        double vertical_term = 0.0;
        for (std::size_t i = 0; i < d; ++i) vertical_term += grad[i] * dw[i];

        double bracket = 0.0;
        if (opt.bracket == BracketConvention::ExpectedDt) {
            double trace = 0.0;
            for (std::size_t i = 0; i < d; ++i) trace += hess[i * d + i];
            bracket = 0.5 * trace * dt;
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t l = 0; l < d; ++l) {
                    bracket += 0.5 * hess[i * d + l] * dw[i] * dw[l];
                }
            }
        }

        acc += df * dt + vertical_term + bracket;
        residual[j + 1] = (ev.plain(j + 1, grid[j + 1]) - f0) - acc;
    }
    return residual;
}

double ito_drift_sum(const FunctionalSpec& f, const Path& w, const FdOptions& opt) {
    const std::size_t n = w.steps();
    const std::size_t d = w.dim();
    const TimeGrid& grid = w.grid();
    const double horizon = grid.horizon();
    BumpEvaluator ev(f, w.view());
    std::vector<double> hess(d * d);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = grid[j];
        const double ht = std::min(opt.time_step, horizon - t);
        const double df = (ev.plain(j, t + ht) - ev.plain(j, t)) / ht;
        ev.second_vertical(j, opt, hess);
        double trace = 0.0;
        for (std::size_t i = 0; i < d; ++i) trace += hess[i * d + i];
        acc += (df + 0.5 * trace) * grid.dt(j);
    }
    return std::abs(acc);
}

ItoEnsembleReport ito_formula_check(const FunctionalSpec& f, const WienerBatch& batch,
                                    const ItoResidualOptions& opt, std::size_t threads) {
    struct ChunkState {
        MomentAccumulator terminal;
        MomentAccumulator drift;
        double max_abs = 0.0;
        std::size_t singular = 0;
    };
    auto states = run_chunked<ChunkState>(
        batch.scenarios(), threads, [&](ChunkState& state, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const Path path = batch.path(p);
                try {
                    const std::vector<double> residual = ito_formula_residual(f, path, opt);
                    state.terminal.add(residual.back());
                    state.max_abs = std::max(state.max_abs, std::abs(residual.back()));
                    state.drift.add(ito_drift_sum(f, path, opt.fd));
                } catch (const NumericError&) {
                    ++state.singular;
                }
            }
        });
    ChunkState total;
    for (const auto& s : states) {
        total.terminal.merge(s.terminal);
        total.drift.merge(s.drift);
        total.max_abs = std::max(total.max_abs, s.max_abs);
        total.singular += s.singular;
    }
    ItoEnsembleReport report;
    report.terminal_rms = total.terminal.rms();
    report.terminal_rms_se = total.terminal.rms_standard_error();
    report.terminal_max_abs = total.max_abs;
    report.drift_abs_mean = total.drift.mean();
    report.scenarios_used = total.terminal.n;
    report.singular_count = total.singular;
    return report;
}

NonAnticipativityReport check_non_anticipativity(const FunctionalSpec& f, const Path& p,
                                                 std::size_t trials, std::uint64_t seed) {
    if (trials < 1) {
        throw std::invalid_argument("check_non_anticipativity: trials must be >= 1");
    }
    NonAnticipativityReport report;
    report.trials = trials;

    const std::size_t n = p.steps();
    const std::size_t d = p.dim();
    Philox4x64 picker(seed, 0xA11CE);
    GaussianStream noise(seed, 0xB0B);

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto words = picker.block(trial);
        const std::size_t k = static_cast<std::size_t>(words[0] % n);  // k < N so something follows
        std::vector<double> values(p.values());
        for (std::size_t j = k + 1; j < n + 1; ++j) {
            for (std::size_t i = 0; i < d; ++i) {
                values[j * d + i] += noise.next();
            }
        }
        const Path perturbed = Path::from_values(p.grid_ptr(), d, std::move(values));
        const double base_value = f.eval(p.view(), k, p.grid()[k]);
        const double perturbed_value = f.eval(perturbed.view(), k, p.grid()[k]);
        if (std::memcmp(&base_value, &perturbed_value, sizeof(double)) != 0) {
            report.pass = false;
            report.witness = NonAnticipativityWitness{k, base_value, perturbed_value};
            return report;
        }
    }
    return report;
}

}  // namespace fitolab
