#include "fitolab/process.hpp"

#include <cmath>
#include <stdexcept>

#include "fitolab/derivatives.hpp"
#include "fitolab/errors.hpp"
#include "fitolab/parallel.hpp"
#include "fitolab/quadrature.hpp"

namespace fitolab {

namespace {

std::size_t count_marked(const std::vector<std::uint32_t>& marks) {
    std::size_t count = 0;
    for (auto m : marks) {
        if (m != kNoSingular) ++count;
    }
    return count;
}

}  // namespace

ProcessOnGrid::ProcessOnGrid(WienerBatch batch, std::vector<double> values,
                             std::vector<std::uint32_t> singular_at)
    : batch_(std::move(batch)), values_(std::move(values)), singular_(std::move(singular_at)) {
    if (values_.size() != batch_.scenarios() * batch_.grid().size() ||
        singular_.size() != batch_.scenarios()) {
        throw std::invalid_argument("ProcessOnGrid: shape mismatch");
    }
}

std::size_t ProcessOnGrid::singular_count() const { return count_marked(singular_); }

IntegrandOnGrid::IntegrandOnGrid(WienerBatch batch, std::vector<double> rows,
                                 std::vector<std::uint32_t> singular_at)
    : batch_(std::move(batch)), rows_(std::move(rows)), singular_(std::move(singular_at)) {
    if (rows_.size() != batch_.scenarios() * batch_.grid().steps() * batch_.dim() ||
        singular_.size() != batch_.scenarios()) {
        throw std::invalid_argument("IntegrandOnGrid: shape mismatch");
    }
}

std::size_t IntegrandOnGrid::singular_count() const { return count_marked(singular_); }

ProcessOnGrid eval_process(const FunctionalSpec& f, const WienerBatch& batch,
                           std::size_t threads) {
    const std::size_t points = batch.grid().size();
    std::vector<double> values(batch.scenarios() * points);
    std::vector<std::uint32_t> marks(batch.scenarios(), kNoSingular);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    struct Empty {};
    run_chunked<Empty>(batch.scenarios(), threads, [&](Empty&, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const Path path = batch.path(p);
            BumpEvaluator ev(f, path.view());
            double* out = values.data() + p * points;
            for (std::size_t k = 0; k < points; ++k) {
                try {
                    out[k] = ev.plain(k, batch.grid()[k]);
                } catch (const NumericError&) {
                    marks[p] = static_cast<std::uint32_t>(k);
                    for (std::size_t j = k; j < points; ++j) out[j] = nan;
                    break;
                }
            }
        }
    });
    return ProcessOnGrid(batch, std::move(values), std::move(marks));
}

IntegrandOnGrid integrand_from_functional(const FunctionalSpec& f, const WienerBatch& batch,
                                          const FdOptions& opt, std::size_t threads) {
    const std::size_t steps = batch.grid().steps();
    const std::size_t d = batch.dim();
    if (f.dim != d) {
        throw std::invalid_argument("integrand_from_functional: dimension mismatch");
    }
    std::vector<double> rows(batch.scenarios() * steps * d);
    std::vector<std::uint32_t> marks(batch.scenarios(), kNoSingular);

    struct Empty {};
    run_chunked<Empty>(batch.scenarios(), threads, [&](Empty&, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const Path path = batch.path(p);
            BumpEvaluator ev(f, path.view());
            double* out = rows.data() + p * steps * d;
            for (std::size_t k = 0; k < steps; ++k) {
                try {
                    ev.vertical(k, opt, {out + k * d, d});
                } catch (const NumericError&) {
                    marks[p] = static_cast<std::uint32_t>(k);
                    for (std::size_t j = k * d; j < steps * d; ++j) out[j] = 0.0;
                    break;
                }
            }
        }
    });
    return IntegrandOnGrid(batch, std::move(rows), std::move(marks));
}

ProcessOnGrid reconstruct(double initial_value, const IntegrandOnGrid& phi,
                          std::size_t threads) {
    const WienerBatch& batch = phi.batch();
    const std::size_t points = batch.grid().size();
    std::vector<double> values(batch.scenarios() * points);
    std::vector<std::uint32_t> marks(batch.scenarios());

    struct Empty {};
    run_chunked<Empty>(batch.scenarios(), threads, [&](Empty&, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const Path path = batch.path(p);
            marks[p] = phi.singular_at(p);
            ito_partial_sums(initial_value, phi.scenario_rows(p), path,
                             {values.data() + p * points, points});
        }
    });
    return ProcessOnGrid(batch, std::move(values), std::move(marks));
}

}  // namespace fitolab
