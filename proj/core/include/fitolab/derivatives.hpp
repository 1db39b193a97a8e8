#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fitolab/functional.hpp"
#include "fitolab/path.hpp"
#include "fitolab/wiener.hpp"

namespace fitolab {

/// Evaluates F on stop-and-bump variants of one base path in O(1) copied
/// data per bump: the workspace keeps a single value buffer equal to the
/// base path and flips one coordinate of row k in place.
///
/// This is bitwise-identical to evaluating on stop_path + bump_path copies
/// for any functional that honors the read-rows-<=-k contract (rows past k
/// differ from a frozen path, but a non-anticipative implementation never
/// reads them). The engines below and all ensemble sweeps go through this
/// class; check_non_anticipativity is the guard for user functionals.
class BumpEvaluator {
public:
    BumpEvaluator(const FunctionalSpec& f, const PathView& base);

    double plain(std::size_t k, double t);
    double bumped(std::size_t k, std::size_t coordinate, double h, double t);
    /// Evaluate with coordinate (k, i) set to exactly x (not v + h): finite
    /// differences divide by realized spreads, so the evaluated abscissae
    /// must be bit-exact.
    double at_coordinate(std::size_t k, std::size_t coordinate, double x, double t);

    /// Finite-difference vertical gradient at (t_k, omega_{t_k}), written to out (size d).
    void vertical(std::size_t k, const FdOptions& opt, std::span<double> out);

    /// d x d central second-difference stencil, written row-major to out.
    void second_vertical(std::size_t k, const FdOptions& opt, std::span<double> out);

    const PathView& base() const { return base_; }

private:
    const FunctionalSpec* f_;
    PathView base_;
    std::vector<double> scratch_;  // value copy of base, row k transiently bumped
};

/// grad_omega F(t_k, omega): finite-difference estimate per coordinate,
/// evaluated on the path stopped at k (central scheme bumps +-h).
std::vector<double> vertical_derivative(const FunctionalSpec& f, const PathView& p,
                                        std::size_t k, const FdOptions& opt = {});

/// D F(t_k, omega): one-sided forward difference in time with the path
/// frozen at t_k. Requires t_k + h <= T; throws std::out_of_range at k = N
/// when there is no room for the forward step.
double horizontal_derivative(const FunctionalSpec& f, const PathView& p, std::size_t k,
                             const FdOptions& opt = {});

/// Central second-difference estimate of the vertical Hessian (row-major d x d).
std::vector<double> second_vertical_derivative(const FunctionalSpec& f, const PathView& p,
                                               std::size_t k, const FdOptions& opt = {});

DerivativeSample sample_derivatives(const FunctionalSpec& f, const PathView& p, std::size_t k,
                                    const FdOptions& opt = {}, bool with_second = true);

/// Rendering of the quadratic covariation term in the pathwise
/// change-of-variable check.
enum class BracketConvention {
    ExpectedDt,  // (1/2) tr(hess) dt_k          - compensator form, O(sqrt(dt)) residual
    Realized,    // (1/2) tr(hess dW dW')        - realized-bracket form
};

struct ItoResidualOptions {
    FdOptions fd;
    BracketConvention bracket = BracketConvention::ExpectedDt;
    bool use_oracles = false;  // closed-form derivatives instead of finite differences
};

/// Pathwise change-of-variable residual on one path:
///   residual[k] = F(t_k, w) - F(0, w)
///                 - sum_{j<k} [ DF dt_j + grad F' dW_j + bracket term ],
/// all derivatives finite-differenced at left points. Requires F.claims.c12b.
std::vector<double> ito_formula_residual(const FunctionalSpec& f, const Path& w,
                                         const ItoResidualOptions& opt = {});

/// Per-step drift load |sum_j (DF + 1/2 tr hess) dt_j| accumulated over the
/// grid; martingale functionals must show this cancel towards zero.
double ito_drift_sum(const FunctionalSpec& f, const Path& w, const FdOptions& opt = {});

/// Monte Carlo summary of ito_formula_residual over an ensemble.
struct ItoEnsembleReport {
    double terminal_rms = 0.0;
    double terminal_rms_se = 0.0;
    double terminal_max_abs = 0.0;
    double drift_abs_mean = 0.0;  // mean of ito_drift_sum across scenarios
    std::size_t scenarios_used = 0;
    std::size_t singular_count = 0;
};

struct NonAnticipativityWitness {
    std::size_t k = 0;
    double base_value = 0.0;
    double perturbed_value = 0.0;
};

struct NonAnticipativityReport {
    bool pass = true;
    std::size_t trials = 0;
    std::optional<NonAnticipativityWitness> witness;
};

/// Randomized falsification of F(t_k, omega) = F(t_k, omega_{t_k}): draws
/// random k and random perturbations strictly after t_k and requires the
/// evaluation at k to be bitwise unchanged. Returns the first counterexample.
NonAnticipativityReport check_non_anticipativity(const FunctionalSpec& f, const Path& p,
                                                 std::size_t trials, std::uint64_t seed = 0x5eed);

ItoEnsembleReport ito_formula_check(const FunctionalSpec& f, const WienerBatch& batch,
                                    const ItoResidualOptions& opt = {}, std::size_t threads = 0);

}  // namespace fitolab
