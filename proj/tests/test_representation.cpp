#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fitolab/catalog.hpp"
#include "fitolab/errors.hpp"
#include "fitolab/process.hpp"
#include "fitolab/quadrature.hpp"
#include "fitolab/representation.hpp"
#include "fitolab/statistics.hpp"

using namespace fitolab;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

// evaluates the first coordinate but refuses values above the cliff: a
// reachable stand-in for the inverse-Bessel pole, to exercise the
// singular-failure bookkeeping deterministically
FunctionalSpec cliff_functional(double cliff) {
    FunctionalSpec f;
    f.id = "cliff";
    f.claims.martingale = true;
    f.claims.strict_local_martingale = true;
    f.eval = [cliff](const PathView& p, std::size_t k, double) {
        const double v = p(k, 0);
        if (v > cliff) throw NumericError("cliff crossed");
        return v;
    };
    return f;
}

}  // namespace

TEST_CASE("integrand of the identity functional is identically one") {
    const WienerBatch batch(make_uniform_grid(1.0, 64), 1, 16, 41);
    const auto phi = integrand_from_functional(make_functional("linear"), batch);
    for (std::size_t p = 0; p < 16; ++p) {
        for (std::size_t k = 0; k < 64; ++k) {
            CHECK(same_bits(phi.row(p, k)[0], 1.0));
        }
    }
    CHECK(phi.singular_count() == 0);
}

TEST_CASE("integrand of conditional-square is 2 W(t_k) to machine precision") {
    const WienerBatch batch(make_uniform_grid(1.0, 128), 1, 8, 42);
    const auto phi = integrand_from_functional(make_functional("conditional-square"), batch);
    for (std::size_t p = 0; p < 8; ++p) {
        const Path path = batch.path(p);
        for (std::size_t k = 0; k < 128; ++k) {
            CHECK(std::abs(phi.row(p, k)[0] - 2.0 * path.value(k, 0)) <= 1e-10);
        }
    }
}

TEST_CASE("integrand of inverse-bessel matches the analytic gradient off the pole") {
    const auto f = make_functional("inverse-bessel");
    const WienerBatch batch(make_uniform_grid(1.0, 64), 3, 12, 43);
    const auto phi = integrand_from_functional(f, batch);
    std::vector<double> oracle(3);
    for (std::size_t p = 0; p < 12; ++p) {
        const Path path = batch.path(p);
        for (std::size_t k = 0; k < 64; k += 5) {
            double r2 = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                const double c = f.params[i] + path.value(k, i);
                r2 += c * c;
            }
            if (r2 < 0.3 * 0.3) continue;
            f.oracle_vertical(path.view(), k, oracle);
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(std::abs(phi.row(p, k)[i] - oracle[i]) <= 1e-6);
            }
        }
    }
}

TEST_CASE("reconstruct: zero integrand gives the constant process") {
    const WienerBatch batch(make_uniform_grid(1.0, 32), 1, 8, 44);
    IntegrandOnGrid zero(batch, std::vector<double>(8 * 32, 0.0),
                         std::vector<std::uint32_t>(8, kNoSingular));
    const auto m = reconstruct(2.5, zero);
    for (std::size_t p = 0; p < 8; ++p) {
        for (std::size_t k = 0; k <= 32; ++k) CHECK(same_bits(m.value(p, k), 2.5));
    }
}

TEST_CASE("linear reconstruction reproduces the path bitwise") {
    const WienerBatch batch(make_uniform_grid(1.0, 256), 1, 64, 45);
    const auto phi = integrand_from_functional(make_functional("linear"), batch);
    const auto m = reconstruct(0.0, phi);
    for (std::size_t p = 0; p < 64; ++p) {
        const Path path = batch.path(p);
        for (std::size_t k = 0; k <= 256; ++k) {
            CHECK(same_bits(m.value(p, k), path.value(k, 0)));
        }
    }
}

TEST_CASE("quadratic reconstruction: terminal residual RMS tracks sqrt(2 T dt)") {
    const std::size_t steps = 1024;
    const std::size_t scenarios = 4000;
    const WienerBatch batch(make_uniform_grid(1.0, steps), 1, scenarios, 46);
    const auto report = representation_residual(make_functional("quadratic"), batch);
    const double expected = std::sqrt(2.0 / static_cast<double>(steps));
    CHECK(report.terminal_rms == doctest::Approx(expected).epsilon(0.20));
    CHECK(report.scenarios_used == scenarios);
    CHECK(report.singular_count == 0);
}

TEST_CASE("representation residual of the identity functional is exactly zero") {
    const WienerBatch batch(make_uniform_grid(1.0, 128), 1, 200, 47);
    const auto report = representation_residual(make_functional("linear"), batch);
    for (std::size_t k = 0; k <= 128; ++k) CHECK(same_bits(report.per_t_rms[k], 0.0));
    CHECK(same_bits(report.terminal_rms, 0.0));
    CHECK(same_bits(report.sup_p99, 0.0));
}

TEST_CASE("anticipated-average residual carries the derived exact variance") {
    // residual(T) = -sum dt_k dW_k, so Var = sum dt_k^3 = T^3 / N^2 on the
    // uniform grid and the RMS shrinks at first order in dt
    const std::size_t steps = 256;
    const std::size_t scenarios = 512;
    const WienerBatch batch(make_uniform_grid(1.0, steps), 1, scenarios, 48);
    const auto report =
        representation_residual(make_functional("anticipated-average"), batch);
    const double expected = 1.0 / static_cast<double>(steps);  // sqrt(T^3)/N
    CHECK(report.terminal_rms == doctest::Approx(expected).epsilon(0.25));
}

TEST_CASE("residual convergence slopes: first order for FV drift, one half for exponential") {
    std::vector<double> dts, rms_aa, rms_exp;
    for (const std::size_t n : {128UL, 256UL, 512UL, 1024UL}) {
        const WienerBatch batch(make_uniform_grid(1.0, n), 1, 256, 49);
        rms_aa.push_back(
            representation_residual(make_functional("anticipated-average"), batch).terminal_rms);
        rms_exp.push_back(
            representation_residual(make_functional("exponential"), batch).terminal_rms);
        dts.push_back(1.0 / static_cast<double>(n));
    }
    CHECK(loglog_slope(dts, rms_aa) >= 0.9);
    const double slope_exp = loglog_slope(dts, rms_exp);
    CHECK(slope_exp >= 0.35);
    CHECK(slope_exp <= 0.65);
}

TEST_CASE("representation requires a martingale-type claim") {
    const WienerBatch batch(make_uniform_grid(1.0, 16), 1, 4, 50);
    CHECK_THROWS_AS(representation_residual(make_functional("integral"), batch),
                    std::invalid_argument);
}

TEST_CASE("integrand extraction never reads the initial value: centering is free") {
    // Definition-3 style centering: the integrand of F and of F - F(0, .)
    // is the same object; a literal constant shift only adds rounding noise
    const WienerBatch batch(make_uniform_grid(1.0, 64), 1, 8, 51);
    const auto f = make_functional("conditional-square");
    const auto phi = integrand_from_functional(f, batch);
    const auto phi_shifted = integrand_from_functional(shifted(f, 1.0), batch);
    for (std::size_t p = 0; p < 8; ++p) {
        for (std::size_t k = 0; k < 64; ++k) {
            CHECK(std::abs(phi.row(p, k)[0] - phi_shifted.row(p, k)[0]) <= 1e-9);
        }
    }
}

TEST_CASE("pairing identity: the three reference pairs agree within 3 SE") {
    const std::size_t scenarios = 20000;
    const WienerBatch batch(make_uniform_grid(1.0, 256), 1, scenarios, 52);
    const auto linear = make_functional("linear");
    const auto quadratic = make_functional("quadratic");
    const auto conditional = make_functional("conditional-square");

    SUBCASE("Y = Z = linear: E[W_T^2] vs T") {
        const auto s = pairing_check(linear, linear, batch);
        CHECK(std::abs(s.lhs_mean - 1.0) <= 3.0 * s.lhs_se);
        CHECK(s.rhs_mean == doctest::Approx(1.0).epsilon(1e-12));  // integral of 1 dt, exact
        CHECK(std::abs(s.diff_mean) <= 3.0 * s.diff_se);
    }
    SUBCASE("Y = linear, Z = quadratic: odd moments vanish") {
        const auto s = pairing_check(linear, quadratic, batch);
        CHECK(std::abs(s.lhs_mean) <= 3.0 * s.lhs_se);
        CHECK(std::abs(s.rhs_mean) <= 3.0 * s.rhs_se);
        CHECK(std::abs(s.diff_mean) <= 3.0 * s.diff_se);
    }
    SUBCASE("Y = Z = conditional-square: Var(W_T^2) = 2 T^2 both ways") {
        const auto s = pairing_check(conditional, conditional, batch);
        CHECK(std::abs(s.lhs_mean - 2.0) <= 3.0 * s.lhs_se);
        CHECK(std::abs(s.rhs_mean - 2.0) <= 3.0 * s.rhs_se);
        CHECK(std::abs(s.diff_mean) <= 3.0 * s.diff_se);
    }
    SUBCASE("non-martingale operands are rejected") {
        CHECK_THROWS_AS(pairing_check(linear, make_functional("integral"), batch),
                        std::invalid_argument);
    }
}

TEST_CASE("strict locality: terminal mean drops, stopped means do not") {
    const std::size_t scenarios = 20000;
    const WienerBatch batch(make_uniform_grid(1.0, 512), 3, scenarios, 53);
    const auto f = make_functional("inverse-bessel");
    const double levels[4] = {2.0, 4.0, 8.0, 1024.0};
    const auto s = strict_locality_diagnostic(f, batch, levels);

    const double reference = inverse_bessel_expected_terminal(1.0, 1.0);
    CHECK(reference == doctest::Approx(0.6826894921370859));
    CHECK(std::abs(s.terminal_mean - reference) <= 3.0 * s.terminal_se);
    CHECK(1.0 - s.terminal_mean > 10.0 * s.terminal_se);

    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(std::abs(s.levels[l].stopped_mean - 1.0) <= 3.0 * s.levels[l].stopped_se);
    }
    // a level beyond the ensemble sup never stops: the strict-local gap reappears
    CHECK(s.levels[3].stopped_mean == doctest::Approx(s.terminal_mean).epsilon(1e-12));
    // stopped means decrease towards the unstopped mean as levels grow
    CHECK(s.levels[0].stopped_mean >= s.levels[2].stopped_mean - 3.0 * s.levels[0].stopped_se);
    CHECK(s.levels[2].stopped_mean >= s.levels[3].stopped_mean);
    CHECK(s.scenarios_used + s.singular_count == scenarios);
}

TEST_CASE("engine statistics are bitwise independent of the worker count") {
    const WienerBatch batch(make_uniform_grid(1.0, 256), 1, 1500, 55);
    const auto f = make_functional("exponential");
    const auto one = representation_residual(f, batch, {}, 1);
    const auto three = representation_residual(f, batch, {}, 3);
    REQUIRE(one.per_t_rms.size() == three.per_t_rms.size());
    for (std::size_t k = 0; k < one.per_t_rms.size(); ++k) {
        CHECK(same_bits(one.per_t_rms[k], three.per_t_rms[k]));
    }
    CHECK(same_bits(one.terminal_rms, three.terminal_rms));
    CHECK(same_bits(one.sup_p99, three.sup_p99));

    const auto pair_one = pairing_check(f, f, batch, {}, 1);
    const auto pair_four = pairing_check(f, f, batch, {}, 4);
    CHECK(same_bits(pair_one.diff_mean, pair_four.diff_mean));
    CHECK(same_bits(pair_one.lhs_se, pair_four.lhs_se));
}

TEST_CASE("ensemble accessors are shape-checked") {
    const WienerBatch batch(make_uniform_grid(1.0, 8), 1, 3, 56);
    CHECK_THROWS_AS(batch.path(3), std::out_of_range);
    CHECK_THROWS_AS(WienerBatch(nullptr, 1, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(WienerBatch(make_uniform_grid(1.0, 8), 0, 1, 0), std::invalid_argument);
    const auto f = make_functional("inverse-bessel");
    CHECK_THROWS_AS(integrand_from_functional(f, batch), std::invalid_argument);  // d mismatch
}

TEST_CASE("singular failures are counted, never silently dropped") {
    // cliff at 1.0: scenarios whose path exceeds it before T fail there
    const std::size_t scenarios = 500;
    const WienerBatch batch(make_uniform_grid(1.0, 64), 1, scenarios, 54);
    const auto f = cliff_functional(1.0);

    const auto m = eval_process(f, batch);
    std::size_t failed = 0;
    for (std::size_t p = 0; p < scenarios; ++p) {
        const Path path = batch.path(p);
        const std::uint32_t mark = m.singular_at(p);
        if (mark != kNoSingular) {
            ++failed;
            CHECK(path.value(mark, 0) > 1.0);
            CHECK(std::isnan(m.value(p, mark)));
            if (mark > 0) CHECK(path.value(mark - 1, 0) <= 1.0);
        }
    }
    CHECK(failed > 0);  // at T = 1 roughly half the paths cross 1.0
    CHECK(m.singular_count() == failed);

    const auto report = representation_residual(f, batch);
    CHECK(report.singular_count == failed);
    CHECK(report.scenarios_used == scenarios - failed);

    const auto s = strict_locality_diagnostic(f, batch, std::vector<double>{0.5});
    CHECK(s.singular_count == failed);
    // stopping at 0.5 precedes every 1.0-crossing: all scenarios retained
    CHECK(s.levels[0].stopped_excluded == 0);
    CHECK(std::abs(s.levels[0].stopped_mean) <= 0.5 + 1e-12);
}
