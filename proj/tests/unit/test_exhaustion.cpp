#include <cmath>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "yamabe/constants.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/exhaustion.hpp"

using namespace yamabe;

namespace {

ExhaustionRecord synthetic(double j, const std::function<double(double)>& fn, bool concentrated = false) {
    const auto grid = RadialGrid::uniform(j, static_cast<std::size_t>(64 * j));
    auto field = RadialField::sample(grid, fn, Boundary::free);
    field.values.back() = 0.0;
    field = RadialField(field.grid, field.values, Boundary::dirichlet_zero);
    ExhaustionRecord rec{.field = field};
    rec.j = j;
    rec.concentrated = concentrated;
    rec.max_value = field.max_value();
    rec.max_radius = grid[field.argmax()];
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= j - kBoundaryLayer) rec.boundary_max = std::max(rec.boundary_max, field.values[i]);
    return rec;
}

ExhaustionTrace trace_of(std::vector<ExhaustionRecord> recs) {
    ExhaustionTrace t;
    t.n = 3;
    t.profile = "euclidean";
    t.records = std::move(recs);
    return t;
}

}  // namespace

TEST_SUITE("exhaustion") {
    TEST_CASE("decay exponents match the frozen hand-computed cases") {
        std::ifstream in(YAMABE_FIXTURE_DIR "/exponents.json");
        REQUIRE(in.good());
        const auto doc = nlohmann::json::parse(in);
        for (const auto& c : doc.at("cases")) {
            const auto rep = exponent_formulas(c.at("n"), c.at("Y"), c.at("Y_inf"), c.at("rho"), c.at("eps_hat"));
            CHECK(rep.beta0 == doctest::Approx(c.at("beta0").get<double>()).epsilon(1e-12));
            CHECK(rep.delta == doctest::Approx(c.at("delta").get<double>()).epsilon(1e-12));
            CHECK(rep.rho0 == doctest::Approx(c.at("rho0").get<double>()).epsilon(1e-12));
            CHECK(rep.alpha_predicted == doctest::Approx(c.at("alpha").get<double>()).epsilon(1e-12));
        }
    }

    TEST_CASE("beta0 selection") {
        CHECK(beta0_select(3, 0.25, 0.0) == doctest::Approx(2.0));
        CHECK(beta0_select(4, 0.9, 0.0) == doctest::Approx(1.0540925533894598));
        CHECK(beta0_select(3, 0.01, 0.0) == doctest::Approx(3.0).epsilon(1e-8));
        CHECK(beta0_select(3, 0.25) < 2.0);
        CHECK_THROWS_AS(beta0_select(3, 1.2), HypothesisError);
        try {
            beta0_select(3, 1.0);
            FAIL("expected a hypothesis error");
        } catch (const HypothesisError& e) {
            CHECK(e.name() == "margin");
        }
    }

    TEST_CASE("violated hypotheses are reported by name") {
        auto name_of = [](auto&& fn) {
            try {
                fn();
            } catch (const HypothesisError& e) {
                return e.name();
            }
            return std::string("none");
        };
        CHECK(name_of([] { exponent_formulas(3, 1.0, 0.0, 0.0); }) == "Y_inf > 0");
        CHECK(name_of([] { exponent_formulas(3, 2.0, 1.0, 0.0); }) == "Y < Y_inf");
        CHECK(name_of([] { exponent_formulas(3, 1.0, 4.0, 3.5, 0.0); }) == "rho < rho0");
        CHECK(name_of([] { exponent_formulas(3, 1.0, 4.0, 0.0); }) == "none");
    }

    TEST_CASE("decay fit on synthetic power laws") {
        for (double a : {0.5, 1.0, 2.0}) {
            const auto grid = RadialGrid::uniform(200.0, 20000);
            const auto u = RadialField::sample(grid, [&](double r) { return std::pow(1.0 + r * r, -0.5 * a); }, Boundary::free);
            const auto fit = decay_fit(u, 0.5);
            CHECK(fit.alpha == doctest::Approx(a).epsilon(0.01));
            CHECK(fit.r_lo >= 100.0);
        }
        const auto grid = RadialGrid::uniform(10.0, 64);
        const auto u = RadialField::sample(grid, [](double r) { return 1.0 / (1.0 + r); }, Boundary::free);
        CHECK_THROWS_AS(decay_fit(u, 0.1), PreconditionError);
        CHECK_THROWS_AS(decay_fit(u, 1.5), PreconditionError);
    }

    TEST_CASE("boundary bound: single record, flat and growing maxima") {
        auto bump = [](double scale) { return [scale](double r) { return scale * std::exp(-r); }; };
        const auto one = boundary_bound(trace_of({synthetic(4.0, bump(1.0))}));
        CHECK(one.ratio == 1.0);
        CHECK(one.pass);

        auto edge = [](double j, double level) {
            return synthetic(j, [=](double r) { return r < j - 0.5 ? 1.0 : level; });
        };
        const auto flat = boundary_bound(trace_of({edge(2, 0.1), edge(3, 0.1), edge(4, 0.1), edge(5, 0.1)}));
        CHECK(flat.ratio == doctest::Approx(1.0));
        CHECK(flat.pass);
        const auto growing =
            boundary_bound(trace_of({edge(2, 0.1), edge(3, 0.2), edge(4, 0.4), edge(5, 0.8), edge(6, 1.6)}));
        CHECK(growing.ratio == doctest::Approx(4.0));
        CHECK_FALSE(growing.pass);
    }

    TEST_CASE("concentration verdicts on synthetic traces") {
        const MetricProfile flat(3, make_euclidean(), 100.0);
        auto profile = [](double r) { return 1.0 / (1.0 + r * r); };
        auto same = trace_of({synthetic(4, profile), synthetic(8, profile), synthetic(16, profile)});
        CHECK(concentration_verdict(same, 2.0, flat).verdict == Verdict::converges_positive);

        auto flagged = trace_of({synthetic(4, profile, true), synthetic(8, profile, true), synthetic(16, profile, true)});
        CHECK(concentration_verdict(flagged, 2.0, flat).verdict == Verdict::concentrates);
        auto mixed = trace_of({synthetic(4, profile, true), synthetic(8, profile), synthetic(16, profile)});
        CHECK(concentration_verdict(mixed, 2.0, flat).verdict == Verdict::inconclusive);

        auto spike = [](double m) { return [m](double r) { return m / (1.0 + m * m * r * r); }; };
        auto peaked = trace_of({synthetic(4, spike(2)), synthetic(8, spike(8)), synthetic(16, spike(32))});
        CHECK(concentration_verdict(peaked, 2.0, flat).verdict == Verdict::concentrates);

        auto shift = [](double c) { return [c](double r) { return std::exp(-(r - c) * (r - c)); }; };
        auto away = trace_of({synthetic(8, shift(4)), synthetic(16, shift(8)), synthetic(32, shift(16))});
        const auto esc = concentration_verdict(away, 1.0, flat);
        CHECK(esc.verdict == Verdict::escapes);

        auto settle = [](double j) { return [j](double r) { return (1.0 + 1.0 / j) / (1.0 + r * r); }; };
        auto conv = trace_of({synthetic(4, settle(4)), synthetic(8, settle(8)), synthetic(16, settle(16))});
        const auto cv = concentration_verdict(conv, 2.0, flat);
        CHECK(cv.verdict == Verdict::converges_positive);
        REQUIRE(cv.limit_estimate);
        CHECK(*cv.limit_estimate == doctest::Approx(1.0).epsilon(1e-2));

        CHECK_THROWS_AS(concentration_verdict(same, 8.0, flat), PreconditionError);
    }

    TEST_CASE("subsolution check accepts solutions and rejects a sign flip") {
        const MetricProfile flat(3, make_euclidean(), 100.0);
        const auto trace = run_exhaustion(flat, {2.0, 4.0, 8.0}, {.grid_per_unit = 128.0});
        for (const auto& rec : trace.records) {
            const auto rep = subsolution_check(trace, rec.j, flat);
            CHECK(rep.pass);
            CHECK(rep.max_violation <= rep.tol);
            CHECK(rep.boundary_value <= 0.0);
            auto neg = rec.field;
            for (double& v : neg.values) v = -v;
            CHECK_FALSE(subsolution_check(neg, rec.field_multiplier, rec.field_exponent, flat).pass);
        }
        CHECK_THROWS_AS(subsolution_check(trace, 5.0, flat), PreconditionError);
    }

    TEST_CASE("exhaustion trace invariants") {
        const MetricProfile pb(3, make_power_bump(0.5, 1.0), 1e4);
        const auto trace = run_exhaustion(pb, {2.0, 3.0, 4.0}, {.grid_per_unit = 128.0, .jobs = 3});
        REQUIRE(trace.records.size() == 3);
        const double lam = lambda_constant(3);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& r = trace.records[i];
            if (i > 0) CHECK(r.y_j <= trace.records[i - 1].y_j * (1.0 + 1e-3));
            CHECK(r.upper_witness >= lam * (1.0 - 1e-2));
            // Balls of a rotationally symmetric model are conformal to flat balls.
            CHECK(r.y_j >= lam * (1.0 - 1e-3));
            CHECK(r.concentrated);
            CHECK(lp_norm(r.field, dimension_constants(3).p, pb) == doctest::Approx(1.0).epsilon(1e-8));
            CHECK(r.field.values.back() == 0.0);
        }
        CHECK(trace.at(3.0).j == 3.0);
        CHECK_THROWS_AS(trace.at(7.0), PreconditionError);
    }

    TEST_CASE("a failing radius is reported with its value") {
        const MetricProfile flat(3, make_euclidean(), 100.0);
        SolverConfig starved;
        starved.max_iters = 1;
        starved.el_tol = 1e-14;
        try {
            run_exhaustion(flat, {1.0, 2.0, 3.0}, {.grid_per_unit = 32.0, .solver = starved});
            FAIL("expected a radius error");
        } catch (const RadiusError& e) {
            CHECK(e.radius() == 1.0);
        }
        CHECK_THROWS_AS(run_exhaustion(flat, {1.0, 2.0}), PreconditionError);
        CHECK_THROWS_AS(run_exhaustion(flat, {1.0, 3.0, 2.0}), PreconditionError);
    }

    TEST_CASE("existence condition verdicts") {
        CHECK(existence_condition(1.0, 2.0, 0.05).holds);
        CHECK(existence_condition(1.0, 2.0, 0.05).verdict == "holds");
        CHECK(existence_condition(1.0, -1.0, 0.05).verdict == "existence condition fails: Y_inf <= 0");
        CHECK(existence_condition(1.98, 2.0, 0.05).verdict == "existence condition fails: Y = Y_inf within margin");
        CHECK(existence_condition(3.0, 2.0, 0.05).verdict == "existence condition fails: Y > Y_inf");
        CHECK_THROWS_AS(existence_condition(1.0, 2.0, -0.1), PreconditionError);
    }

    TEST_CASE("K-normalized residual rescales the critical residual") {
        const MetricProfile pb(3, make_power_bump(0.5, 1.0), 100.0);
        const auto grid = RadialGrid::uniform(2.0, 128);
        const auto u = RadialField::sample(grid, [](double r) { return std::cos(0.25 * std::numbers::pi * r); },
                                           Boundary::dirichlet_zero);
        for (double y : {3.0, -2.0}) {
            const double scale = std::pow(std::abs(y), 0.25);
            CHECK(k_normalized_residual(u, pb, y) == doctest::Approx(scale * el_residual(u, pb, y)).epsilon(1e-12));
        }
        CHECK(k_normalized_residual(u, pb, 0.0) == doctest::Approx(el_residual(u, pb, 0.0)).epsilon(1e-12));
    }

    TEST_CASE("record JSON round trip") {
        auto rec = synthetic(3.0, [](double r) { return 1.0 / (1.0 + r); });
        rec.y_j = 4.5;
        rec.y_critical = 4.5;
        rec.field_exponent = 6.0;
        rec.field_multiplier = 4.5;
        rec.concentration_reason = "x";
        const auto back = record_from_json(to_json(rec), rec.field);
        CHECK(back.j == rec.j);
        CHECK(back.y_j == rec.y_j);
        CHECK(back.y_critical == rec.y_critical);
        CHECK(back.field_multiplier == rec.field_multiplier);
        CHECK(back.concentration_reason == "x");
        CHECK(back.boundary_max == rec.boundary_max);
    }
}
