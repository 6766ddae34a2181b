#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles/oracles.hpp"
#include "yamabe/constants.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/subcritical.hpp"

using namespace yamabe;

TEST_SUITE("subcritical") {
    TEST_CASE("lowest Dirichlet eigenvalue of the unit 3-ball") {
        const MetricProfile flat(3, make_euclidean(), 2.0);
        double prev = 0.0;
        for (std::size_t n : {128u, 256u, 512u}) {
            const Discretization disc(flat, RadialGrid::uniform(1.0, n));
            const auto ep = dirichlet_eigenpair(disc);
            const double err = std::abs(ep.value - std::numbers::pi * std::numbers::pi);
            if (prev > 0.0) CHECK(prev / err > 3.0);
            prev = err;
            for (std::size_t i = 0; i + 1 < ep.field.values.size(); ++i) CHECK(ep.field.values[i] > 0.0);
        }
        CHECK(prev < 1e-3);
    }

    TEST_CASE("multiplier tends to the eigenvalue as s decreases to 2") {
        const MetricProfile flat(3, make_euclidean(), 2.0);
        const auto grid = RadialGrid::uniform(1.0, 256);
        const double ev = dirichlet_eigenpair(Discretization(flat, grid)).value;
        double prev_gap = 1e300;
        for (double s : {2.2, 2.05, 2.01}) {
            const auto sol = solve_subcritical(flat, grid, s);
            const double gap = std::abs(sol.lambda - ev);
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
        CHECK(prev_gap / ev < 0.01);
    }

    TEST_CASE("solutions are positive, normalized and solve the discrete equation") {
        const MetricProfile pb(3, make_power_bump(0.5, 1.0), 10.0);
        const auto grid = RadialGrid::uniform(4.0, 256);
        const Discretization disc(pb, grid);
        for (double s : {2.5, 3.5, 5.0}) {
            const auto sol = solve_subcritical(pb, grid, s);
            CHECK(lp_norm(sol.field, s, disc) == doctest::Approx(1.0).epsilon(1e-10));
            for (std::size_t i = 0; i + 1 < sol.field.values.size(); ++i) CHECK(sol.field.values[i] > 0.0);
            CHECK(sol.field.values.back() == 0.0);
            CHECK(el_residual(sol.field, disc, sol.lambda, s) <= 1e-8);
            CHECK(quotient(sol.field, disc, s) == doctest::Approx(sol.lambda).epsilon(1e-9));
        }
    }

    TEST_CASE("Newton agrees with the projected-gradient oracle") {
        struct Case {
            std::shared_ptr<const Warping> w;
            int n;
            double j;
            double s;
        };
        const Case cases[] = {{make_euclidean(), 3, 1.0, 3.0},
                              {make_hyperbolic(), 3, 2.0, 4.0},
                              {make_cigar(), 4, 3.0, 3.0},
                              {make_power_bump(1.0, 0.5), 5, 2.0, 2.8}};
        for (const auto& c : cases) {
            const MetricProfile prof(c.n, c.w, 10.0);
            const auto grid = RadialGrid::uniform(c.j, 128);
            const Discretization disc(prof, grid);
            const auto sol = solve_subcritical(prof, grid, c.s);
            const auto ref = oracle::projected_gradient(disc, c.s);
            REQUIRE(ref.converged);
            CHECK(sol.lambda == doctest::Approx(ref.lambda).epsilon(1e-10));
            double diff = 0.0;
            for (std::size_t i = 0; i < ref.field.size(); ++i)
                diff = std::max(diff, std::abs(ref.field[i] - sol.field.values[i]));
            CHECK(diff <= 1e-8 * sol.field.max_value());
        }
    }

    TEST_CASE("default schedule is geometric in p - s and ends at p(1 - eps)") {
        SolverConfig cfg;
        for (int n : {3, 4, 6}) {
            const double p = dimension_constants(n).p;
            const auto sched = default_schedule(n, cfg);
            REQUIRE(sched.size() == static_cast<std::size_t>(cfg.schedule_length));
            CHECK(p - sched.front() == doctest::Approx(0.9 * (p - 2.0)));
            CHECK(sched.back() == doctest::Approx(p * (1.0 - cfg.eps_s)));
            const double q = (p - sched[1]) / (p - sched[0]);
            for (std::size_t i = 1; i < sched.size(); ++i) {
                CHECK(sched[i] > sched[i - 1]);
                CHECK((p - sched[i]) / (p - sched[i - 1]) == doctest::Approx(q).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("exponent preconditions") {
        const MetricProfile flat(3, make_euclidean(), 2.0);
        const auto grid = RadialGrid::uniform(1.0, 64);
        CHECK_THROWS_AS(solve_subcritical(flat, grid, 2.0), PreconditionError);
        CHECK_THROWS_AS(solve_subcritical(flat, grid, 6.0), PreconditionError);
    }

    TEST_CASE("continuation on a flat ball concentrates slightly above the bubble constant") {
        const MetricProfile flat(3, make_euclidean(), 10.0);
        const auto grid = RadialGrid::uniform(2.0, 256);
        const auto res = continue_to_critical(flat, grid, default_schedule(3, {}));
        CHECK(res.concentrated);
        CHECK(!res.concentration_reason.empty());
        const double lam = lambda_constant(3);
        CHECK(res.y_j > lam);
        CHECK(res.y_j < 1.05 * lam);
        CHECK(res.upper_witness >= res.y_j * (1.0 - 1e-3));
        for (std::size_t i = 1; i < res.steps.size(); ++i) CHECK(res.steps[i].max_value >= res.steps[i - 1].max_value);
    }

    TEST_CASE("extrapolated constant is insensitive to the schedule end") {
        const MetricProfile pb(3, make_power_bump(1.0, 0.5), 10.0);
        const auto grid = RadialGrid::uniform(2.0, 256);
        SolverConfig a, b;
        b.eps_s = 5e-4;
        const double ya = continue_to_critical(pb, grid, default_schedule(3, a), a).y_j;
        const double yb = continue_to_critical(pb, grid, default_schedule(3, b), b).y_j;
        CHECK(std::abs(ya - yb) <= 0.01 * ya);
    }
}
