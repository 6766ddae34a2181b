#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles/oracles.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/manifold.hpp"

using namespace yamabe;

TEST_SUITE("manifold") {
    TEST_CASE("closed-form curvatures") {
        for (int n = 3; n <= 6; ++n) {
            const MetricProfile flat(n, make_euclidean(), 10.0);
            const MetricProfile hyp(n, make_hyperbolic(), 10.0);
            const MetricProfile sph(n, make_sphere(), 3.0);
            for (double r : {0.0, 1e-4, 0.3, 1.0, 2.5}) {
                CHECK(std::abs(scalar_curvature(flat, r)) <= 1e-12);
                CHECK(scalar_curvature(hyp, r) == doctest::Approx(-n * (n - 1.0)).epsilon(1e-9));
                CHECK(scalar_curvature(sph, r) == doctest::Approx(n * (n - 1.0)).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("curvature agrees with finite differences of f") {
        const auto bump = make_power_bump(0.7, 1.3);
        const auto cigar = make_cigar();
        for (int n : {3, 4}) {
            const MetricProfile pb(n, bump, 10.0);
            const MetricProfile cg(n, cigar, 10.0);
            for (double r : {0.2, 0.7, 1.5, 3.0}) {
                const double fd_b = oracle::curvature_fd([&](double x) { return bump->f(x); }, n, r);
                const double fd_c = oracle::curvature_fd([&](double x) { return cigar->f(x); }, n, r);
                CHECK(scalar_curvature(pb, r) == doctest::Approx(fd_b).epsilon(1e-5));
                CHECK(scalar_curvature(cg, r) == doctest::Approx(fd_c).epsilon(1e-5));
            }
        }
    }

    TEST_CASE("pole series joins the closed form continuously") {
        const MetricProfile pb(3, make_power_bump(0.5, 1.0), 10.0);
        const double inside = scalar_curvature(pb, 0.999e-3);
        const double outside = scalar_curvature(pb, 1.001e-3);
        CHECK(inside == doctest::Approx(outside).epsilon(1e-6));
        CHECK(scalar_curvature(pb, 0.0) == doctest::Approx(-6.0 * 3.0 * 2.0 * 0.5).epsilon(1e-12));
    }

    TEST_CASE("power bump with a = 0 is Euclidean") {
        const MetricProfile pb(4, make_power_bump(0.0, 1.0), 20.0);
        const MetricProfile flat(4, make_euclidean(), 20.0);
        for (double r : {0.0, 0.5, 2.0, 7.0}) {
            CHECK(std::abs(scalar_curvature(pb, r)) <= 1e-12);
            CHECK(ball_volume(pb, r) == doctest::Approx(ball_volume(flat, r)).epsilon(1e-12));
        }
    }

    TEST_CASE("ball volumes against closed forms and Simpson") {
        const MetricProfile flat(3, make_euclidean(), 10.0);
        const MetricProfile hyp(3, make_hyperbolic(), 10.0);
        for (double r : {0.5, 1.0, 3.0}) {
            CHECK(ball_volume(flat, r) == doctest::Approx(4.0 / 3.0 * std::numbers::pi * r * r * r).epsilon(1e-12));
            CHECK(ball_volume(hyp, r) == doctest::Approx(std::numbers::pi * (std::sinh(2 * r) - 2 * r)).epsilon(1e-11));
        }
        const auto bump = make_power_bump(0.5, 1.0);
        const MetricProfile pb(3, bump, 10.0);
        const double ref = 4.0 * std::numbers::pi * oracle::simpson([&](double x) { return bump->f(x) * bump->f(x); }, 0.0, 4.0);
        CHECK(ball_volume(pb, 4.0) == doctest::Approx(ref).epsilon(1e-10));
    }

    TEST_CASE("volume growth classification") {
        const auto flat = volume_growth_exponent(MetricProfile(3, make_euclidean(), 100.0), 8.0, 64.0);
        CHECK(std::abs(flat.rho) < 1e-9);
        CHECK(flat.polynomial);
        CHECK_FALSE(flat.exponential);
        const auto hyp = volume_growth_exponent(MetricProfile(3, make_hyperbolic(), 40.0), 8.0, 32.0);
        CHECK(hyp.exponential);
        const auto bump = volume_growth_exponent(MetricProfile(3, make_power_bump(0.5, 1.0), 100.0), 8.0, 64.0);
        CHECK(std::abs(bump.rho) < 1e-2);
        CHECK(bump.polynomial);
    }

    TEST_CASE("tabulated profile reproduces the closed form") {
        std::vector<double> r, f;
        for (int i = 0; i <= 400; ++i) {
            r.push_back(0.01 * i);
            f.push_back(std::tanh(0.01 * i));
        }
        const MetricProfile tab(3, make_table(r, f), 3.5);
        const MetricProfile cg(3, make_cigar(), 3.5);
        for (double x : {0.5, 1.0, 2.0}) {
            CHECK(tab.f(x) == doctest::Approx(cg.f(x)).epsilon(1e-7));
            CHECK(scalar_curvature(tab, x) == doctest::Approx(scalar_curvature(cg, x)).epsilon(2e-3));
        }
        CHECK(ball_volume(tab, 3.0) == doctest::Approx(ball_volume(cg, 3.0)).epsilon(1e-6));
    }

    TEST_CASE("invalid profiles are rejected") {
        CHECK_THROWS_AS(make_power_bump(1.0, 0.0), PreconditionError);
        CHECK_THROWS_AS(make_power_bump(-3.0, 1.0), PreconditionError);
        CHECK_THROWS_AS(MetricProfile(3, make_sphere(), 4.0), PreconditionError);
        CHECK_THROWS_AS(MetricProfile(2, make_euclidean(), 4.0), PreconditionError);
        std::vector<double> r{0, 1, 2, 3}, f{0, 1, 2, 3};
        CHECK_THROWS_WITH_AS(make_table(r, f), doctest::Contains("too sparse"), PreconditionError);
        std::vector<double> r2, f2, f3;
        for (int i = 0; i < 20; ++i) {
            r2.push_back(0.1 * i);
            f2.push_back(1.0 + 0.1 * i);
            f3.push_back(0.1 * i);
        }
        CHECK_THROWS_AS(MetricProfile(3, make_table(r2, f2), 1.5), PreconditionError);
        std::vector<double> shifted(r2);
        for (double& x : shifted) x += 0.5;
        CHECK_THROWS_AS(make_table(shifted, f3), PreconditionError);
        CHECK_THROWS_AS(make_named_warping("torus", {}), PreconditionError);
        CHECK_THROWS_AS(make_named_warping("power-bump", {{"a", 1.0}}), PreconditionError);
        const MetricProfile flat(3, make_euclidean(), 5.0);
        CHECK_THROWS_AS(flat.check_radius(6.0), DomainError);
    }

    TEST_CASE("curvature decay constant") {
        const MetricProfile hyp(3, make_hyperbolic(), 20.0);
        CHECK(curvature_decay_constant(hyp, 1.0, 10.0) == doctest::Approx(600.0).epsilon(1e-6));
        const MetricProfile flat(3, make_euclidean(), 20.0);
        CHECK(curvature_decay_constant(flat, 1.0, 10.0) == doctest::Approx(0.0));
    }
}
