#include <doctest.h>

#include <cmath>

#include "kgs/model.hpp"

using namespace kgs;

TEST_SUITE("model") {

TEST_CASE("feed-rate ratio delta matches direct arithmetic") {
    ModelParams p;
    p.a = Schedule::constant(0.5);
    p.m = 0.45;
    p.D = 0.01;
    auto rep = check_assumptions(p, Terrain::flat(), 0.0);
    double expected = std::pow(0.45, 1.5) * 0.01 / 0.25;
    CHECK(rep.delta == doctest::Approx(expected).epsilon(1e-12));
    CHECK(rep.delta == doctest::Approx(0.0120748).epsilon(1e-4));
    CHECK(rep.a3_strict);
}

TEST_CASE("a^2/m^2 above 1 is flagged but nothing throws") {
    ModelParams p;
    p.a = Schedule::constant(0.5);
    p.m = 0.45;
    p.D = 0.01;
    auto rep = check_assumptions(p, Terrain::flat(), 0.0);
    REQUIRE(rep.entries.front().name == "A1");
    CHECK(rep.entries.front().value == doctest::Approx(0.25 / 0.2025).epsilon(1e-12));
    CHECK(rep.entries.front().verdict == AssumptionEntry::Verdict::Violated);
}

TEST_CASE("large rainfall drives every ratio small") {
    ModelParams p;
    p.a = Schedule::constant(50.0);
    p.m = 0.45;
    p.D = 0.01;
    auto rep = check_assumptions(p, Terrain::constant_slope(1.0), 0.0);
    for (const auto& e : rep.entries) {
        if (e.name == "A1" || e.name == "A2") continue;
        CHECK(e.verdict == AssumptionEntry::Verdict::Holds);
    }
    CHECK(rep.a3_strict);
}

TEST_CASE("doubling a divides delta by exactly 4") {
    ModelParams p;
    p.a = Schedule::constant(0.7);
    p.m = 2.0;
    p.D = 0.02;
    auto r1 = check_assumptions(p, Terrain::flat(), 0.0);
    p.a = Schedule::constant(1.4);
    auto r2 = check_assumptions(p, Terrain::flat(), 0.0);
    CHECK(r2.delta == doctest::Approx(r1.delta / 4.0).epsilon(1e-15));
}

TEST_CASE("constant slope terrain evaluates exactly") {
    auto e = eval_terrain(Terrain::constant_slope(1.0), 2.0);
    CHECK(e.h == 2.0);
    CHECK(e.hx == 1.0);
    CHECK(e.hxx == 0.0);
}

TEST_CASE("gaussian bump at its center") {
    auto e = eval_terrain(Terrain::gaussian(0.25, 5.0), 5.0);
    CHECK(e.h == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.hx == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e.hxx == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("flat terrain is identically zero") {
    auto e = eval_terrain(Terrain::flat(), 3.7);
    CHECK(e.h == 0.0);
    CHECK(e.hx == 0.0);
    CHECK(e.hxx == 0.0);
}

TEST_CASE("tabulated terrain tracks the function it sampled") {
    // sin(pi x / 10) has zero curvature at both ends, so natural spline
    // boundary conditions are exact and interior error is O(dx^4).
    const double L = 10.0;
    const int n = 400;
    std::vector<double> xs(n + 1), hs(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = L * i / n;
        hs[i] = std::sin(M_PI * xs[i] / L);
    }
    auto terr = Terrain::tabulated(xs, hs);
    for (double x : {1.234, 3.21, 5.0, 7.77, 9.1}) {
        auto e = terr.eval(x);
        double k = M_PI / L;
        CHECK(std::abs((e.h) - (std::sin(k * x))) <= 1e-6);
        CHECK(std::abs((e.hx) - (k * std::cos(k * x))) <= 1e-5);
        CHECK(std::abs((e.hxx) - (-k * k * std::sin(k * x))) <= 1e-3);
    }
    CHECK_THROWS_AS(terr.eval(-0.5), ValidationError);
    CHECK_THROWS_AS(terr.eval(10.5), ValidationError);
}

TEST_CASE("pulse positions must strictly increase") {
    PulseConfig cfg;
    cfg.positions = {1.0, 3.0, 3.0, 5.0};
    CHECK_THROWS_AS(cfg.validate(DomainSpec::neumann(10.0)), ValidationError);
    cfg.positions = {1.0, 3.0, 4.0, 5.6, 8.0};
    CHECK_NOTHROW(cfg.validate(DomainSpec::neumann(10.0)));
    cfg.positions = {0.0, 3.0};
    CHECK_THROWS_AS(cfg.validate(DomainSpec::neumann(10.0)), ValidationError);
    CHECK_NOTHROW(cfg.validate(DomainSpec::unbounded()));
}

TEST_CASE("schedules enforce non-increasing rainfall") {
    CHECK_THROWS_AS(Schedule::linear(0.5, 1e-3), ValidationError);
    CHECK_THROWS_AS(Schedule::constant(-1.0), ValidationError);
    CHECK_THROWS_AS(Schedule::piecewise({0.0, 1.0}, {0.3, 0.4}), ValidationError);

    auto s = Schedule::linear(0.5, -5e-4);
    CHECK(s(0.0) == doctest::Approx(0.5));
    CHECK(s(100.0) == doctest::Approx(0.45));
    CHECK(s(1e9) >= 1e-12);

    auto pw = Schedule::piecewise({0.0, 10.0, 20.0}, {0.5, 0.4, 0.4});
    CHECK(pw(5.0) == doctest::Approx(0.45));
    CHECK(pw(25.0) == doctest::Approx(0.4));
    CHECK(pw(-5.0) == doctest::Approx(0.5));
}

TEST_CASE("params validation") {
    ModelParams p;
    p.a = Schedule::constant(0.5);
    p.m = 0.45;
    p.D = 0.01;
    CHECK_NOTHROW(p.validate());
    p.D = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.D = 0.01;
    p.m = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

}  // TEST_SUITE
