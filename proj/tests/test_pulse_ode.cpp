#include <doctest.h>

#include <cmath>
#include <random>

#include "kgs/amplitudes.hpp"
#include "kgs/common.hpp"
#include "kgs/outer.hpp"
#include "kgs/pulse_ode.hpp"

using namespace kgs;

namespace {

ModelParams flat_params(double a = 0.5, double m = 0.45, double D = 0.01) {
    ModelParams p;
    p.a = Schedule::constant(a);
    p.m = m;
    p.D = D;
    return p;
}

ModelParams params_for_delta(double delta) {
    ModelParams p;
    p.a = Schedule::constant(1.0);
    p.m = 1.0;
    p.D = delta;
    return p;
}

PulseConfig config_at(std::vector<double> P, double t = 0.0) {
    PulseConfig c;
    c.t = t;
    c.positions = std::move(P);
    return c;
}

}  // namespace

TEST_SUITE("pulse_ode") {

TEST_CASE("regular periodic pattern on flat ground is stationary") {
    const auto params = flat_params();
    const auto dom = DomainSpec::periodic(12.0);
    const auto cfg = config_at({1.5, 4.5, 7.5, 10.5});
    for (const auto mode : {OdeMode::A3, OdeMode::A3Prime}) {
        const auto v = velocity(cfg, params, Terrain::flat(), dom, mode);
        for (double c : v.c) CHECK(std::abs(c) <= 1e-14);
        for (std::size_t j = 0; j < v.dPdt.size(); ++j)
            CHECK(std::abs(v.dPdt[j] - v.prefactor * v.c[j]) <= 1e-18);
    }
}

TEST_CASE("symmetric two-pulse no-flux configuration repels symmetrically") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    const auto v = velocity(config_at({2.0, 8.0}), params, Terrain::flat(), dom, OdeMode::A3);
    CHECK(v.dPdt[0] > 0.0);  // inner gap wider than wall gap, so pulses pull inward
    CHECK(std::abs(v.dPdt[0] + v.dPdt[1]) <= 1e-15);
}

TEST_CASE("single uphill pulse drifts at the solitary speed in both modes") {
    const double H = 1.0;
    const double s = slope_param(H);
    const auto terr = Terrain::constant_slope(H);
    const auto dom = DomainSpec::unbounded();
    for (double delta : {0.01, 0.05}) {
        const auto params = params_for_delta(delta);
        const double pref = delta;  // D a^2 / (m sqrt m) with a = m = 1

        const auto va = velocity(config_at({0.0}), params, terr, dom, OdeMode::A3);
        CHECK(std::abs(va.dPdt[0] - pref * s * H / 6.0) <= 1e-14);
        CHECK(std::abs(homoclinic_speed(H, params, OdeMode::A3) - va.dPdt[0]) <= 1e-16);

        const double u0 = homoclinic_amplitude(delta, H);
        const double kap = 1.0 - delta * u0;
        const auto vp = velocity(config_at({0.0}), params, terr, dom, OdeMode::A3Prime);
        CHECK(std::abs(vp.dPdt[0] - kap * kap * pref * s * H / 6.0) <= 1e-12);
        CHECK(std::abs(homoclinic_speed(H, params, OdeMode::A3Prime) - vp.dPdt[0]) <= 1e-14);
        CHECK(std::abs(vp.u0[0] - u0) <= 1e-9);
    }
}

TEST_CASE("translation speed of a regular pattern matches the drifting configuration") {
    for (double H : {0.5, 1.0, 2.0}) {
        for (double d : {0.5, 1.0, 2.0, 5.0}) {
            const auto params = params_for_delta(0.02);
            const auto terr = Terrain::constant_slope(H);
            const auto dom = DomainSpec::periodic(d);
            const auto cfg = config_at({0.5 * d});
            for (const auto mode : {OdeMode::A3, OdeMode::A3Prime}) {
                const double cd = regular_speed(d, H, params, mode);
                const auto v = velocity(cfg, params, terr, dom, mode);
                CHECK(std::abs(cd - v.dPdt[0]) <= 1e-12 * std::max(1.0, std::abs(cd)));
            }
        }
    }
}

TEST_CASE("regular-pattern speed vanishes on flat ground and saturates for wide spacing") {
    const auto params = flat_params();
    CHECK(regular_speed(2.0, 0.0, params, OdeMode::A3) == 0.0);
    for (double H : {0.5, 1.0, 2.0}) {
        for (const auto mode : {OdeMode::A3, OdeMode::A3Prime}) {
            const double wide = regular_speed(50.0, H, params, mode);
            const double lim = homoclinic_speed(H, params, mode);
            CHECK(std::abs(wide - lim) <= 1e-8);
        }
    }
}

TEST_CASE("regular-pattern speed increases with spacing") {
    const auto params = flat_params();
    for (double H : {0.5, 1.0, 2.0}) {
        for (const auto mode : {OdeMode::A3, OdeMode::A3Prime}) {
            // Tight spacings fall outside the amplitude existence fold once
            // the feedback is on, so the corrected branch starts wider.
            const double d0 = mode == OdeMode::A3 ? 0.25 : 1.0;
            double prev = regular_speed(d0, H, params, mode);
            for (double d = 1.5 * d0; d < 30.0; d *= 1.5) {
                const double cur = regular_speed(d, H, params, mode);
                CHECK(cur > prev);
                prev = cur;
            }
        }
    }
}

TEST_CASE("colonization spacing balances the lowest pulse exactly") {
    const auto params = flat_params();
    CHECK(std::isinf(colonization_wavelength(0.0, params)));
    CHECK(std::isinf(colonization_wavelength(-1.0, params)));

    for (double H : {0.3, 1.0, 2.0}) {
        const double dc = colonization_wavelength(H, params);
        CHECK(dc > 0.0);
        CHECK(std::isfinite(dc));
        // Lowest pulse of a long regular train: downhill side is semi-infinite.
        const auto v = velocity(config_at({0.0, dc, 2.0 * dc, 3.0 * dc}), params,
                                Terrain::constant_slope(H), DomainSpec::unbounded(), OdeMode::A3);
        CHECK(std::abs(v.c[0]) <= 1e-10);
    }

    double prev = colonization_wavelength(0.2, params);
    for (double H = 0.3; H <= 2.0 + 1e-12; H += 0.1) {
        const double cur = colonization_wavelength(H, params);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("outermost spread of an unbounded train always widens") {
    std::mt19937 gen(42u);
    std::uniform_int_distribution<int> num(2, 6);
    std::uniform_real_distribution<double> gap(0.3, 5.0);
    std::uniform_real_distribution<double> slope(-1.5, 1.5);
    const auto dom = DomainSpec::unbounded();
    for (int trial = 0; trial < 100; ++trial) {
        const int N = num(gen);
        std::vector<double> P(N);
        P[0] = 0.0;
        for (int j = 1; j < N; ++j) P[j] = P[j - 1] + gap(gen);
        const double H = slope(gen);
        const auto v = velocity(config_at(P), flat_params(), Terrain::constant_slope(H), dom,
                                OdeMode::A3);
        CHECK(v.dPdt.back() - v.dPdt.front() > 0.0);
    }
}

TEST_CASE("amplitude feedback correction scales linearly with the small parameter") {
    const auto dom = DomainSpec::neumann(10.0);
    const auto cfg = config_at({2.0, 5.0, 7.0});
    const auto dev = [&](double a) {
        const auto params = flat_params(a);
        const auto base = velocity(cfg, params, Terrain::flat(), dom, OdeMode::A3);
        const auto fed = velocity(cfg, params, Terrain::flat(), dom, OdeMode::A3Prime);
        double m = 0.0;
        for (std::size_t j = 0; j < base.c.size(); ++j)
            m = std::max(m, std::abs(fed.c[j] - base.c[j]));
        return m;
    };
    const double d1 = dev(0.5);   // delta ~ 0.012
    const double d2 = dev(1.0);   // delta four times smaller
    CHECK(d1 > 0.0);
    CHECK(d1 / d2 > 2.8);
    CHECK(d1 / d2 < 5.2);
}

TEST_CASE("seven irregular pulses relax to equal spacing between walls") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    const auto cfg = config_at({0.9, 1.8, 3.2, 4.0, 5.6, 7.4, 8.7});
    const auto traj = integrate(cfg, params, Terrain::flat(), dom, 0.0, 2e6, OdeMode::A3);
    CHECK(traj.reason == Trajectory::Reason::OdeFixedPoint);
    const auto& P = traj.P_final();
    for (int j = 0; j < 7; ++j)
        CHECK(std::abs(P[j] - (2.0 * j + 1.0) * 10.0 / 14.0) <= 1e-4);
    for (std::size_t k = 1; k < traj.t.size(); ++k) CHECK(traj.t[k] > traj.t[k - 1]);
    for (const auto& row : traj.u0)
        for (double u : row) CHECK(u > 0.0);
}

TEST_CASE("single pulse between walls settles at the midpoint") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    // Wall forces at half-domain range are ~e^{-L}, so the tail is slow.
    const auto traj =
        integrate(config_at({3.0}), params, Terrain::flat(), dom, 0.0, 2e7, OdeMode::A3Prime);
    CHECK(traj.reason == Trajectory::Reason::OdeFixedPoint);
    CHECK(std::abs(traj.P_final()[0] - 5.0) <= 3e-4);
}

TEST_CASE("short spans end at the requested time") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    IntegrateOptions opts;
    opts.stop_at_fixed_point = false;
    const auto traj = integrate(config_at({2.0, 8.0}), params, Terrain::flat(), dom, 0.0, 10.0,
                                OdeMode::A3, {}, opts);
    CHECK(traj.reason == Trajectory::Reason::TEnd);
    CHECK(traj.t.back() == 10.0);
}

TEST_CASE("monitors localize a threshold crossing on the dense output") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    std::vector<Monitor> mons;
    mons.push_back({"threshold", [](double, const std::vector<double>& P) {
                        return 2.4 - P[0];
                    }});
    const auto traj = integrate(config_at({2.0, 8.0}), params, Terrain::flat(), dom, 0.0, 50000.0,
                                OdeMode::A3, mons);
    CHECK(traj.reason == Trajectory::Reason::Event);
    CHECK(traj.event_name == "threshold");
    CHECK(std::abs(traj.P_final()[0] - 2.4) <= 1e-5);
    CHECK(traj.t_final == traj.t.back());
}

TEST_CASE("a monitor that is already nonpositive fires at the start time") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    std::vector<Monitor> mons;
    mons.push_back({"armed", [](double, const std::vector<double>&) { return -1.0; }});
    const auto traj = integrate(config_at({2.0, 8.0}), params, Terrain::flat(), dom, 0.0, 100.0,
                                OdeMode::A3, mons);
    CHECK(traj.reason == Trajectory::Reason::Event);
    CHECK(traj.event_name == "armed");
    CHECK(traj.t_final == 0.0);
}

TEST_CASE("pulses climbing a shared hill stop on the collision guard") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    const auto terr = Terrain::gaussian(1.0, 5.0);
    IntegrateOptions opts;
    // Stationary gap is near 2.80 here; a guard distance just above it
    // (200 D / sqrt(m) = 2.98) must fire on the way in.
    opts.collision_factor = 200.0;
    const auto traj = integrate(config_at({3.0, 7.0}), params, terr, dom, 0.0, 100000.0,
                                OdeMode::A3, {}, opts);
    CHECK(traj.reason == Trajectory::Reason::Event);
    CHECK(traj.event_name == "collision");
    const auto& P = traj.P_final();
    CHECK(std::abs((P[1] - P[0]) - 200.0 * params.D / std::sqrt(params.m)) <= 1e-3);
}

TEST_CASE("ramped rainfall ends the run at the amplitude existence fold") {
    ModelParams params;
    params.a = Schedule::linear(0.5, -5e-4);
    params.m = 0.45;
    params.D = 0.01;
    // Fold when delta(t) = 1/12, i.e. a = sqrt(12 m^{3/2} D).
    const double a_fold = std::sqrt(12.0 * std::pow(params.m, 1.5) * params.D);
    const double t_fold = (0.5 - a_fold) / 5e-4;
    const auto traj = integrate(config_at({0.0}), params, Terrain::flat(),
                                DomainSpec::unbounded(), 0.0, 1000.0, OdeMode::A3Prime);
    CHECK(traj.reason == Trajectory::Reason::AmplitudeFailure);
    CHECK(std::abs(traj.t_final - t_fold) <= 0.5);
    CHECK(traj.t_final <= t_fold + 1e-6);
}

TEST_CASE("stationary configurations on flat ground are the equally spaced ones") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    const auto fp = fixed_point(2, params, Terrain::flat(), dom, OdeMode::A3);
    CHECK(fp.positions[0] == 2.5);
    CHECK(fp.positions[1] == 7.5);
    const auto fp5 = fixed_point(5, params, Terrain::flat(), dom, OdeMode::A3Prime);
    for (int j = 0; j < 5; ++j) CHECK(fp5.positions[j] == (2.0 * j + 1.0));
}

TEST_CASE("a single pulse on an incline rests uphill of the midpoint") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    for (const auto mode : {OdeMode::A3, OdeMode::A3Prime}) {
        const auto fp = fixed_point(1, params, Terrain::constant_slope(1.0), dom, mode);
        CHECK(fp.positions[0] > 5.0);
        const auto v = velocity(fp, params, Terrain::constant_slope(1.0), dom, mode);
        CHECK(std::abs(v.c[0]) <= 1e-10);
    }
}

TEST_CASE("a hill with an unstable crest trips the uniqueness guard") {
    // For these parameters the crest equilibrium is flanked by two stable
    // shoulder equilibria, so a stationary configuration is not unique.
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    const auto terr = Terrain::gaussian(1.0, 5.0);
    CHECK_THROWS_AS(fixed_point(1, params, terr, dom, OdeMode::A3), NumericalError);

    // The two shoulder rest points are mirror images about the crest.
    const auto left =
        integrate(config_at({4.2}), params, terr, dom, 0.0, 1e6, OdeMode::A3);
    const auto right =
        integrate(config_at({5.8}), params, terr, dom, 0.0, 1e6, OdeMode::A3);
    CHECK(left.reason == Trajectory::Reason::OdeFixedPoint);
    CHECK(right.reason == Trajectory::Reason::OdeFixedPoint);
    const double pl = left.P_final()[0], pr = right.P_final()[0];
    CHECK(pl > 4.4);
    CHECK(pl < 4.7);
    CHECK(std::abs((5.0 - pl) - (pr - 5.0)) <= 1e-4);
}

TEST_CASE("invalid integration requests are rejected") {
    const auto params = flat_params();
    const auto dom = DomainSpec::neumann(10.0);
    CHECK_THROWS_AS(integrate(config_at({2.0, 8.0}), params, Terrain::flat(), dom, 1.0, 0.0,
                              OdeMode::A3),
                    ValidationError);
    CHECK_THROWS_AS(fixed_point(1, params, Terrain::flat(), DomainSpec::periodic(10.0),
                                OdeMode::A3),
                    ValidationError);
    CHECK_THROWS_AS(regular_speed(-1.0, 0.5, params, OdeMode::A3), ValidationError);
    CHECK_THROWS_AS(regular_speed(2.0, 0.5, params_for_delta(0.2), OdeMode::A3Prime),
                    NumericalError);
}

}
