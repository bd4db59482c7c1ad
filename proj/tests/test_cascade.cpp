#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgs/cascade.hpp"

using namespace kgs;

namespace {

ModelParams ramp_params(double a0, double rate, double m, double D = 0.01) {
    ModelParams p;
    p.a = rate == 0.0 ? Schedule::constant(a0) : Schedule::linear(a0, rate);
    p.m = m;
    p.D = D;
    return p;
}

PulseConfig pulses(std::vector<double> pos) {
    PulseConfig c;
    c.positions = std::move(pos);
    return c;
}

SpectrumReport report_with(std::vector<cplx> lambdas, std::vector<double> K,
                           std::vector<std::vector<int>> signs = {}, int critical = -1) {
    SpectrumReport rep;
    rep.mode = SpectrumMode::Csp;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        SpectrumEntry e;
        e.lambda = lambdas[i];
        if (i < signs.size()) e.sign_pattern = signs[i];
        rep.eigenvalues.push_back(e);
    }
    rep.K = std::move(K);
    rep.critical_pulse = critical;
    return rep;
}

MonitorPoint synthetic(double t, bool solvable, double max_re) {
    MonitorPoint p;
    p.t = t;
    p.amplitudes_ok = solvable;
    p.spectrum_ok = solvable;
    p.max_re = max_re;
    return p;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

}  // namespace

TEST_SUITE("cascade") {

TEST_CASE("pattern classification needs tight weights and a clustered mode") {
    const auto cfg4 = pulses({1.0, 2.0, 3.0, 4.0});
    const auto cfg3 = pulses({1.0, 2.0, 3.0});

    SUBCASE("tight weights with a companion eigenvalue read as regular") {
        auto rep = report_with({{-0.01, 0.0}, {-0.012, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}},
                               {2.0, 2.02, 1.98, 2.01});
        CHECK(classify_pattern(cfg4, rep) == PatternClass::Regular);
    }
    SUBCASE("spread carrying values read as irregular") {
        auto rep = report_with({{-0.01, 0.0}, {-0.012, 0.0}, {-0.5, 0.0}}, {1.8, 2.4, 1.9});
        CHECK(classify_pattern(cfg3, rep) == PatternClass::Irregular);
    }
    SUBCASE("a lone critical eigenvalue reads as irregular even with equal weights") {
        auto rep = report_with({{-0.01, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}}, {2.0, 2.0, 2.0});
        CHECK(classify_pattern(cfg3, rep) == PatternClass::Irregular);
    }
    SUBCASE("hysteresis keeps a borderline pattern in its previous class") {
        auto rep = report_with({{-0.01, 0.0}, {-0.012, 0.0}, {-0.6, 0.0}}, {2.0, 2.0, 2.124});
        CHECK(classify_pattern(cfg3, rep) == PatternClass::Irregular);
        CHECK(classify_pattern(cfg3, rep, {}, PatternClass::Regular) == PatternClass::Regular);
        auto wide = report_with({{-0.01, 0.0}, {-0.012, 0.0}, {-0.6, 0.0}}, {2.0, 2.0, 2.15});
        CHECK(classify_pattern(cfg3, wide, {}, PatternClass::Regular) ==
              PatternClass::Irregular);
    }
    SUBCASE("a single pulse is never regular") {
        auto rep = report_with({{-0.01, 0.0}}, {2.0});
        CHECK(classify_pattern(pulses({5.0}), rep) == PatternClass::Irregular);
    }
}

TEST_CASE("single removal targets the largest carrying value") {
    const auto cfg = pulses({1.0, 2.0, 3.0});
    auto rep = report_with({{-0.001, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}}, {1.8, 2.4, 1.9},
                           {{1, 1, 1}}, 1);
    auto dec = select_removal(rep, cfg);
    CHECK(dec.kind == RemovalKind::Single);
    CHECK(dec.pattern == PatternClass::Irregular);
    CHECK(dec.removed == std::vector<int>{1});
    CHECK_FALSE(dec.ambiguity);
    CHECK_FALSE(dec.weight_mismatch);

    rep.critical_pulse = 0;
    CHECK(select_removal(rep, cfg).weight_mismatch);
}

TEST_CASE("alternating regular mode halves the pattern with a parity flag") {
    const auto cfg = pulses({1.0, 2.0, 3.0, 4.0});
    auto rep = report_with({{-0.001, 0.0}, {-0.002, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}},
                           {2.0, 2.0, 2.0, 2.0}, {{1, -1, 1, -1}});
    auto dec = select_removal(rep, cfg);
    CHECK(dec.pattern == PatternClass::Regular);
    CHECK(dec.kind == RemovalKind::PeriodDoubling);
    CHECK(dec.removed == std::vector<int>{1, 3});
    CHECK(dec.parity == 1);
    CHECK(dec.ambiguity);

    auto flipped = select_removal(rep, cfg, {}, true);
    CHECK(flipped.removed == std::vector<int>{0, 2});
    CHECK(flipped.parity == 0);
    CHECK(flipped.ambiguity);
}

TEST_CASE("single signed regular mode collapses the whole pattern") {
    const auto cfg = pulses({1.0, 2.0, 3.0, 4.0});
    auto rep = report_with({{-0.001, 0.0}, {-0.002, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}},
                           {2.0, 2.0, 2.0, 2.0}, {{1, 1, 1, 1}});
    auto dec = select_removal(rep, cfg);
    CHECK(dec.kind == RemovalKind::FullCollapse);
    CHECK(dec.removed == std::vector<int>{0, 1, 2, 3});
    CHECK_FALSE(dec.ambiguity);

    // a mixed sign pattern fits no family rule, the strongest pulse goes
    auto mixed = report_with({{-0.001, 0.0}, {-0.002, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}},
                             {2.0, 2.0, 2.02, 2.0}, {{1, -1, -1, 1}});
    auto fallback = select_removal(mixed, cfg);
    CHECK(fallback.kind == RemovalKind::Single);
    CHECK(fallback.removed == std::vector<int>{2});
    CHECK(fallback.ambiguity);
}

TEST_CASE("a top tie escalates an irregular pattern to the family rules") {
    const auto cfg = pulses({1.0, 2.0, 3.0});
    auto rep = report_with({{-0.001, 0.0}, {-0.5, 0.0}, {-0.9, 0.0}}, {1.0, 2.39, 2.40},
                           {{1, -1, 1}});
    auto dec = select_removal(rep, cfg);
    CHECK(dec.pattern == PatternClass::Irregular);
    CHECK(dec.kind == RemovalKind::PeriodDoubling);
    CHECK(dec.removed == std::vector<int>{1});
    CHECK(dec.ambiguity);
}

TEST_CASE("crossing localization meets time and eigenvalue tolerances") {
    SUBCASE("a sign change is pinned to the eigenvalue tolerance") {
        auto probe = [](double t) { return synthetic(t, true, 0.37 * (t - 3.0)); };
        const double te = detect_crossing(probe, probe(0.0), probe(10.0), 0.5, 1e-6);
        CHECK(te <= 3.0);
        CHECK(3.0 - te < 1e-5);
    }
    SUBCASE("an existence fold is pinned to the time tolerance from below") {
        auto probe = [](double t) { return synthetic(t, t < 4.0, -1.0); };
        const double te = detect_crossing(probe, probe(0.0), probe(10.0), 1e-6, 1e-6);
        CHECK(te < 4.0);
        CHECK(4.0 - te <= 2e-6);
    }
    SUBCASE("an earlier sign change wins over a later fold") {
        auto probe = [](double t) { return synthetic(t, t < 4.0, t - 3.0); };
        const double te = detect_crossing(probe, probe(0.0), probe(10.0), 1e-3, 1e-6);
        CHECK(te <= 3.0);
        CHECK(3.0 - te < 1e-5);
    }
    SUBCASE("malformed brackets are refused") {
        auto probe = [](double t) { return synthetic(t, true, t - 3.0); };
        CHECK_THROWS_AS(detect_crossing(probe, probe(5.0), probe(10.0), 1e-6, 1e-6),
                        ValidationError);
        CHECK_THROWS_AS(detect_crossing(probe, probe(0.0), probe(2.0), 1e-6, 1e-6),
                        ValidationError);
        CHECK_THROWS_AS(detect_crossing(probe, probe(2.0), probe(1.0), 1e-6, 1e-6),
                        ValidationError);
    }
}

TEST_CASE("a single pulse on a declining ramp dies at the existence fold") {
    const auto params = ramp_params(0.5, -5e-4, 0.45);
    const auto domain = DomainSpec::neumann(10.0);
    CascadeOptions opts;
    opts.tuning.monitor_points = 16;

    const auto trace = run_cascade(pulses({5.0}), params, Terrain::flat(), domain, 1000.0,
                                   SpectrumChoice::Csp, opts);
    REQUIRE(trace.segments.size() == 1);
    REQUIRE(trace.segments[0].event.has_value());
    CHECK(trace.terminal == CascadeTrace::Terminal::Extinct);

    const auto& ev = *trace.segments[0].event;
    CHECK(ev.removed == std::vector<int>{0});
    CHECK(ev.kind == RemovalKind::Single);
    CHECK(ev.pattern == PatternClass::Irregular);
    CHECK(ev.bifurcation == Bifurcation::SaddleNode);
    CHECK(std::abs(ev.lambda.imag()) <= 1e-3);
    CHECK(std::abs(ev.a - 0.19032) < 0.05 * 0.19032);
    CHECK(ev.t == doctest::Approx((0.5 - ev.a) / 5e-4).epsilon(1e-6));
}

TEST_CASE("five pulse competition removes the crowded pulse at a hopf crossing") {
    const auto params = ramp_params(5.0, -5e-3, 10.0);
    const auto domain = DomainSpec::neumann(10.0);
    CascadeOptions opts;
    opts.tuning.monitor_points = 12;

    const auto trace = run_cascade(pulses({1.0, 3.0, 4.0, 5.6, 8.0}), params, Terrain::flat(),
                                   domain, 420.0, SpectrumChoice::Csp, opts);
    const auto events = trace.events();
    REQUIRE(!events.empty());
    CHECK(trace.terminal != CascadeTrace::Terminal::Failed);

    const auto& ev = events.front();
    CHECK(ev.bifurcation == Bifurcation::Hopf);
    CHECK(ev.pattern == PatternClass::Irregular);
    CHECK(ev.kind == RemovalKind::Single);
    CHECK(ev.removed == std::vector<int>{2});
    CHECK(std::abs(ev.lambda.imag()) > 0.3);
    CHECK(std::abs(ev.lambda.imag()) < 0.65);
    CHECK(std::abs(ev.lambda.real()) < 1e-4);
    CHECK(ev.a > 2.66);
    CHECK(ev.a < 3.26);
}

TEST_CASE("a regular train splits by period doubling and cascades to extinction") {
    const auto params = ramp_params(0.25, -5e-4, 0.45);
    const auto domain = DomainSpec::periodic(8.0);
    const auto initial = pulses({1.0, 3.0, 5.0, 7.0});
    CascadeOptions opts;
    opts.tuning.monitor_points = 16;

    const auto trace = run_cascade(initial, params, Terrain::flat(), domain, 125.0,
                                   SpectrumChoice::Csp, opts);
    const auto events = trace.events();
    REQUIRE(events.size() >= 2);
    CHECK(trace.terminal == CascadeTrace::Terminal::Extinct);

    const auto& first = events.front();
    CHECK(first.pattern == PatternClass::Regular);
    CHECK(first.kind == RemovalKind::PeriodDoubling);
    CHECK(first.removed == std::vector<int>{1, 3});
    CHECK(first.ambiguity);
    CHECK(first.bifurcation == Bifurcation::SaddleNode);
    CHECK(first.a > 0.20);
    CHECK(first.a < 0.24);

    // dimensions strictly decrease and every stored row stays ordered
    int prev_n = initial.n() + 1;
    for (const auto& seg : trace.segments) {
        CHECK(seg.n_pulses < prev_n);
        prev_n = seg.n_pulses;
        for (const auto& row : seg.trajectory.P) CHECK(strictly_increasing(row));
        for (const auto& row : seg.trajectory.u0)
            for (double u : row) CHECK(u > 0.0);
    }

    CascadeOptions flip = opts;
    flip.parity_flip = true;
    const auto other = run_cascade(initial, params, Terrain::flat(), domain, 65.0,
                                   SpectrumChoice::Csp, flip);
    REQUIRE(!other.events().empty());
    CHECK(other.events().front().removed == std::vector<int>{0, 2});
}

TEST_CASE("a regular train at high kill rate halves by an anti-phase hopf") {
    // at large m the in-phase and anti-phase bands nearly coincide; the
    // coupled solver resolves the splitting and puts the anti-phase comb
    // first at this spacing, so the halving fires before any collapse
    const auto params = ramp_params(3.0, -5e-3, 10.0);
    const auto domain = DomainSpec::periodic(8.0);
    CascadeOptions opts;
    opts.tuning.monitor_points = 12;

    const auto trace = run_cascade(pulses({1.0, 3.0, 5.0, 7.0}), params, Terrain::flat(),
                                   domain, 150.0, SpectrumChoice::Csp, opts);
    const auto events = trace.events();
    REQUIRE(!events.empty());

    const auto& ev = events.front();
    CHECK(ev.pattern == PatternClass::Regular);
    CHECK(ev.kind == RemovalKind::PeriodDoubling);
    CHECK(ev.removed == std::vector<int>{1, 3});
    CHECK(ev.bifurcation == Bifurcation::Hopf);
    CHECK(std::abs(ev.lambda.imag()) > 0.3);
    CHECK(std::abs(ev.lambda.imag()) < 0.65);
    CHECK(ev.a > 2.48);
    CHECK(ev.a < 2.74);

    // the surviving pair at twice the spacing stays above its own
    // crossing until the end of the run
    REQUIRE(trace.segments.size() == 2);
    CHECK(!trace.segments.back().event.has_value());
    CHECK(trace.segments.back().n_pulses == 2);
    CHECK(trace.terminal == CascadeTrace::Terminal::TEnd);
}

TEST_CASE("an initially unstable pattern loses a pulse before any integration") {
    const auto params = ramp_params(3.25, 0.0, 10.0);
    const auto domain = DomainSpec::neumann(10.0);
    CascadeOptions opts;
    opts.tuning.monitor_points = 8;

    const auto trace = run_cascade(pulses({1.0, 3.0, 4.0, 5.6, 8.0}), params, Terrain::flat(),
                                   domain, 2.0, SpectrumChoice::Csp, opts);
    REQUIRE(trace.segments.size() >= 2);
    REQUIRE(trace.segments[0].event.has_value());

    const auto& ev = *trace.segments[0].event;
    CHECK(ev.t == 0.0);
    CHECK(ev.removed == std::vector<int>{2});
    CHECK(ev.bifurcation == Bifurcation::Hopf);
    CHECK(trace.segments[0].trajectory.t.size() == 1);
    CHECK(!trace.segments.back().event.has_value());
    CHECK(trace.terminal == CascadeTrace::Terminal::TEnd);
}

TEST_CASE("cascades reject setups outside the theory") {
    const auto params = ramp_params(0.5, -5e-4, 0.45);
    const auto domain = DomainSpec::neumann(10.0);
    CHECK_THROWS_AS(run_cascade(pulses({5.0}), params, Terrain::gaussian(0.5, 5.0), domain,
                                100.0),
                    ValidationError);
    CHECK_THROWS_AS(run_cascade(pulses({5.0}), params, Terrain::flat(), domain, 0.0),
                    ValidationError);
}

}  // TEST_SUITE
