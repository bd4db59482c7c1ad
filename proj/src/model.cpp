#include "kgs/model.hpp"

#include <algorithm>
#include <cmath>

namespace kgs {

namespace {

constexpr double kAFloor = 1e-12;

AssumptionEntry::Verdict verdict_of(double value) {
    if (value < 0.1) return AssumptionEntry::Verdict::Holds;
    if (value <= 1.0) return AssumptionEntry::Verdict::Marginal;
    return AssumptionEntry::Verdict::Violated;
}

}  // namespace

Schedule Schedule::constant(double a0) {
    Schedule s;
    s.kind = Kind::Constant;
    s.a0 = a0;
    s.validate();
    return s;
}

Schedule Schedule::linear(double a0, double rate) {
    Schedule s;
    s.kind = Kind::Linear;
    s.a0 = a0;
    s.rate = rate;
    s.validate();
    return s;
}

Schedule Schedule::piecewise(std::vector<double> t, std::vector<double> a) {
    Schedule s;
    s.kind = Kind::Piecewise;
    s.t_break = std::move(t);
    s.a_break = std::move(a);
    s.validate();
    return s;
}

void Schedule::validate() const {
    switch (kind) {
        case Kind::Constant:
            if (!(a0 > 0.0)) throw ValidationError("schedule: constant a must be > 0");
            break;
        case Kind::Linear:
            if (!(a0 > 0.0)) throw ValidationError("schedule: initial a must be > 0");
            if (rate > 0.0) throw ValidationError("schedule: rate must be <= 0 (non-increasing a)");
            break;
        case Kind::Piecewise: {
            if (t_break.size() != a_break.size() || t_break.size() < 2)
                throw ValidationError("schedule: piecewise needs >=2 matching breakpoints");
            for (size_t i = 1; i < t_break.size(); ++i) {
                if (!(t_break[i] > t_break[i - 1]))
                    throw ValidationError("schedule: breakpoint times must strictly increase");
                if (a_break[i] > a_break[i - 1])
                    throw ValidationError("schedule: a values must be non-increasing");
            }
            if (!(a_break.front() > 0.0))
                throw ValidationError("schedule: a values must be > 0");
            break;
        }
    }
}

double Schedule::operator()(double t) const {
    double a;
    switch (kind) {
        case Kind::Constant:
            a = a0;
            break;
        case Kind::Linear:
            a = a0 + rate * t;
            break;
        case Kind::Piecewise: {
            if (t <= t_break.front()) {
                a = a_break.front();
            } else if (t >= t_break.back()) {
                a = a_break.back();
            } else {
                auto it = std::upper_bound(t_break.begin(), t_break.end(), t);
                size_t i = static_cast<size_t>(it - t_break.begin());
                double w = (t - t_break[i - 1]) / (t_break[i] - t_break[i - 1]);
                a = a_break[i - 1] + w * (a_break[i] - a_break[i - 1]);
            }
            break;
        }
        default:
            a = a0;
    }
    return std::max(a, kAFloor);
}

void ModelParams::validate() const {
    a.validate();
    if (!(m > 0.0)) throw ValidationError("params: m must be > 0");
    if (!(D > 0.0 && D < 1.0)) throw ValidationError("params: D must satisfy 0 < D < 1");
}

Terrain Terrain::constant_slope(double H) {
    Terrain t;
    t.kind = Kind::ConstantSlope;
    t.H = H;
    return t;
}

Terrain Terrain::gaussian(double B, double center) {
    if (!(B >= 0.0)) throw ValidationError("terrain: gaussian B must be >= 0");
    Terrain t;
    t.kind = Kind::Gaussian;
    t.B = B;
    t.center = center;
    return t;
}

Terrain Terrain::tabulated(std::vector<double> xs, std::vector<double> hs) {
    if (xs.size() != hs.size() || xs.size() < 3)
        throw ValidationError("terrain: table needs >=3 matching samples");
    for (size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw ValidationError("terrain: table x values must strictly increase");

    // Natural cubic spline second derivatives via the standard tridiagonal
    // sweep; natural ends keep the interpolant C^2 across the whole table.
    size_t n = xs.size();
    std::vector<double> d2(n, 0.0), u(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        double sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
        double p = sig * d2[i - 1] + 2.0;
        d2[i] = (sig - 1.0) / p;
        double rhs = (hs[i + 1] - hs[i]) / (xs[i + 1] - xs[i]) -
                     (hs[i] - hs[i - 1]) / (xs[i] - xs[i - 1]);
        u[i] = (6.0 * rhs / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
    }
    for (size_t i = n - 1; i-- > 1;) d2[i] = d2[i] * d2[i + 1] + u[i];
    d2[0] = d2[n - 1] = 0.0;

    Terrain t;
    t.kind = Kind::Tabulated;
    t.xs = std::move(xs);
    t.hs = std::move(hs);
    t.d2h = std::move(d2);
    return t;
}

Terrain::Eval Terrain::eval(double x) const {
    switch (kind) {
        case Kind::ConstantSlope:
            return {H * x, H, 0.0};
        case Kind::Gaussian: {
            double dx = x - center;
            double g = std::exp(-B * dx * dx);
            return {g, -2.0 * B * dx * g, (4.0 * B * B * dx * dx - 2.0 * B) * g};
        }
        case Kind::Tabulated: {
            if (x < xs.front() || x > xs.back())
                throw ValidationError("terrain: x outside tabulated range");
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            size_t i = std::min(static_cast<size_t>(it - xs.begin()), xs.size() - 1);
            size_t lo = i - 1;
            double w = xs[i] - xs[lo];
            double A = (xs[i] - x) / w;
            double Bc = (x - xs[lo]) / w;
            double h = A * hs[lo] + Bc * hs[i] +
                       ((A * A * A - A) * d2h[lo] + (Bc * Bc * Bc - Bc) * d2h[i]) * w * w / 6.0;
            double hx = (hs[i] - hs[lo]) / w -
                        (3.0 * A * A - 1.0) * w * d2h[lo] / 6.0 +
                        (3.0 * Bc * Bc - 1.0) * w * d2h[i] / 6.0;
            double hxx = A * d2h[lo] + Bc * d2h[i];
            return {h, hx, hxx};
        }
    }
    return {0.0, 0.0, 0.0};
}

void DomainSpec::validate() const {
    if (bounded() && !(L > 0.0))
        throw ValidationError("domain: bounded variants need L > 0");
}

void PulseConfig::validate(const DomainSpec& dom) const {
    for (size_t i = 1; i < positions.size(); ++i)
        if (!(positions[i] > positions[i - 1]))
            throw ValidationError("pulses: positions must strictly increase");
    if (dom.bounded() && !positions.empty()) {
        if (!(positions.front() > 0.0) || !(positions.back() < dom.L))
            throw ValidationError("pulses: positions must lie strictly inside (0, L)");
    }
    if (!amplitudes.empty()) {
        if (amplitudes.size() != positions.size())
            throw ValidationError("pulses: amplitude count must match positions");
        for (double u : amplitudes)
            if (!(u > 0.0)) throw ValidationError("pulses: amplitudes must be > 0");
    }
}

AssumptionReport check_assumptions(const ModelParams& params, const Terrain& terrain,
                                   double t, const DomainSpec* domain) {
    double a = params.a(t);
    double m = params.m;
    double D = params.D;

    double sup_hx = 0.0, sup_hxx = 0.0;
    if (terrain.is_constant_slope()) {
        sup_hx = std::abs(terrain.H);
    } else {
        double x_lo, x_hi;
        if (domain && domain->bounded()) {
            x_lo = 0.0;
            x_hi = domain->L;
        } else if (terrain.kind == Terrain::Kind::Tabulated) {
            x_lo = terrain.xs.front();
            x_hi = terrain.xs.back();
        } else {
            x_lo = terrain.center - 10.0;
            x_hi = terrain.center + 10.0;
        }
        const int samples = 2048;
        for (int i = 0; i <= samples; ++i) {
            double x = x_lo + (x_hi - x_lo) * i / samples;
            auto e = terrain.eval(x);
            sup_hx = std::max(sup_hx, std::abs(e.hx));
            sup_hxx = std::max(sup_hxx, std::abs(e.hxx));
        }
    }

    double a2m2 = a * a / (m * m);
    double delta = m * std::sqrt(m) * D / (a * a);

    AssumptionReport rep;
    rep.delta = delta;
    auto add = [&rep](const std::string& name, double value) {
        rep.entries.push_back({name, value, verdict_of(value)});
    };
    add("A1", a2m2);
    add("A2", D * a * a / (m * std::sqrt(m)));
    add("A3", delta);
    add("A4", m * m * D / (a * a));
    add("A5a", delta * sup_hx);
    add("A5b", a2m2 * delta * delta * sup_hxx);
    add("A6", m * m * D / (a * a) * sup_hx);
    rep.a3_strict = verdict_of(delta) == AssumptionEntry::Verdict::Holds;
    return rep;
}

}  // namespace kgs
