#pragma once

#include <string>
#include <vector>

#include "kgs/common.hpp"

namespace kgs {

// Rainfall over time. Non-increasing by construction; evaluation clamps to
// the last breakpoint and floors at 1e-12 so a(t) stays positive.
struct Schedule {
    enum class Kind { Constant, Linear, Piecewise };
    Kind kind = Kind::Constant;
    double a0 = 0.5;
    double rate = 0.0;
    std::vector<double> t_break;
    std::vector<double> a_break;

    static Schedule constant(double a0);
    static Schedule linear(double a0, double rate);
    static Schedule piecewise(std::vector<double> t, std::vector<double> a);

    double operator()(double t) const;
    bool is_constant() const { return kind == Kind::Constant || rate == 0.0; }
    void validate() const;
};

struct ModelParams {
    Schedule a;
    double m = 0.45;
    double D = 0.01;

    void validate() const;
};

// Terrain profile h(x). constant_slope keeps h_xx identically zero; the
// tabulated variant interpolates with a natural cubic spline so h_xx is the
// spline's own second derivative.
struct Terrain {
    enum class Kind { ConstantSlope, Gaussian, Tabulated };
    Kind kind = Kind::ConstantSlope;
    double H = 0.0;
    double B = 0.0;
    double center = 0.0;
    std::vector<double> xs, hs, d2h;

    static Terrain flat() { return constant_slope(0.0); }
    static Terrain constant_slope(double H);
    static Terrain gaussian(double B, double center);
    static Terrain tabulated(std::vector<double> xs, std::vector<double> hs);

    struct Eval {
        double h, hx, hxx;
    };
    Eval eval(double x) const;

    bool is_constant_slope() const { return kind == Kind::ConstantSlope; }
    bool is_flat() const { return is_constant_slope() && H == 0.0; }
    double slope() const { return H; }
};

struct DomainSpec {
    enum class Kind { Unbounded, Periodic, Neumann };
    Kind kind = Kind::Unbounded;
    double L = 0.0;

    static DomainSpec unbounded() { return {Kind::Unbounded, 0.0}; }
    static DomainSpec periodic(double L) { return {Kind::Periodic, L}; }
    static DomainSpec neumann(double L) { return {Kind::Neumann, L}; }

    bool bounded() const { return kind != Kind::Unbounded; }
    void validate() const;
};

struct PulseConfig {
    double t = 0.0;
    std::vector<double> positions;
    std::vector<double> amplitudes;

    int n() const { return static_cast<int>(positions.size()); }
    void validate(const DomainSpec& dom) const;
};

struct AssumptionEntry {
    std::string name;
    double value = 0.0;
    enum class Verdict { Holds, Marginal, Violated } verdict = Verdict::Holds;
};

struct AssumptionReport {
    std::vector<AssumptionEntry> entries;
    double delta = 0.0;
    bool a3_strict = true;

    std::string mode() const { return a3_strict ? "A3-strict" : "A3'"; }
};

// Evaluates the six smallness ratios at time t. Never aborts: verdicts are
// advisory and downstream modules decide what to do with violations.
// Slope suprema are taken over [0,L] when a bounded domain is given,
// otherwise over the terrain's own sampled range.
AssumptionReport check_assumptions(const ModelParams& params, const Terrain& terrain,
                                   double t, const DomainSpec* domain = nullptr);

inline Terrain::Eval eval_terrain(const Terrain& terrain, double x) {
    return terrain.eval(x);
}

}  // namespace kgs
