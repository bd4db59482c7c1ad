#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kgs/amplitudes.hpp"
#include "kgs/model.hpp"

namespace kgs {

// A3: strict low feed-rate limit, kappa = 1 everywhere.
// A3Prime: amplitudes feed back through kappa = 1 - delta*u0 (Newton solve).
enum class OdeMode { A3, A3Prime };

struct Velocity {
    std::vector<double> dPdt;
    double prefactor = 0.0;   // D a^2 / (m sqrt(m))
    std::vector<double> c;    // dPdt = prefactor * c
    std::vector<double> u0;   // amplitudes behind the edge derivatives
};

// dP_j/dt = (prefactor/6) [U~_x(P_j^+)^2 - U~_x(P_j^-)^2], derivatives per mode.
Velocity velocity(const PulseConfig& config, const ModelParams& params,
                  const Terrain& terrain, const DomainSpec& domain, OdeMode mode);

// Event probe evaluated on accepted steps and during bisection. An event
// fires when the value crosses from positive to <= 0.
struct Monitor {
    std::string name;
    std::function<double(double t, const std::vector<double>& P)> value;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> P;
    std::vector<std::vector<double>> u0;
    std::vector<double> a;

    enum class Reason { TEnd, Event, OdeFixedPoint, AmplitudeFailure, StepUnderflow };
    Reason reason = Reason::TEnd;
    std::string event_name;   // set when reason == Event
    double t_final = 0.0;

    const std::vector<double>& P_final() const { return P.back(); }
    const std::vector<double>& u0_final() const { return u0.back(); }
};

struct IntegrateOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double collision_factor = 10.0;   // collision_tol = factor * D / sqrt(m)
    double fixed_point_tol = 1e-10;
    double event_tol_factor = 1e-6;   // event bisection dt_tol = factor * span
    bool stop_at_fixed_point = true;
    double max_dt_fraction = 1.0 / 64.0;  // cap dt so monitors are sampled
    long max_steps = 2000000;
};

// Adaptive 5(4) Runge-Kutta with dense output. Amplitudes are re-solved at
// every derivative evaluation in A3Prime mode (warm-started); monitors are
// checked on accepted steps and events localized by bisection on the dense
// interpolant. A collision monitor (min spacing vs collision_tol) is always
// installed; a fixed-point stop applies when the rainfall schedule is
// constant.
Trajectory integrate(const PulseConfig& config, const ModelParams& params,
                     const Terrain& terrain, const DomainSpec& domain,
                     double t0, double t1, OdeMode mode,
                     const std::vector<Monitor>& monitors = {},
                     const IntegrateOptions& opts = {});

// Unique stationary configuration on a Neumann domain; closed form for flat
// ground, damped Newton with multi-start uniqueness check otherwise.
PulseConfig fixed_point(int N, const ModelParams& params, const Terrain& terrain,
                        const DomainSpec& domain, OdeMode mode);

// Uphill drift speed of a regular pattern with wavelength d on slope H.
double regular_speed(double d, double H, const ModelParams& params, OdeMode mode);

// d -> infinity limit of regular_speed: the solitary-pulse drift speed.
double homoclinic_speed(double H, const ModelParams& params, OdeMode mode);

// Spacing at which uphill drift of the lowest pulse is exactly balanced;
// +inf for H <= 0 (no balance on flat or downhill-opening terrain).
double colonization_wavelength(double H, const ModelParams& params);

}  // namespace kgs
