#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "kgs/cascade.hpp"
#include "kgs/model.hpp"

namespace kgs {

// Uniform grid over a bounded domain. Periodic grids store one node per
// cell (the right endpoint is the left one); Neumann grids store both ends.
// Unbounded domains map to a Neumann box of length 80.
struct Grid {
    DomainSpec domain;
    double x0 = 0.0;
    double dx = 0.0;
    std::vector<double> x;

    // dx_hint = 0 picks min((D/sqrt(m))/8, L/4096); an explicit hint is
    // honored as-is and only simulate_pde enforces the pulse-width bound.
    static Grid make(const DomainSpec& domain, const ModelParams& params, double dx_hint = 0.0);
    std::size_t n() const { return x.size(); }
};

struct FieldState {
    double t = 0.0;
    double a = 0.0;  // supply snapshot at t
    std::vector<double> U, V;
};

struct PulseSample {
    double position = 0.0;
    double height = 0.0;
};

struct PulseTrack {
    std::vector<double> t, position, height;
    double birth = 0.0;
    double death = std::numeric_limits<double>::infinity();
    bool alive = true;
};

struct PdeOptions {
    double dt = 0.0;          // 0 = explicit-term stability bound at t0
    double safety = 0.5;      // fraction of the stability bound
    double track_stride = 0.5;
    double snapshot_stride = 0.0;  // 0 = first and last only
    double extinction_fraction = 0.01;  // of the initial mean pulse height
    double noise_amplitude = 0.0;       // symmetry-breaking V perturbation
    std::uint64_t noise_seed = 1;
    double blowup_threshold = 1e6;
    std::int64_t max_steps = 200000000;
};

struct PdeRun {
    std::vector<FieldState> snapshots;  // first, strided, last
    std::vector<PulseTrack> tracks;
    FieldState final_state;
    std::vector<double> mass_t, mass_u, mass_v;  // domain integrals per track sample
    double min_v = 0.0;  // most negative V produced before clipping
    double dt = 0.0;
    std::int64_t steps = 0;
};

// Implicit-explicit time stepping of the two-field model: diffusion and
// linear decay implicit (one tridiagonal solve per field and step),
// advection, supply, and the UV^2 exchange explicit (second-order
// extrapolation after a one-step startup). Throws NumericalError on field
// blow-up with the time in the message.
PdeRun simulate_pde(const ModelParams& params, const Terrain& terrain, const Grid& grid,
                    const FieldState& initial, double t_end, const PdeOptions& options = {});

// Quasi-steady profile for a pulse configuration: V as a sum of scaled
// sech^2 cores, U from the steady water equation solved between pulses
// with the core values pinned. Amplitudes are solved when absent.
FieldState build_initial(const PulseConfig& config, const ModelParams& params,
                         const Terrain& terrain, const DomainSpec& domain, const Grid& grid);

// Local maxima of V above the threshold, positions refined by a 3-point
// parabola; maxima closer than 4 dx merge into the higher one.
std::vector<PulseSample> extract_pulses(const FieldState& state, const Grid& grid,
                                        double threshold = 0.0);

struct CompareMetrics {
    std::vector<double> per_pulse_error;      // sup position gap, by initial pulse
    std::vector<double> annihilation_offsets; // PDE death minus ODE removal time
    double max_position_error = 0.0;
    int survivors_ode = 0;
    int survivors_pde = 0;
    bool survivors_match = false;
};

// Position agreement over common lifetimes, matching pulses to tracks by
// initial position. Throws ValidationError when the matching gap exceeds
// a quarter of the smallest initial pulse spacing.
CompareMetrics compare(const CascadeTrace& ode, const std::vector<PulseTrack>& pde_tracks,
                       const DomainSpec& domain);

}  // namespace kgs
