#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgs/nlep.hpp"
#include "kgs/pulse_ode.hpp"

namespace kgs {

// Spectrum backend monitored along a cascade. Auto runs the coupled solve
// and falls back to the decoupled one if it fails (noted on the trace).
enum class SpectrumChoice { Dsp, Csp, SmallM, Auto };

enum class PatternClass { Irregular, Regular };
enum class Bifurcation { SaddleNode, Hopf };
enum class RemovalKind { Single, PeriodDoubling, FullCollapse };

struct CascadeTuning {
    double regularity_tol = 0.05;   // relative spread of K_j for regularity
    double cluster_tol = 0.10;      // clustering radius as fraction of spectral diameter
    double hopf_tol = 1e-3;         // |Im lambda| separating the bifurcation classes
    double lambda_tol = 1e-6;       // |max Re lambda| demanded at a localized crossing
    double dt_tol_factor = 1e-6;    // event bisection width as fraction of the run span
    double dt_guard_factor = 0.01;  // follow-up window of the subcriticality proxy
    int monitor_points = 40;        // spectrum checkpoints per segment
};

// Regular means the pattern destabilizes as a near-degenerate family:
// the carrying values K_j are nearly equal AND at least one further
// eigenvalue clusters with the critical one. previous applies hysteresis:
// a pattern already classified regular tolerates 1.25x the spread before
// flipping back.
PatternClass classify_pattern(const PulseConfig& config, const SpectrumReport& report,
                              const CascadeTuning& tuning = {},
                              std::optional<PatternClass> previous = std::nullopt);

struct RemovalDecision {
    RemovalKind kind = RemovalKind::Single;
    PatternClass pattern = PatternClass::Irregular;
    std::vector<int> removed;  // 0-based, ascending, nonempty
    int parity = 1;            // period doubling: 0-based offset of the removed comb
    bool ambiguity = false;
    // Set when the dominant eigenfunction weight disagrees with argmax K_j
    // (the removal conjecture); the argmax rule still decides.
    bool weight_mismatch = false;
};

// Removal rules at a boundary crossing: irregular patterns lose the pulse
// with the largest K_j; regular patterns with a strictly alternating
// critical mode lose every other pulse (parity is not decidable, flag set);
// regular patterns with a single-signed critical mode collapse fully.
// A near-tie of the top K_j escalates an irregular pattern to the regular
// rules; a mixed sign pattern falls back to single removal, flagged.
RemovalDecision select_removal(const SpectrumReport& report, const PulseConfig& config,
                               const CascadeTuning& tuning = {}, bool parity_flip = false,
                               std::optional<PatternClass> previous = std::nullopt);

struct CascadeEvent {
    double t = 0.0;
    double a = 0.0;
    Bifurcation bifurcation = Bifurcation::SaddleNode;
    PatternClass pattern = PatternClass::Irregular;
    RemovalKind kind = RemovalKind::Single;
    std::vector<int> removed;  // 0-based indices into the segment's pulses
    int parity = 1;
    cplx lambda;               // critical eigenvalue at the crossing
    bool ambiguity = false;
    bool from_existence_fold = false;  // localized by amplitude-solve failure
};

struct CascadeSegment {
    Trajectory trajectory;
    std::optional<CascadeEvent> event;  // absent on the terminal segment
    int n_pulses = 0;
};

struct CascadeTrace {
    std::vector<CascadeSegment> segments;
    enum class Terminal { Extinct, OdeFixedPoint, TEnd, Failed };
    Terminal terminal = Terminal::TEnd;
    std::string failure;             // set when terminal == Failed
    std::vector<std::string> notes;  // fallbacks, conjecture mismatches

    std::vector<CascadeEvent> events() const;
};

// One spectrum evaluation along a trajectory. amplitudes_ok false marks the
// existence fold; spectrum_ok false (with solvable amplitudes) marks a
// spectrum-solver failure, which aborts a cascade rather than masquerading
// as a bifurcation.
struct MonitorPoint {
    double t = 0.0;
    bool amplitudes_ok = false;
    bool spectrum_ok = false;
    double max_re = 0.0;
};

// Bisection between a stable monitor point and an unstable or unsolvable
// one. Returns the last stable time: within dt_tol of the crossing and,
// for a sign change, with |max Re lambda| <= lambda_tol there.
double detect_crossing(const std::function<MonitorPoint(double)>& probe, MonitorPoint lo,
                       MonitorPoint hi, double dt_tol, double lambda_tol);

struct CascadeOptions {
    OdeMode ode_mode = OdeMode::A3Prime;
    bool parity_flip = false;
    CascadeTuning tuning;
    IntegrateOptions integrate;
};

// Integrates pulse positions while monitoring the quasi-steady spectrum;
// at each stability-boundary crossing (or existence fold) classifies the
// bifurcation, removes pulses, and restarts with the survivors, until
// extinction, a stable fixed point under constant rainfall, or t_end.
// Requires constant-slope terrain (the spectrum theory assumes it).
CascadeTrace run_cascade(const PulseConfig& initial, const ModelParams& params,
                         const Terrain& terrain, const DomainSpec& domain, double t_end,
                         SpectrumChoice mode = SpectrumChoice::Auto,
                         const CascadeOptions& options = {});

}  // namespace kgs
