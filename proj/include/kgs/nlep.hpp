#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "kgs/model.hpp"

namespace kgs {

// Inner eigenfunction component on the stretched coordinate. v solves
//   v'' - (1 + lambda) v + 2 w(xi) v = w(xi)^2,  w(xi) = (3/2) sech^2(xi/2)
// on [-xi_max, xi_max] with decay-matched Robin ends. residual is the
// largest defect of the discrete scheme at the returned values.
struct VinProfile {
    cplx lambda;
    std::vector<double> xi;
    std::vector<cplx> v;
    double residual = 0.0;
};

// R(lambda) = integral of w * v_in and C(lambda) = integral of
// (w^2 - 2 w v_in) = 6 - 2R. near_pole marks evaluations within ten
// pole guards of a pole of R.
struct NlepEvaluation {
    cplx lambda;
    cplx R;
    cplx C;
    bool near_pole = false;
};

// Solves the inner problem on a fixed uniform grid (Numerov scheme, complex
// tridiagonal elimination) and integrates the moments with Simpson weights.
// R evaluations are memoized; the cache is not synchronized, keep one
// instance per thread. R has genuine poles at 5/4 and -3/4: evaluation
// throws NumericalError inside pole_guard of either. The square root in the
// Robin ends takes the principal branch, so real lambda below -1 sits on a
// branch cut (essential spectrum) and is refused.
class NlepSolver {
public:
    explicit NlepSolver(double xi_max = 30.0, std::size_t n_points = 2401,
                        double pole_guard = 1e-2);

    VinProfile solve_vin(cplx lambda) const;
    NlepEvaluation eval_R(cplx lambda) const;
    // Centered difference of R; the discretization error field is smooth in
    // lambda, so differencing cancels it.
    cplx R_prime(cplx lambda, double step = 1e-5) const;

    double xi_max() const { return xi_max_; }
    std::size_t n_points() const { return n_; }
    double pole_guard() const { return pole_guard_; }

    static constexpr double pole_plus = 1.25;
    static constexpr double pole_minus = -0.75;

private:
    double xi_max_;
    std::size_t n_;
    double pole_guard_;
    double h_;
    std::vector<double> xi_;
    std::vector<double> omega_;
    mutable std::unordered_map<unsigned long long, NlepEvaluation> cache_;

    VinProfile solve_interior(cplx lambda) const;
    void check_guard(cplx lambda) const;
};

// Shared default instance for the free functions below.
const NlepSolver& default_nlep();

// Boundary between saddle-node and Hopf destabilization: 3 (1 + H^2/4).
double m_critical(double H);

// Right side of the single-pulse eigenvalue condition,
//   f(lambda) = (R(lambda) - 3) / sqrt(lambda + (H^2+4)/(4m)).
// The decoupled condition reads m^2 D u0^2 / a^2 = f(lambda).
cplx composed_rhs(cplx lambda, double m, double H, const NlepSolver& solver = default_nlep());

// Locus in the lambda plane where composed_rhs is real and nonnegative:
// the set the decoupled eigenvalues move over as u0 changes. real_branch
// carries the visible real-axis components, complex_branch the upper
// half-plane curve (conjugate implied). landing is where the complex branch
// meets the real axis (local minimum of f there); for m below m_critical no
// interior minimum exists and the branch degenerates onto lambda = -1.
struct SkeletonCurve {
    double m = 0.0;
    double H = 0.0;
    std::vector<cplx> real_branch;
    std::vector<cplx> complex_branch;
    cplx landing;
    double f_at_landing = 0.0;
    bool landing_degenerate = false;
    std::vector<double> poles;  // poles of f visible from the real domain
    double m_c = 0.0;
};

SkeletonCurve trace_skeleton(double m, double H, const NlepSolver& solver = default_nlep());

// Critical threshold for K = m^2 D u0^2 / a^2: a pulse with K > kstar
// carries an eigenvalue with positive real part. Below m_critical the
// crossing happens through lambda = 0 and kstar = 6 sqrt(m/(H^2+4));
// above, through a conjugate pair on the imaginary axis (numeric).
double kstar(double m, double H, const NlepSolver& solver = default_nlep());

enum class SpectrumMode { Dsp, Csp, SmallM };
enum class SpectrumClass { Stable, SaddleNode, Hopf };

struct SpectrumEntry {
    cplx lambda;
    std::vector<cplx> rho;          // U-bar at the pulses, max modulus 1
    std::vector<int> sign_pattern;  // signs of Re rho after phase alignment
    bool ill_conditioned = false;   // rho spans more than 8 decades
};

struct SpectrumReport {
    SpectrumMode mode = SpectrumMode::Csp;
    std::vector<SpectrumEntry> eigenvalues;  // descending real part
    std::vector<double> K;                   // m^2 D u0_j^2 / a^2
    double kstar = 0.0;
    SpectrumClass classification = SpectrumClass::Stable;
    int critical_pulse = -1;  // 0-based argmax of |rho_j| / u0_j^2, leading entry
    bool degenerate = false;  // near-equal K_j: decoupled ordering unreliable
    double lambda_window = 2.25;  // width of the visible real-axis band
    double max_re() const;
};

// Decoupled spectrum: each pulse contributes the solutions of
// f(lambda) = K_j on the skeleton. Valid for m >> 1 + H^2/4 but computable
// everywhere. Amplitudes must be present in the config.
SpectrumReport dsp_spectrum(const PulseConfig& config, const ModelParams& params,
                            double H, const NlepSolver& solver = default_nlep());

// Coupled spectrum: eigenvalues are roots of the boundary mismatch of the
// piecewise-exponential outer eigenfunction joined by the
// inner jump conditions. Seeded from the decoupled and asymptotic spectra,
// deduplicated, conjugates closed. Amplitudes are solved when absent.
SpectrumReport csp_spectrum(const PulseConfig& config, const ModelParams& params,
                            double H, const DomainSpec& domain,
                            const NlepSolver& solver = default_nlep());

// Asymptotic spectrum for m << 1 + H^2/4: the outer exponents lose their
// lambda dependence, the jump conditions become a real generalized
// eigenproblem for C* and each C* maps to an eigenvalue through
// R(lambda) = 3 - (m sqrt(m) D / a^2) C* / 2.
SpectrumReport small_m_spectrum(const PulseConfig& config, const ModelParams& params,
                                double H, const DomainSpec& domain,
                                const NlepSolver& solver = default_nlep());

// Mode dispatcher; fills missing amplitudes for every mode.
SpectrumReport compute_spectrum(SpectrumMode mode, const PulseConfig& config,
                                const ModelParams& params, double H,
                                const DomainSpec& domain,
                                const NlepSolver& solver = default_nlep());

// Sampled eigenfunction for one report entry: outer water component from
// the interval-wise exponentials through the rho values, vegetation
// component from scaled inner profiles at each pulse. Both fields share one
// normalization with max |V| = 1.
struct EigenfunctionProfile {
    std::vector<double> x;
    std::vector<cplx> U;
    std::vector<cplx> V;
};

EigenfunctionProfile eigenfunction_profile(const SpectrumReport& report, std::size_t index,
                                           const PulseConfig& config, const ModelParams& params,
                                           double H, const DomainSpec& domain,
                                           std::size_t n_samples = 2001,
                                           const NlepSolver& solver = default_nlep());

}  // namespace kgs
