#pragma once

#include <optional>
#include <vector>

#include "kgs/model.hpp"
#include "kgs/outer.hpp"

namespace kgs {

// One-sided water-field derivatives at every pulse.
struct PulseEdgeSlopes {
    std::vector<double> minus;  // U~_x(P_j^-)
    std::vector<double> plus;   // U~_x(P_j^+)
};

// Assembles the edge derivatives for the whole configuration. kappa_j is
// the edge deficit 1 - delta*u0_j (pass all ones for the strict low
// feed-rate limit). Constant slopes use the closed forms; other terrain
// solves one collocation BVP per interval (Neumann domains only).
PulseEdgeSlopes outer_edge_slopes(const std::vector<double>& positions,
                                  const std::vector<double>& kappa,
                                  const Terrain& terrain, const DomainSpec& domain);

struct AmplitudeSolve {
    std::vector<double> u0;
    double residual = 0.0;
    double jacobian_det_margin = 1.0;
    enum class Branch { Minus, Plus } branch = Branch::Minus;
    bool converged = false;
    int iterations = 0;
};

// Leading-order amplitudes: 6/u0_j equals the kappa = 1 derivative jump.
std::vector<double> amplitudes_leading(const PulseConfig& config, double H,
                                       const DomainSpec& domain);

// Newton solve of the jump conditions with amplitude feedback through
// kappa = 1 - delta*u0. Returns converged = false past the existence fold
// instead of throwing; amplitudes_newton wraps it with the throwing
// contract. warm_start seeds the iteration (previous time step).
AmplitudeSolve try_amplitudes_newton(const PulseConfig& config, const ModelParams& params,
                                     const Terrain& terrain, const DomainSpec& domain,
                                     AmplitudeSolve::Branch branch = AmplitudeSolve::Branch::Minus,
                                     const std::vector<double>* warm_start = nullptr,
                                     double newton_tol = 1e-12);

AmplitudeSolve amplitudes_newton(const PulseConfig& config, const ModelParams& params,
                                 const Terrain& terrain, const DomainSpec& domain,
                                 AmplitudeSolve::Branch branch = AmplitudeSolve::Branch::Minus,
                                 const std::vector<double>* warm_start = nullptr,
                                 double newton_tol = 1e-12);

// |det J| at the solution normalized by its zero-delta value; approaches 0
// at the saddle-node existence boundary.
double saddle_node_margin(const AmplitudeSolve& solve);

// Single pulse on the line: closed forms for the two amplitude branches
// and the fold location.
double homoclinic_fold_delta(double H);
double homoclinic_amplitude(double delta, double H, bool plus_branch = false);

}  // namespace kgs
