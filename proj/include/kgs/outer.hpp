#pragma once

#include <vector>

#include "kgs/model.hpp"

namespace kgs {

// Characteristic rate of the between-pulse water equation on a constant
// slope H: the homogeneous exponents are (-H ± s)/2 with s = sqrt(H^2+4).
inline double slope_param(double H) { return std::sqrt(H * H + 4.0); }

// Water-field derivative at a pulse bounding an interval of width d, with
// unit edge deficit on both sides (kappa = 1).
//   slope_into_right(d): at the left pulse looking right; strictly
//     increasing from 0 to (H+s)/2.
//   slope_into_left(d): at the right pulse looking left; strictly
//     decreasing from 0 to (H-s)/2.
// Both are overflow-free and cancellation-free for all d > 0.
double slope_into_right(double d, double H);
double slope_into_left(double d, double H);

struct EdgeDerivatives {
    double at_left;   // derivative just right of the left pulse
    double at_right;  // derivative just left of the right pulse
};

// Closed-form one-sided derivatives for one inter-pulse interval on a
// constant slope. kappa = 1 - delta*u0 weights the edge deficits; passing
// kappa = 1 on both sides recovers the slope_into_* pair.
EdgeDerivatives edge_derivatives_constant_slope(double dP, double H,
                                                double kappa_left = 1.0,
                                                double kappa_right = 1.0);

// Derivatives at the outermost pulses next to a no-flux wall.
// neumann_edge_left: at P1 from the left, wall gap P1.
// neumann_edge_right: at PN from the right, wall gap ell = L - PN.
double neumann_edge_left(double P1, double H, double kappa = 1.0);
double neumann_edge_right(double ell, double H, double kappa = 1.0);

struct AuxiliaryPositions {
    double P0;      // -inf on unbounded domains
    double P_next;  // +inf on unbounded domains
};

// Virtual neighbour pulses that reproduce the domain boundary condition
// through the standard interval formulas: periodic wraps by L, Neumann
// solves slope_into_left/right against the wall derivatives (closed mirror
// form when H = 0), unbounded returns infinities.
AuxiliaryPositions auxiliary_positions(const DomainSpec& dom, double P1, double PN,
                                       double H);

// Water profile on one interval between internal boundary values.
// Constant-slope terrain stores the closed form in an overflow-safe basis
// anchored at both ends; anything else stores a Chebyshev collocation
// solution with barycentric evaluation.
struct OuterSolution {
    double x_l = 0.0, x_r = 0.0;
    bool closed_form = true;
    double H = 0.0;
    double alpha = 0.0, beta = 0.0;  // U~ = 1 + alpha e^{D1(x-x_r)} + beta e^{D2(x-x_l)}
    std::vector<double> nodes, values, derivs;
    double deriv_left = 0.0, deriv_right = 0.0;

    double eval(double x) const;
    double eval_deriv(double x) const;
};

// Solves U~_xx + h_x U~_x + (h_xx - 1) U~ = -1 on [x_l, x_r] with the given
// endpoint values (a no-flux end replaces its Dirichlet condition).
// Infinite x_l / x_r are accepted for constant-slope terrain only and pick
// the bounded branch.
OuterSolution solve_outer_bvp(const Terrain& terrain, double x_l, double x_r,
                              double U_l, double U_r,
                              bool neumann_left = false, bool neumann_right = false);

}  // namespace kgs
