#include "kgs/outer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// H/2 + (s/2) coth(s d / 2): the kappa-weighted self term of an interval
// edge. Diverges like 1/d as d -> 0; callers only use it through kappa
// differences, where that divergence is physical.
double self_term(double d, double H) {
    double s = slope_param(H);
    return 0.5 * H + 0.5 * s / std::tanh(0.5 * s * d);
}

void require_positive_gap(double d) {
    if (!(d > 0.0)) throw ValidationError("outer: interval width must be > 0");
}

}  // namespace

double slope_into_right(double d, double H) {
    require_positive_gap(d);
    if (std::isinf(d)) return 0.5 * (H + slope_param(H));
    double s = slope_param(H);
    double num = std::exp(0.5 * (H - s) * d) * std::expm1(-0.5 * (H + s) * d) -
                 std::expm1(0.5 * (H - s) * d);
    double den = -std::expm1(-s * d);
    return 0.5 * H + 0.5 * s * num / den;
}

double slope_into_left(double d, double H) {
    require_positive_gap(d);
    if (std::isinf(d)) return 0.5 * (H - slope_param(H));
    double s = slope_param(H);
    double num = std::expm1(-0.5 * (H + s) * d) -
                 std::exp(-0.5 * (H + s) * d) * std::expm1(0.5 * (H - s) * d);
    double den = -std::expm1(-s * d);
    return 0.5 * H + 0.5 * s * num / den;
}

EdgeDerivatives edge_derivatives_constant_slope(double dP, double H,
                                                double kappa_left, double kappa_right) {
    require_positive_gap(dP);
    if (std::isinf(dP)) {
        double s = slope_param(H);
        return {kappa_left * 0.5 * (H + s), kappa_right * 0.5 * (H - s)};
    }
    double A = self_term(dP, H);
    EdgeDerivatives e;
    e.at_left = kappa_right * slope_into_right(dP, H) + (kappa_left - kappa_right) * A;
    e.at_right = kappa_left * slope_into_left(dP, H) + (kappa_right - kappa_left) * (H - A);
    return e;
}

double neumann_edge_left(double P1, double H, double kappa) {
    require_positive_gap(P1);
    double s = slope_param(H);
    double th = std::tanh(0.5 * s * P1);
    return -kappa * 2.0 * th / (H * th + s);
}

double neumann_edge_right(double ell, double H, double kappa) {
    require_positive_gap(ell);
    double s = slope_param(H);
    double th = std::tanh(0.5 * s * ell);
    return kappa * 2.0 * th / (s - H * th);
}

AuxiliaryPositions auxiliary_positions(const DomainSpec& dom, double P1, double PN,
                                       double H) {
    switch (dom.kind) {
        case DomainSpec::Kind::Unbounded:
            return {-kInf, kInf};
        case DomainSpec::Kind::Periodic:
            return {PN - dom.L, P1 + dom.L};
        case DomainSpec::Kind::Neumann:
            break;
    }
    if (!(P1 > 0.0) || !(PN < dom.L))
        throw ValidationError("outer: pulses must lie strictly inside (0, L)");
    if (H == 0.0) return {-P1, 2.0 * dom.L - PN};

    // slope_into_left / slope_into_right are strictly monotone with the wall
    // derivative strictly inside their range, so bisection cannot fail once
    // a bracket is found.
    auto bisect = [&dom](auto f, double target) {
        double lo = 1e-12, hi = 1.0;
        while (f(hi) > target ? f(lo) > target : f(lo) < target) {
            // grow until the target is straddled
            double flo = f(lo), fhi = f(hi);
            if ((flo - target) * (fhi - target) <= 0.0) break;
            hi *= 2.0;
            if (hi > 1e4 * std::max(1.0, dom.L))
                throw NumericalError("outer: auxiliary position bracket not found");
        }
        double flo = f(lo) - target;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = f(mid) - target;
            if ((flo < 0.0) == (fm < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    double targetL = neumann_edge_left(P1, H);
    double targetR = neumann_edge_right(dom.L - PN, H);
    double d0 = bisect([H](double d) { return slope_into_left(d, H); }, targetL);
    double dN = bisect([H](double d) { return slope_into_right(d, H); }, targetR);
    return {P1 - d0, PN + dN};
}

double OuterSolution::eval(double x) const {
    if (closed_form) {
        double s = slope_param(H);
        double D1 = 0.5 * (-H + s), D2 = 0.5 * (-H - s);
        double t1 = std::isinf(x_r) ? 0.0 : alpha * std::exp(D1 * (x - x_r));
        double t2 = std::isinf(x_l) ? 0.0 : beta * std::exp(D2 * (x - x_l));
        return 1.0 + t1 + t2;
    }
    // Barycentric interpolation on Chebyshev-Lobatto nodes.
    size_t n = nodes.size();
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < n; ++j) {
        double diff = x - nodes[j];
        if (diff == 0.0) return values[j];
        double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        if (j % 2) w = -w;
        double q = w / diff;
        num += q * values[j];
        den += q;
    }
    return num / den;
}

double OuterSolution::eval_deriv(double x) const {
    if (closed_form) {
        double s = slope_param(H);
        double D1 = 0.5 * (-H + s), D2 = 0.5 * (-H - s);
        double t1 = std::isinf(x_r) ? 0.0 : alpha * D1 * std::exp(D1 * (x - x_r));
        double t2 = std::isinf(x_l) ? 0.0 : beta * D2 * std::exp(D2 * (x - x_l));
        return t1 + t2;
    }
    size_t n = nodes.size();
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < n; ++j) {
        double diff = x - nodes[j];
        if (diff == 0.0) return derivs[j];
        double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        if (j % 2) w = -w;
        double q = w / diff;
        num += q * derivs[j];
        den += q;
    }
    return num / den;
}

namespace {

OuterSolution solve_constant_slope(double H, double x_l, double x_r,
                                   double U_l, double U_r,
                                   bool neumann_left, bool neumann_right) {
    double s = slope_param(H);
    double D1 = 0.5 * (-H + s), D2 = 0.5 * (-H - s);
    OuterSolution sol;
    sol.closed_form = true;
    sol.H = H;
    sol.x_l = x_l;
    sol.x_r = x_r;

    if (std::isinf(x_l) && std::isinf(x_r))
        throw ValidationError("outer: doubly infinite interval");
    if (std::isinf(x_l)) {
        // only the decaying-as-x->-inf branch survives
        sol.alpha = U_r - 1.0;
        sol.beta = 0.0;
        sol.deriv_left = 0.0;
        sol.deriv_right = sol.alpha * D1;
        return sol;
    }
    if (std::isinf(x_r)) {
        sol.alpha = 0.0;
        sol.beta = U_l - 1.0;
        sol.deriv_left = sol.beta * D2;
        sol.deriv_right = 0.0;
        return sol;
    }

    double d = x_r - x_l;
    require_positive_gap(d);
    double e1 = std::exp(-D1 * d);   // e^{D1(x_l-x_r)} <= 1
    double e2 = std::exp(D2 * d);    // e^{D2(x_r-x_l)} <= 1
    // rows: value or no-flux condition at each end for
    // W = alpha e^{D1(x-x_r)} + beta e^{D2(x-x_l)}, U~ = 1 + W
    double a11 = neumann_left ? D1 * e1 : e1;
    double a12 = neumann_left ? D2 : 1.0;
    double b1 = neumann_left ? 0.0 : U_l - 1.0;
    double a21 = neumann_right ? D1 : 1.0;
    double a22 = neumann_right ? D2 * e2 : e2;
    double b2 = neumann_right ? 0.0 : U_r - 1.0;
    double det = a11 * a22 - a12 * a21;
    if (det == 0.0) throw NumericalError("outer: singular closed-form system");
    sol.alpha = (b1 * a22 - a12 * b2) / det;
    sol.beta = (a11 * b2 - b1 * a21) / det;
    sol.deriv_left = sol.alpha * D1 * e1 + sol.beta * D2;
    sol.deriv_right = sol.alpha * D1 + sol.beta * D2 * e2;
    return sol;
}

// Chebyshev-Lobatto collocation of U~_xx + h_x U~_x + (h_xx - 1) U~ = -1.
OuterSolution solve_collocation(const Terrain& terrain, double x_l, double x_r,
                                double U_l, double U_r,
                                bool neumann_left, bool neumann_right, int n) {
    double mid = 0.5 * (x_l + x_r), half = 0.5 * (x_r - x_l);
    Eigen::MatrixXd D(n + 1, n + 1);
    std::vector<double> xi(n + 1);
    for (int j = 0; j <= n; ++j) xi[j] = std::cos(M_PI * j / n);
    auto c = [n](int i) { return (i == 0 || i == n) ? 2.0 : 1.0; };
    for (int i = 0; i <= n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            double sign = ((i + j) % 2) ? -1.0 : 1.0;
            D(i, j) = (c(i) / c(j)) * sign / (xi[i] - xi[j]);
            rowsum += D(i, j);
        }
        D(i, i) = -rowsum;
    }
    Eigen::MatrixXd D1 = D / half;          // d/dx
    Eigen::MatrixXd D2m = D1 * D1;          // d2/dx2

    Eigen::MatrixXd A(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    std::vector<double> xs(n + 1);
    for (int i = 0; i <= n; ++i) {
        double x = mid + half * xi[i];      // xi descending: row 0 is x_r
        xs[i] = x;
        auto te = terrain.eval(x);
        A.row(i) = D2m.row(i) + te.hx * D1.row(i);
        A(i, i) += te.hxx - 1.0;
        rhs(i) = -1.0;
    }
    // boundary rows: row 0 is the right end, row n the left end
    if (neumann_right) {
        A.row(0) = D1.row(0);
        rhs(0) = 0.0;
    } else {
        A.row(0).setZero();
        A(0, 0) = 1.0;
        rhs(0) = U_r;
    }
    if (neumann_left) {
        A.row(n) = D1.row(n);
        rhs(n) = 0.0;
    } else {
        A.row(n).setZero();
        A(n, n) = 1.0;
        rhs(n) = U_l;
    }

    Eigen::VectorXd u = A.partialPivLu().solve(rhs);
    Eigen::VectorXd du = D1 * u;

    OuterSolution sol;
    sol.closed_form = false;
    sol.x_l = x_l;
    sol.x_r = x_r;
    sol.nodes.resize(n + 1);
    sol.values.resize(n + 1);
    sol.derivs.resize(n + 1);
    // store ascending in x so barycentric weights use the standard pattern
    for (int i = 0; i <= n; ++i) {
        sol.nodes[i] = xs[n - i];
        sol.values[i] = u(n - i);
        sol.derivs[i] = du(n - i);
    }
    sol.deriv_left = du(n);
    sol.deriv_right = du(0);
    if (!finite(sol.deriv_left) || !finite(sol.deriv_right))
        throw NumericalError("outer: collocation produced non-finite derivatives");
    return sol;
}

}  // namespace

OuterSolution solve_outer_bvp(const Terrain& terrain, double x_l, double x_r,
                              double U_l, double U_r,
                              bool neumann_left, bool neumann_right) {
    if (terrain.is_constant_slope())
        return solve_constant_slope(terrain.H, x_l, x_r, U_l, U_r,
                                    neumann_left, neumann_right);
    if (std::isinf(x_l) || std::isinf(x_r))
        throw ValidationError("outer: infinite intervals need constant-slope terrain");
    require_positive_gap(x_r - x_l);

    // refine until both endpoint derivatives stop moving
    OuterSolution prev = solve_collocation(terrain, x_l, x_r, U_l, U_r,
                                           neumann_left, neumann_right, 64);
    for (int n = 128; n <= 1024; n *= 2) {
        OuterSolution next = solve_collocation(terrain, x_l, x_r, U_l, U_r,
                                               neumann_left, neumann_right, n);
        double dl = std::abs(next.deriv_left - prev.deriv_left);
        double dr = std::abs(next.deriv_right - prev.deriv_right);
        double scale = std::max({1.0, std::abs(next.deriv_left), std::abs(next.deriv_right)});
        if (dl < 1e-10 * scale && dr < 1e-10 * scale) return next;
        prev = next;
    }
    return prev;
}

}  // namespace kgs
