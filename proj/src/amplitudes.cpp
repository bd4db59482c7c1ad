#include "kgs/amplitudes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgs {

namespace {

void check_geometry(const std::vector<double>& positions, const Terrain& terrain,
                    const DomainSpec& domain) {
    if (positions.empty()) throw ValidationError("amplitudes: no pulses");
    for (size_t i = 1; i < positions.size(); ++i)
        if (!(positions[i] > positions[i - 1]))
            throw ValidationError("amplitudes: positions must strictly increase");
    if (!terrain.is_constant_slope()) {
        if (domain.kind != DomainSpec::Kind::Neumann)
            throw ValidationError("amplitudes: general terrain needs a Neumann domain");
    }
    if (domain.bounded() &&
        (!(positions.front() > 0.0) || !(positions.back() < domain.L)))
        throw ValidationError("amplitudes: pulses must lie strictly inside (0, L)");
}

PulseEdgeSlopes edges_constant_slope(const std::vector<double>& P,
                                     const std::vector<double>& kappa, double H,
                                     const DomainSpec& domain) {
    size_t n = P.size();
    PulseEdgeSlopes out;
    out.minus.resize(n);
    out.plus.resize(n);
    for (size_t j = 0; j + 1 < n; ++j) {
        auto e = edge_derivatives_constant_slope(P[j + 1] - P[j], H, kappa[j], kappa[j + 1]);
        out.plus[j] = e.at_left;
        out.minus[j + 1] = e.at_right;
    }
    double s = slope_param(H);
    switch (domain.kind) {
        case DomainSpec::Kind::Unbounded:
            out.minus[0] = kappa[0] * 0.5 * (H - s);
            out.plus[n - 1] = kappa[n - 1] * 0.5 * (H + s);
            break;
        case DomainSpec::Kind::Neumann:
            out.minus[0] = neumann_edge_left(P[0], H, kappa[0]);
            out.plus[n - 1] = neumann_edge_right(domain.L - P[n - 1], H, kappa[n - 1]);
            break;
        case DomainSpec::Kind::Periodic: {
            double wrap = domain.L - P[n - 1] + P[0];
            auto e = edge_derivatives_constant_slope(wrap, H, kappa[n - 1], kappa[0]);
            out.plus[n - 1] = e.at_left;
            out.minus[0] = e.at_right;
            break;
        }
    }
    return out;
}

PulseEdgeSlopes edges_general(const std::vector<double>& P,
                              const std::vector<double>& kappa, const Terrain& terrain,
                              const DomainSpec& domain) {
    size_t n = P.size();
    PulseEdgeSlopes out;
    out.minus.resize(n);
    out.plus.resize(n);
    auto bv = [&kappa](size_t j) { return 1.0 - kappa[j]; };

    auto wall_l = solve_outer_bvp(terrain, 0.0, P[0], 0.0, bv(0), true, false);
    out.minus[0] = wall_l.deriv_right;
    for (size_t j = 0; j + 1 < n; ++j) {
        auto sol = solve_outer_bvp(terrain, P[j], P[j + 1], bv(j), bv(j + 1));
        out.plus[j] = sol.deriv_left;
        out.minus[j + 1] = sol.deriv_right;
    }
    auto wall_r = solve_outer_bvp(terrain, P[n - 1], domain.L, bv(n - 1), 0.0, false, true);
    out.plus[n - 1] = wall_r.deriv_left;
    return out;
}

}  // namespace

PulseEdgeSlopes outer_edge_slopes(const std::vector<double>& positions,
                                  const std::vector<double>& kappa,
                                  const Terrain& terrain, const DomainSpec& domain) {
    check_geometry(positions, terrain, domain);
    if (kappa.size() != positions.size())
        throw ValidationError("amplitudes: kappa size must match positions");
    if (terrain.is_constant_slope())
        return edges_constant_slope(positions, kappa, terrain.H, domain);
    return edges_general(positions, kappa, terrain, domain);
}

std::vector<double> amplitudes_leading(const PulseConfig& config, double H,
                                       const DomainSpec& domain) {
    auto edges = outer_edge_slopes(config.positions,
                                   std::vector<double>(config.positions.size(), 1.0),
                                   Terrain::constant_slope(H), domain);
    std::vector<double> u0(config.positions.size());
    for (size_t j = 0; j < u0.size(); ++j) {
        double jump = edges.plus[j] - edges.minus[j];
        if (!(jump > 0.0))
            throw NumericalError("amplitudes: non-positive derivative jump");
        u0[j] = 6.0 / jump;
    }
    return u0;
}

AmplitudeSolve try_amplitudes_newton(const PulseConfig& config, const ModelParams& params,
                                     const Terrain& terrain, const DomainSpec& domain,
                                     AmplitudeSolve::Branch branch,
                                     const std::vector<double>* warm_start,
                                     double newton_tol) {
    check_geometry(config.positions, terrain, domain);
    size_t n = config.positions.size();
    double a = params.a(config.t);
    double delta = params.m * std::sqrt(params.m) * params.D / (a * a);

    auto residual = [&](const std::vector<double>& u, std::vector<double>& F) {
        std::vector<double> kappa(n);
        for (size_t j = 0; j < n; ++j) kappa[j] = 1.0 - delta * u[j];
        auto edges = outer_edge_slopes(config.positions, kappa, terrain, domain);
        for (size_t j = 0; j < n; ++j)
            F[j] = (edges.plus[j] - edges.minus[j]) - 6.0 / u[j];
    };

    std::vector<double> u_lead;
    if (terrain.is_constant_slope()) {
        u_lead = amplitudes_leading(config, terrain.H, domain);
    } else {
        auto edges = outer_edge_slopes(config.positions, std::vector<double>(n, 1.0),
                                       terrain, domain);
        u_lead.resize(n);
        for (size_t j = 0; j < n; ++j) {
            double jump = edges.plus[j] - edges.minus[j];
            if (!(jump > 0.0)) {
                AmplitudeSolve fail;
                fail.converged = false;
                fail.residual = std::numeric_limits<double>::infinity();
                return fail;
            }
            u_lead[j] = 6.0 / jump;
        }
    }

    AmplitudeSolve out;
    out.branch = branch;
    std::vector<double> u;
    if (warm_start && warm_start->size() == n) {
        u = *warm_start;
    } else if (branch == AmplitudeSolve::Branch::Plus) {
        if (delta <= 0.0) {
            out.converged = false;
            return out;
        }
        u.assign(n, 0.9 / delta);
    } else {
        u = u_lead;
    }

    // delta -> 0 reference scale for the Jacobian determinant
    double det_ref = 1.0;
    for (double ul : u_lead) det_ref *= 6.0 / (ul * ul);

    std::vector<double> F(n), Ft(n);
    Eigen::MatrixXd J(n, n);
    double min_det = std::numeric_limits<double>::infinity();
    double fnorm = std::numeric_limits<double>::infinity();

    const int max_iter = 80;
    for (int iter = 0; iter < max_iter; ++iter) {
        residual(u, F);
        fnorm = 0.0;
        for (double f : F) fnorm = std::max(fnorm, std::abs(f));
        if (!std::isfinite(fnorm)) break;
        out.iterations = iter;
        if (fnorm < newton_tol) {
            out.converged = true;
            break;
        }

        for (size_t k = 0; k < n; ++k) {
            double h = 1e-6 * std::max(1.0, std::abs(u[k]));
            std::vector<double> up = u;
            up[k] += h;
            residual(up, Ft);
            for (size_t j = 0; j < n; ++j) J(j, k) = (Ft[j] - F[j]) / h;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        double det = lu.determinant();
        min_det = std::min(min_det, std::abs(det));
        if (det == 0.0) break;

        Eigen::VectorXd rhs(n);
        for (size_t j = 0; j < n; ++j) rhs(j) = -F[j];
        Eigen::VectorXd step = lu.solve(rhs);
        if (!step.allFinite()) break;

        double lambda = 1.0;
        std::vector<double> u_try(n);
        bool accepted = false;
        for (int halve = 0; halve <= 8; ++halve) {
            bool positive = true;
            for (size_t j = 0; j < n; ++j) {
                u_try[j] = u[j] + lambda * step(j);
                if (!(u_try[j] > 1e-12)) positive = false;
            }
            if (positive) {
                residual(u_try, Ft);
                double fn = 0.0;
                for (double f : Ft) fn = std::max(fn, std::abs(f));
                if (fn < fnorm) {
                    u = u_try;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }

    out.u0 = u;
    out.residual = fnorm;
    // converged may have exited before any Jacobian was formed (warm start
    // already at the root); evaluate one determinant for the margin then.
    if (out.converged && !std::isfinite(min_det)) {
        for (size_t k = 0; k < n; ++k) {
            double h = 1e-6 * std::max(1.0, std::abs(u[k]));
            std::vector<double> up = u;
            up[k] += h;
            residual(u, F);
            residual(up, Ft);
            for (size_t j = 0; j < n; ++j) J(j, k) = (Ft[j] - F[j]) / h;
        }
        min_det = std::abs(J.partialPivLu().determinant());
    }
    out.jacobian_det_margin = std::isfinite(min_det) && det_ref != 0.0
                                  ? min_det / std::abs(det_ref)
                                  : 0.0;
    if (out.converged) {
        for (double v : u)
            if (!(v > 0.0)) out.converged = false;
    }
    return out;
}

AmplitudeSolve amplitudes_newton(const PulseConfig& config, const ModelParams& params,
                                 const Terrain& terrain, const DomainSpec& domain,
                                 AmplitudeSolve::Branch branch,
                                 const std::vector<double>* warm_start,
                                 double newton_tol) {
    auto solve = try_amplitudes_newton(config, params, terrain, domain, branch,
                                       warm_start, newton_tol);
    if (!solve.converged)
        throw NumericalError("amplitudes: jump-condition solve failed "
                             "(past the existence fold or bad configuration)");
    return solve;
}

double saddle_node_margin(const AmplitudeSolve& solve) {
    return solve.jacobian_det_margin;
}

double homoclinic_fold_delta(double H) { return slope_param(H) / 24.0; }

double homoclinic_amplitude(double delta, double H, bool plus_branch) {
    double s = slope_param(H);
    if (delta < 0.0) throw ValidationError("amplitudes: delta must be >= 0");
    if (delta == 0.0) {
        if (plus_branch)
            throw NumericalError("amplitudes: plus branch diverges as delta -> 0");
        return 6.0 / s;
    }
    double disc = 1.0 - 24.0 * delta / s;
    if (disc < 0.0)
        throw NumericalError("amplitudes: past the existence fold delta_c = sqrt(H^2+4)/24");
    double root = std::sqrt(disc);
    if (plus_branch) return (1.0 + root) / (2.0 * delta);
    // cancellation-free form of (1 - root) / (2 delta)
    return 12.0 / (s * (1.0 + root));
}

}  // namespace kgs
