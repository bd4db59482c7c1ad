#include "kgs/pulse_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "kgs/common.hpp"
#include "kgs/outer.hpp"

namespace kgs {

namespace {

double pref_factor(const ModelParams& params, double t) {
    const double a = params.a(t);
    return params.D * a * a / (params.m * std::sqrt(params.m));
}

double delta_of(const ModelParams& params, double t) {
    const double a = params.a(t);
    return params.m * std::sqrt(params.m) * params.D / (a * a);
}

}  // namespace

Velocity velocity(const PulseConfig& config, const ModelParams& params,
                  const Terrain& terrain, const DomainSpec& domain, OdeMode mode) {
    params.validate();
    config.validate(domain);
    const std::size_t n = config.positions.size();

    Velocity out;
    out.prefactor = pref_factor(params, config.t);

    std::vector<double> kappa(n, 1.0);
    if (mode == OdeMode::A3Prime) {
        const auto solve = amplitudes_newton(config, params, terrain, domain);
        out.u0 = solve.u0;
        const double delta = delta_of(params, config.t);
        for (std::size_t j = 0; j < n; ++j) kappa[j] = 1.0 - delta * out.u0[j];
    }

    const PulseEdgeSlopes edges = outer_edge_slopes(config.positions, kappa, terrain, domain);
    if (mode == OdeMode::A3) {
        out.u0.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double jump = edges.plus[j] - edges.minus[j];
            if (!(jump > 0.0))
                throw NumericalError("derivative jump is not positive at pulse " + std::to_string(j));
            out.u0[j] = 6.0 / jump;
        }
    }

    out.c.resize(n);
    out.dPdt.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.c[j] = (edges.plus[j] * edges.plus[j] - edges.minus[j] * edges.minus[j]) / 6.0;
        out.dPdt[j] = out.prefactor * out.c[j];
    }
    return out;
}

namespace {

// Dormand-Prince 5(4) tableau with the quartic dense-output weights.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = kB1 - 5179.0 / 57600, kE3 = kB3 - 7571.0 / 16695,
                 kE4 = kB4 - 393.0 / 640, kE5 = kB5 + 92097.0 / 339200,
                 kE6 = kB6 - 187.0 / 2100, kE7 = -1.0 / 40;
constexpr double kD1 = -12715105075.0 / 11282082432.0, kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0, kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0, kD7 = 69997945.0 / 29380423.0;

struct RhsResult {
    std::vector<double> f;
    std::vector<double> u0;
};

class PulseRhs {
public:
    PulseRhs(const ModelParams& params, const Terrain& terrain, const DomainSpec& domain,
             OdeMode mode)
        : params_(params), terrain_(terrain), domain_(domain), mode_(mode) {}

    // Deterministic in (t, P); the warm start only seeds the Newton iterate.
    RhsResult operator()(double t, const std::vector<double>& P) {
        PulseConfig cfg;
        cfg.t = t;
        cfg.positions = P;
        const std::size_t n = P.size();

        std::vector<double> kappa(n, 1.0);
        RhsResult out;
        if (mode_ == OdeMode::A3Prime) {
            const std::vector<double>* seed = warm_.size() == n ? &warm_ : nullptr;
            const auto solve = amplitudes_newton(cfg, params_, terrain_, domain_,
                                                 AmplitudeSolve::Branch::Minus, seed);
            out.u0 = solve.u0;
            warm_ = solve.u0;
            const double delta = delta_of(params_, t);
            for (std::size_t j = 0; j < n; ++j) kappa[j] = 1.0 - delta * out.u0[j];
        }

        const PulseEdgeSlopes edges = outer_edge_slopes(P, kappa, terrain_, domain_);
        if (mode_ == OdeMode::A3) {
            out.u0.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double jump = edges.plus[j] - edges.minus[j];
                if (!(jump > 0.0)) throw NumericalError("derivative jump is not positive");
                out.u0[j] = 6.0 / jump;
            }
        }

        const double pref = pref_factor(params_, t);
        out.f.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            out.f[j] = pref *
                       (edges.plus[j] * edges.plus[j] - edges.minus[j] * edges.minus[j]) / 6.0;
        return out;
    }

private:
    const ModelParams& params_;
    const Terrain& terrain_;
    const DomainSpec& domain_;
    OdeMode mode_;
    std::vector<double> warm_;
};

struct DenseSegment {
    double t_old = 0.0, dt = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;

    std::vector<double> eval(double t) const {
        const double th = (t - t_old) / dt;
        const double th1 = 1.0 - th;
        std::vector<double> y(r1.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return y;
    }
};

double min_gap(const std::vector<double>& P, const DomainSpec& domain) {
    if (P.size() < 2)
        return domain.kind == DomainSpec::Kind::Periodic && P.size() == 1
                   ? domain.L
                   : std::numeric_limits<double>::infinity();
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < P.size(); ++j) g = std::min(g, P[j + 1] - P[j]);
    if (domain.kind == DomainSpec::Kind::Periodic)
        g = std::min(g, P.front() + domain.L - P.back());
    return g;
}

}  // namespace

Trajectory integrate(const PulseConfig& config, const ModelParams& params,
                     const Terrain& terrain, const DomainSpec& domain,
                     double t0, double t1, OdeMode mode,
                     const std::vector<Monitor>& monitors, const IntegrateOptions& opts) {
    params.validate();
    config.validate(domain);
    if (!(t1 >= t0)) throw ValidationError("integration span must have t1 >= t0");

    const std::size_t n = config.positions.size();
    const double span = std::max(t1 - t0, 1e-300);
    const double dt_tol = opts.event_tol_factor * span;
    const double max_dt = opts.max_dt_fraction * span;
    const double collision_tol = opts.collision_factor * params.D / std::sqrt(params.m);

    PulseRhs rhs(params, terrain, domain, mode);

    std::vector<Monitor> probes = monitors;
    probes.push_back({"collision", [&](double, const std::vector<double>& P) {
                          return min_gap(P, domain) - collision_tol;
                      }});

    Trajectory traj;
    auto record = [&](double t, const std::vector<double>& P, const std::vector<double>& u0) {
        traj.t.push_back(t);
        traj.P.push_back(P);
        traj.u0.push_back(u0);
        traj.a.push_back(params.a(t));
    };

    std::vector<double> y = config.positions;
    double t = t0;
    RhsResult cur = rhs(t, y);  // initial state must be solvable
    record(t, y, cur.u0);

    std::vector<double> mon_prev(probes.size());
    for (std::size_t m = 0; m < probes.size(); ++m) {
        mon_prev[m] = probes[m].value(t, y);
        if (!(mon_prev[m] > 0.0)) {
            traj.reason = Trajectory::Reason::Event;
            traj.event_name = probes[m].name;
            traj.t_final = t;
            return traj;
        }
    }

    if (t1 == t0) {
        traj.reason = Trajectory::Reason::TEnd;
        traj.t_final = t;
        return traj;
    }

    auto scaled_rms = [&](const std::vector<double>& v, const std::vector<double>& ref) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double sc = opts.atol + opts.rtol * std::abs(ref[i]);
            acc += (v[i] / sc) * (v[i] / sc);
        }
        return std::sqrt(acc / static_cast<double>(v.size()));
    };

    // Starting step from the local derivative scale, then curvature-limited.
    double dt;
    {
        const double d0 = scaled_rms(y, y);
        const double d1 = scaled_rms(cur.f, y);
        double h0 = d1 > 1e-10 ? 0.01 * d0 / d1 : 1e-6 * span;
        h0 = std::min(h0, max_dt);
        dt = h0;
        try {
            std::vector<double> yp(n);
            for (std::size_t i = 0; i < n; ++i) yp[i] = y[i] + h0 * cur.f[i];
            const RhsResult probe = rhs(t + h0, yp);
            std::vector<double> df(n);
            for (std::size_t i = 0; i < n; ++i) df[i] = probe.f[i] - cur.f[i];
            const double d2 = scaled_rms(df, y) / h0;
            const double dm = std::max(d1, d2);
            const double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : 100.0 * h0;
            dt = std::min({100.0 * h0, h1, max_dt});
        } catch (const std::exception&) {
            dt = h0 * 1e-3;
        }
    }
    dt = std::min(dt, t1 - t);

    std::vector<double> k1 = cur.f, k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> ytmp(n), ynew(n), yerr(n);
    std::vector<double> u0_new;
    long steps = 0;
    const double dt_floor = 1e-14 * span;

    while (t < t1) {
        if (++steps > opts.max_steps) throw NumericalError("step limit exceeded");
        dt = std::min(dt, t1 - t);

        bool stage_failed = false;
        double err = 0.0;
        try {
            for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + dt * kA21 * k1[i];
            k2 = rhs(t + kC2 * dt, ytmp).f;
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (kA31 * k1[i] + kA32 * k2[i]);
            k3 = rhs(t + kC3 * dt, ytmp).f;
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
            k4 = rhs(t + kC4 * dt, ytmp).f;
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
            k5 = rhs(t + kC5 * dt, ytmp).f;
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                                       kA64 * k4[i] + kA65 * k5[i]);
            k6 = rhs(t + dt, ytmp).f;
            for (std::size_t i = 0; i < n; ++i)
                ynew[i] = y[i] + dt * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] +
                                       kB6 * k6[i]);
            const RhsResult last = rhs(t + dt, ynew);
            k7 = last.f;
            u0_new = last.u0;

            for (std::size_t i = 0; i < n; ++i)
                yerr[i] = dt * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                                kE6 * k6[i] + kE7 * k7[i]);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double sc =
                    opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                acc += (yerr[i] / sc) * (yerr[i] / sc);
            }
            err = std::sqrt(acc / static_cast<double>(n));
            if (!std::isfinite(err)) stage_failed = true;
        } catch (const std::exception&) {
            stage_failed = true;
        }

        if (stage_failed) {
            // The state itself is solvable; the failure is inside the step.
            dt *= 0.5;
            if (dt < dt_tol) {
                traj.reason = Trajectory::Reason::AmplitudeFailure;
                traj.t_final = t;
                return traj;
            }
            continue;
        }

        if (err > 1.0) {
            dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (dt < dt_floor) {
                traj.reason = Trajectory::Reason::StepUnderflow;
                traj.t_final = t;
                return traj;
            }
            continue;
        }

        DenseSegment seg;
        seg.t_old = t;
        seg.dt = dt;
        seg.r1 = y;
        seg.r2.resize(n);
        seg.r3.resize(n);
        seg.r4.resize(n);
        seg.r5.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ydiff = ynew[i] - y[i];
            seg.r2[i] = ydiff;
            seg.r3[i] = dt * k1[i] - ydiff;
            seg.r4[i] = ydiff - dt * k7[i] - seg.r3[i];
            seg.r5[i] = dt * (kD1 * k1[i] + kD3 * k3[i] + kD4 * k4[i] + kD5 * k5[i] +
                              kD6 * k6[i] + kD7 * k7[i]);
        }

        const double t_new = t + dt;
        double t_event = std::numeric_limits<double>::infinity();
        std::size_t event_idx = 0;
        for (std::size_t m = 0; m < probes.size(); ++m) {
            const double v = probes[m].value(t_new, ynew);
            if (mon_prev[m] > 0.0 && !(v > 0.0)) {
                double lo = t, hi = t_new;
                while (hi - lo > dt_tol) {
                    const double mid = 0.5 * (lo + hi);
                    const std::vector<double> ym = seg.eval(mid);
                    if (probes[m].value(mid, ym) > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                if (hi < t_event) {
                    t_event = hi;
                    event_idx = m;
                }
            } else {
                mon_prev[m] = v;
            }
        }

        if (std::isfinite(t_event)) {
            const std::vector<double> ye = seg.eval(t_event);
            std::vector<double> u0_e = traj.u0.back();
            try {
                u0_e = rhs(t_event, ye).u0;
            } catch (const std::exception&) {
                // Keep the last solvable amplitudes for the event sample.
            }
            record(t_event, ye, u0_e);
            traj.reason = Trajectory::Reason::Event;
            traj.event_name = probes[event_idx].name;
            traj.t_final = t_event;
            return traj;
        }

        t = t_new;
        y = ynew;
        k1 = k7;  // first stage of the next step reuses the last derivative
        record(t, y, u0_new);

        if (opts.stop_at_fixed_point && params.a.is_constant()) {
            double vmax = 0.0;
            for (double f : k7) vmax = std::max(vmax, std::abs(f));
            if (vmax < opts.fixed_point_tol) {
                traj.reason = Trajectory::Reason::OdeFixedPoint;
                traj.t_final = t;
                return traj;
            }
        }

        dt *= std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
        dt = std::min(dt, max_dt);
    }

    traj.reason = Trajectory::Reason::TEnd;
    traj.t_final = t;
    return traj;
}

PulseConfig fixed_point(int N, const ModelParams& params, const Terrain& terrain,
                        const DomainSpec& domain, OdeMode mode) {
    params.validate();
    if (domain.kind != DomainSpec::Kind::Neumann)
        throw ValidationError("stationary configurations are defined on no-flux domains");
    if (N < 1) throw ValidationError("need at least one pulse");
    const double L = domain.L;

    PulseConfig out;
    out.t = 0.0;
    if (terrain.is_flat()) {
        // Mirror symmetry pins the pattern at odd multiples of L/(2N).
        out.positions.resize(N);
        for (int j = 0; j < N; ++j) out.positions[j] = (2.0 * j + 1.0) * L / (2.0 * N);
        return out;
    }

    const auto residual = [&](const std::vector<double>& P) {
        PulseConfig cfg;
        cfg.t = 0.0;
        cfg.positions = P;
        return velocity(cfg, params, terrain, domain, mode).c;
    };

    const auto valid = [&](const std::vector<double>& P) {
        for (int j = 0; j < N; ++j) {
            if (!(P[j] > 0.0 && P[j] < L)) return false;
            if (j > 0 && !(P[j] > P[j - 1])) return false;
        }
        return true;
    };

    const auto solve_from = [&](std::vector<double> P) -> std::optional<std::vector<double>> {
        for (int it = 0; it < 120; ++it) {
            std::vector<double> F;
            try {
                F = residual(P);
            } catch (const std::exception&) {
                return std::nullopt;
            }
            double fn = 0.0;
            for (double v : F) fn = std::max(fn, std::abs(v));
            if (fn < 1e-12) return P;

            Eigen::MatrixXd J(N, N);
            for (int k = 0; k < N; ++k) {
                const double h = 1e-7 * std::max(1.0, std::abs(P[k]));
                std::vector<double> Pp = P;
                Pp[k] += h;
                std::vector<double> Fp;
                try {
                    Fp = residual(Pp);
                } catch (const std::exception&) {
                    return std::nullopt;
                }
                for (int r = 0; r < N; ++r) J(r, k) = (Fp[r] - F[r]) / h;
            }
            Eigen::VectorXd rhs(N);
            for (int r = 0; r < N; ++r) rhs(r) = -F[r];
            const Eigen::VectorXd step = J.partialPivLu().solve(rhs);
            if (!step.allFinite()) return std::nullopt;

            double lambda = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 10; ++ls, lambda *= 0.5) {
                std::vector<double> Pn(P);
                for (int r = 0; r < N; ++r) Pn[r] = P[r] + lambda * step(r);
                if (!valid(Pn)) continue;
                std::vector<double> Fn;
                try {
                    Fn = residual(Pn);
                } catch (const std::exception&) {
                    continue;
                }
                double fnn = 0.0;
                for (double v : Fn) fnn = std::max(fnn, std::abs(v));
                if (fnn < fn || fnn < 1e-12) {
                    P = Pn;
                    moved = true;
                    break;
                }
            }
            if (!moved) return std::nullopt;
        }
        return std::nullopt;
    };

    // Multi-start guards against converging to distinct configurations.
    const double d = L / N;
    std::vector<std::vector<double>> starts;
    std::vector<double> equal(N);
    for (int j = 0; j < N; ++j) equal[j] = (2.0 * j + 1.0) * L / (2.0 * N);
    starts.push_back(equal);
    std::mt19937 gen(7u);
    std::uniform_real_distribution<double> uni(-0.25, 0.25);
    for (int s = 1; s < 5; ++s) {
        std::vector<double> P = equal;
        for (int j = 0; j < N; ++j) P[j] += uni(gen) * d;
        std::sort(P.begin(), P.end());
        for (int j = 0; j < N; ++j) P[j] = std::clamp(P[j], 0.05 * d, L - 0.05 * d);
        starts.push_back(P);
    }

    std::vector<std::vector<double>> roots;
    for (const auto& s : starts) {
        const auto r = solve_from(s);
        if (r) roots.push_back(*r);
    }
    if (roots.empty()) throw NumericalError("no stationary configuration found");
    for (const auto& r : roots)
        for (int j = 0; j < N; ++j)
            if (std::abs(r[j] - roots.front()[j]) > 1e-6)
                throw NumericalError("multiple stationary configurations found");

    out.positions = roots.front();
    return out;
}

double regular_speed(double d, double H, const ModelParams& params, OdeMode mode) {
    params.validate();
    if (!(d > 0.0)) throw ValidationError("wavelength must be positive");
    if (std::isinf(d)) return homoclinic_speed(H, params, mode);

    const double s = slope_param(H);
    const double pref = pref_factor(params, 0.0);
    // Every exponent below is negative, so the terms stay in [0, 1].
    const double em = -std::expm1(-s * d);  // 1 - e^{-sd}
    const double e_a = std::exp(0.5 * (H - s) * d);
    const double e_b = std::exp(-0.5 * (H + s) * d);
    const double t1 = (e_a + e_b - 1.0 - std::exp(-s * d)) / em;
    const double t2 = (e_a - e_b) / em;
    const double c0 = (s / 6.0) * t1 * (-H + s * t2);
    if (mode == OdeMode::A3) return pref * c0;

    const double delta = delta_of(params, 0.0);
    const double j0 = slope_into_right(d, H) - slope_into_left(d, H);
    const double disc = 1.0 - 24.0 * delta / j0;
    if (disc < 0.0)
        throw NumericalError("no regular pattern amplitude at this wavelength");
    const double u0 = 12.0 / (j0 * (1.0 + std::sqrt(disc)));
    const double kap = 1.0 - delta * u0;
    return kap * kap * pref * c0;
}

double homoclinic_speed(double H, const ModelParams& params, OdeMode mode) {
    params.validate();
    const double s = slope_param(H);
    const double pref = pref_factor(params, 0.0);
    const double ch = s * H / 6.0;
    if (mode == OdeMode::A3) return pref * ch;
    const double delta = delta_of(params, 0.0);
    const double kap = 1.0 - delta * homoclinic_amplitude(delta, H);
    return kap * kap * pref * ch;
}

double colonization_wavelength(double H, const ModelParams& params) {
    params.validate();
    if (H <= 0.0) return std::numeric_limits<double>::infinity();

    const double s = slope_param(H);
    const double target = 0.5 * (s - H);  // |semi-infinite downhill derivative|
    const auto f = [&](double d) { return slope_into_right(d, H) - target; };

    double lo = 1e-8, hi = 1.0;
    if (f(lo) >= 0.0) throw NumericalError("colonization balance bracket failed");
    while (f(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e8) throw NumericalError("colonization balance bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace kgs
