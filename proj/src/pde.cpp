#include "kgs/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "kgs/amplitudes.hpp"
#include "kgs/common.hpp"
#include "kgs/kernels.hpp"

namespace kgs {

namespace {

std::string format_msg(const char* fmt, double x, double y = 0.0, double z = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, x, y, z);
    return buf;
}

// Tridiagonal elimination; coefficients are destroyed. Rows are strictly
// diagonally dominant for every system assembled here.
void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
            std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// One implicit field solve: (1 + gamma*decay) I - gamma*diff d_xx, with the
// domain closure folded into the end rows. Periodic wrap goes through the
// rank-one correction of the cyclic system (two tridiagonal passes).
class ImplicitField {
public:
    ImplicitField(const Grid& grid, double diff, double decay)
        : kind_(grid.domain.kind), n_(grid.n()), diff_(diff), decay_(decay), dx_(grid.dx) {}

    void solve(double gamma, std::vector<double>& rhs) {
        const double off = -gamma * diff_ / (dx_ * dx_);
        const double d = 1.0 + gamma * decay_ - 2.0 * off;
        lower_.assign(n_, off);
        diag_.assign(n_, d);
        upper_.assign(n_, off);
        if (kind_ == DomainSpec::Kind::Periodic) {
            // A = T + u v^T with u = (alpha, 0, .., off), v = (1, 0, .., off/alpha).
            const double alpha = -d;
            diag_[0] = d - alpha;
            diag_[n_ - 1] = d - off * (off / alpha);
            aux_.assign(n_, 0.0);
            aux_[0] = alpha;
            aux_[n_ - 1] = off;
            auto low2 = lower_, dia2 = diag_, up2 = upper_;
            thomas(lower_, diag_, upper_, rhs);
            thomas(low2, dia2, up2, aux_);
            const double vy = rhs[0] + (off / alpha) * rhs[n_ - 1];
            const double vz = aux_[0] + (off / alpha) * aux_[n_ - 1];
            const double s = vy / (1.0 + vz);
            for (std::size_t i = 0; i < n_; ++i) rhs[i] -= s * aux_[i];
        } else {
            // Mirror ghosts double the inward coupling of the end rows.
            upper_[0] = 2.0 * off;
            lower_[n_ - 1] = 2.0 * off;
            thomas(lower_, diag_, upper_, rhs);
        }
    }

private:
    DomainSpec::Kind kind_;
    std::size_t n_;
    double diff_, decay_, dx_;
    std::vector<double> lower_, diag_, upper_, aux_;
};

double wrap_delta(double d, double L) {
    if (L <= 0.0) return d;
    d = std::fmod(d, L);
    if (d > 0.5 * L) d -= L;
    if (d < -0.5 * L) d += L;
    return d;
}

double domain_length(const DomainSpec& domain) { return domain.L; }

}  // namespace

Grid Grid::make(const DomainSpec& domain, const ModelParams& params, double dx_hint) {
    domain.validate();
    params.validate();
    Grid g;
    double L;
    if (domain.kind == DomainSpec::Kind::Unbounded) {
        g.domain = DomainSpec::neumann(80.0);
        g.x0 = -40.0;
        L = 80.0;
    } else {
        g.domain = domain;
        g.x0 = 0.0;
        L = domain.L;
    }
    const double width = params.D / std::sqrt(params.m);
    const double target = dx_hint > 0.0 ? dx_hint : std::min(width / 8.0, L / 4096.0);
    const std::size_t cells = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(L / target)));
    g.dx = L / static_cast<double>(cells);
    const std::size_t nodes = g.domain.kind == DomainSpec::Kind::Periodic ? cells : cells + 1;
    g.x.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) g.x[i] = g.x0 + g.dx * static_cast<double>(i);
    return g;
}

FieldState build_initial(const PulseConfig& config, const ModelParams& params,
                         const Terrain& terrain, const DomainSpec& domain, const Grid& grid) {
    params.validate();
    const std::size_t n = grid.n();
    FieldState state;
    state.t = config.t;
    state.a = params.a(config.t);
    state.U.assign(n, state.a);
    state.V.assign(n, 0.0);
    if (config.positions.empty()) return state;

    config.validate(domain);
    const double sqm = std::sqrt(params.m);
    const double min_gap = 10.0 * params.D / sqm;
    const bool periodic = grid.domain.kind == DomainSpec::Kind::Periodic;
    const double L = domain_length(grid.domain);
    if (!(config.positions.front() > grid.x0) ||
        !(config.positions.back() < grid.x0 + L))
        throw ValidationError("build_initial: pulses must lie inside the simulation box");
    const std::size_t np = config.positions.size();
    for (std::size_t j = 1; j < np; ++j)
        if (config.positions[j] - config.positions[j - 1] < min_gap)
            throw ValidationError("build_initial: pulses overlap within the inner width");
    if (periodic && np > 1 &&
        (config.positions.front() + L) - config.positions.back() < min_gap)
        throw ValidationError("build_initial: pulses overlap within the inner width");

    std::vector<double> u0 = config.amplitudes;
    if (u0.empty()) u0 = amplitudes_newton(config, params, terrain, grid.domain).u0;
    if (u0.size() != np)
        throw ValidationError("build_initial: amplitude count does not match the pulses");

    // Vegetation: scaled sech^2 core per pulse, nearest periodic image.
    const double vscale = state.a / (sqm * params.D);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < np; ++j) {
            double d = grid.x[i] - config.positions[j];
            if (periodic) d = wrap_delta(d, L);
            const double arg = sqm * d / (2.0 * params.D);
            if (std::abs(arg) > 40.0) continue;
            const double c = 1.0 / std::cosh(arg);
            v += vscale * (3.0 / (2.0 * u0[j])) * c * c;
        }
        state.V[i] = v;
    }

    // Water: steady outer equation U_xx + h_x U_x + (h_xx - 1) U = -a on
    // each inter-pulse segment, pinned to the core values at the pulses.
    std::vector<std::size_t> pins(np);
    for (std::size_t j = 0; j < np; ++j) {
        const double rel = (config.positions[j] - grid.x0) / grid.dx;
        std::size_t i = static_cast<std::size_t>(std::llround(rel));
        if (i >= n) i = periodic ? i % n : n - 1;
        pins[j] = i;
    }
    std::vector<double> core(np);
    for (std::size_t j = 0; j < np; ++j)
        core[j] = params.m * sqm * params.D * u0[j] / state.a;
    for (std::size_t j = 0; j < np; ++j) state.U[pins[j]] = core[j];

    auto solve_segment = [&](std::size_t first, std::size_t count, double left_bc,
                             double right_bc, bool left_mirror, bool right_mirror) {
        // Nodes first..first+count-1 (mod n), Dirichlet values outside the
        // span unless a mirror end stands in for a Neumann wall.
        if (count == 0) return;
        std::vector<double> lo(count), di(count), up(count), rhs(count, -state.a);
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t i = (first + k) % n;
            const Terrain::Eval te = terrain.eval(grid.x[i]);
            lo[k] = 1.0 / (grid.dx * grid.dx) - te.hx / (2.0 * grid.dx);
            di[k] = -2.0 / (grid.dx * grid.dx) + te.hxx - 1.0;
            up[k] = 1.0 / (grid.dx * grid.dx) + te.hx / (2.0 * grid.dx);
        }
        if (left_mirror) {
            up[0] += lo[0];
        } else {
            rhs[0] -= lo[0] * left_bc;
        }
        if (right_mirror) {
            lo[count - 1] += up[count - 1];
        } else {
            rhs[count - 1] -= up[count - 1] * right_bc;
        }
        thomas(lo, di, up, rhs);
        for (std::size_t k = 0; k < count; ++k) state.U[(first + k) % n] = rhs[k];
    };

    if (periodic) {
        for (std::size_t j = 0; j < np; ++j) {
            const std::size_t a_pin = pins[j];
            const std::size_t b_pin = pins[(j + 1) % np];
            std::size_t gap = (b_pin + n - a_pin) % n;
            if (gap == 0) gap = n;
            if (gap <= 1) continue;
            solve_segment((a_pin + 1) % n, gap - 1, core[j], core[(j + 1) % np], false, false);
        }
    } else {
        if (pins.front() > 0) solve_segment(0, pins.front(), 0.0, core.front(), true, false);
        for (std::size_t j = 0; j + 1 < np; ++j) {
            if (pins[j + 1] > pins[j] + 1)
                solve_segment(pins[j] + 1, pins[j + 1] - pins[j] - 1, core[j], core[j + 1],
                              false, false);
        }
        if (pins.back() + 1 < n)
            solve_segment(pins.back() + 1, n - pins.back() - 1, core.back(), 0.0, false, true);
    }
    return state;
}

std::vector<PulseSample> extract_pulses(const FieldState& state, const Grid& grid,
                                        double threshold) {
    const std::size_t n = grid.n();
    const bool periodic = grid.domain.kind == DomainSpec::Kind::Periodic;
    const double L = domain_length(grid.domain);
    std::vector<PulseSample> found;
    if (n < 3) return found;

    auto refine = [&](double vm, double v0, double vp, double x) {
        const double denom = vm - 2.0 * v0 + vp;
        double off = 0.0;
        if (std::abs(denom) > 1e-300) off = 0.5 * (vm - vp) / denom * grid.dx;
        off = std::clamp(off, -0.5 * grid.dx, 0.5 * grid.dx);
        double pos = x + off;
        if (periodic) {
            pos = grid.x0 + std::fmod(pos - grid.x0 + L, L);
        }
        return pos;
    };

    const std::size_t lo = periodic ? 0 : 1;
    const std::size_t hi = periodic ? n : n - 1;
    for (std::size_t i = lo; i < hi; ++i) {
        const double vm = state.V[(i + n - 1) % n];
        const double vp = state.V[(i + 1) % n];
        const double v0 = state.V[i];
        if (!(v0 > vm && v0 >= vp) || v0 < threshold) continue;
        found.push_back({refine(vm, v0, vp, grid.x[i]), v0});
    }
    if (!periodic) {
        // Walls host maxima through the mirror ghost.
        if (n >= 2 && state.V[0] > state.V[1] && state.V[0] >= threshold)
            found.insert(found.begin(), {grid.x[0], state.V[0]});
        if (n >= 2 && state.V[n - 1] > state.V[n - 2] && state.V[n - 1] >= threshold)
            found.push_back({grid.x[n - 1], state.V[n - 1]});
    }
    std::sort(found.begin(), found.end(),
              [](const PulseSample& a, const PulseSample& b) { return a.position < b.position; });

    // Plateau guard: maxima closer than 4 dx are one pulse.
    auto merged = [&](std::vector<PulseSample>& v) {
        for (std::size_t i = 0; i + 1 < v.size();) {
            if (v[i + 1].position - v[i].position < 4.0 * grid.dx) {
                v.erase(v.begin() + (v[i + 1].height > v[i].height ? i : i + 1));
            } else {
                ++i;
            }
        }
        if (periodic && v.size() > 1) {
            const double gap = (v.front().position + L) - v.back().position;
            if (gap < 4.0 * grid.dx)
                v.erase(v.front().height >= v.back().height ? v.end() - 1 : v.begin());
        }
    };
    merged(found);
    return found;
}

PdeRun simulate_pde(const ModelParams& params, const Terrain& terrain, const Grid& grid,
                    const FieldState& initial, double t_end, const PdeOptions& options) {
    params.validate();
    const std::size_t n = grid.n();
    if (initial.U.size() != n || initial.V.size() != n)
        throw ValidationError("simulate_pde: initial fields do not match the grid");
    if (!(t_end > initial.t)) throw ValidationError("simulate_pde: t_end must exceed t0");
    const double width = params.D / std::sqrt(params.m);
    if (grid.dx > width / 8.0 + 1e-15)
        throw ValidationError("simulate_pde: grid does not resolve the pulse width");
    const kernels::KernelSet& K = kernels::active_kernels();
    for (double u : initial.U)
        if (!finite(u)) throw ValidationError("simulate_pde: non-finite initial U");
    for (double v : initial.V)
        if (!finite(v)) throw ValidationError("simulate_pde: non-finite initial V");

    PdeRun run;
    FieldState cur = initial;
    cur.a = params.a(cur.t);
    if (options.noise_amplitude > 0.0) {
        std::mt19937_64 rng(options.noise_seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : cur.V) v = std::max(0.0, v + options.noise_amplitude * dist(rng));
    }

    // Terrain arrays; the advection kernel wants h_x/(2 dx) and h_xx.
    const bool periodic = grid.domain.kind == DomainSpec::Kind::Periodic;
    std::vector<double> c1(n), c2(n);
    double max_hx = 0.0, max_hxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Terrain::Eval te = terrain.eval(grid.x[i]);
        c1[i] = te.hx / (2.0 * grid.dx);
        c2[i] = te.hxx;
        max_hx = std::max(max_hx, std::abs(te.hx));
        max_hxx = std::max(max_hxx, std::abs(te.hxx));
    }

    auto stable_dt = [&](const FieldState& s) {
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double damp = s.V[i] * s.V[i];
            const double grow = 2.0 * s.U[i] * s.V[i];
            rate = std::max(rate, std::max(damp, grow));
        }
        rate += max_hxx;
        double dt = 0.4 / std::max(rate, 1e-12);
        if (max_hx > 0.0) dt = std::min(dt, 0.5 * grid.dx / max_hx);
        return options.safety * dt;
    };

    const double span = t_end - initial.t;
    double dt = options.dt > 0.0 ? options.dt : std::min(stable_dt(cur), span / 16.0);
    auto align_dt = [&](double want, double remaining) {
        const double steps = std::ceil(remaining / want - 1e-9);
        return remaining / std::max(1.0, steps);
    };
    dt = align_dt(dt, span);
    run.dt = dt;

    ImplicitField field_u(grid, 1.0, 1.0);
    ImplicitField field_v(grid, params.D * params.D, params.m);

    std::vector<double> fu(n), fv(n), fu_prev(n), fv_prev(n), rhs_u(n), rhs_v(n);
    std::vector<double> u_prev = cur.U, v_prev = cur.V;

    auto explicit_terms = [&](const FieldState& s, std::vector<double>& out_u,
                              std::vector<double>& out_v) {
        K.reaction(n, s.U.data(), s.V.data(), params.a(s.t), out_u.data(), out_v.data());
        K.advect_add(n, s.U.data(), c1.data(), c2.data(), out_u.data());
        if (periodic) {
            out_u[0] += c1[0] * (s.U[1] - s.U[n - 1]) + c2[0] * s.U[0];
            out_u[n - 1] += c1[n - 1] * (s.U[0] - s.U[n - 2]) + c2[n - 1] * s.U[n - 1];
        } else {
            // Mirror ghosts null the centered U_x at the walls.
            out_u[0] += c2[0] * s.U[0];
            out_u[n - 1] += c2[n - 1] * s.U[n - 1];
        }
    };

    auto clip_v = [&](FieldState& s) {
        for (double& v : s.V) {
            if (v < 0.0) {
                run.min_v = std::min(run.min_v, v);
                v = 0.0;
            }
        }
    };

    auto check_fields = [&](const FieldState& s) {
        const double mu = K.max_abs(n, s.U.data());
        const double mv = K.max_abs(n, s.V.data());
        if (!finite(mu) || !finite(mv) || mu > options.blowup_threshold ||
            mv > options.blowup_threshold)
            throw NumericalError(
                format_msg("pde fields blew up at t=%.6g, max|U|=%.3g, max|V|=%.3g", s.t, mu, mv));
    };

    // Track plumbing.
    const double L = domain_length(grid.domain);
    const double gap_tol = std::max(20.0 * grid.dx, 0.1);
    double threshold = 0.0;
    {
        const auto first = extract_pulses(cur, grid, 0.0);
        if (!first.empty()) {
            double mean = 0.0;
            for (const auto& p : first) mean += p.height;
            mean /= static_cast<double>(first.size());
            threshold = options.extinction_fraction * mean;
        }
    }
    auto sample_tracks = [&](const FieldState& s) {
        auto samples = extract_pulses(s, grid, threshold);
        std::vector<bool> used(samples.size(), false);
        for (auto& tr : run.tracks) {
            if (!tr.alive) continue;
            const double last = tr.position.back();
            std::size_t best = samples.size();
            double best_d = gap_tol;
            for (std::size_t k = 0; k < samples.size(); ++k) {
                if (used[k]) continue;
                double d = std::abs(samples[k].position - last);
                if (periodic) d = std::abs(wrap_delta(samples[k].position - last, L));
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            if (best == samples.size()) {
                tr.alive = false;
                tr.death = s.t;
            } else {
                used[best] = true;
                tr.t.push_back(s.t);
                tr.position.push_back(samples[best].position);
                tr.height.push_back(samples[best].height);
            }
        }
        for (std::size_t k = 0; k < samples.size(); ++k) {
            if (used[k]) continue;
            PulseTrack tr;
            tr.birth = s.t;
            tr.t.push_back(s.t);
            tr.position.push_back(samples[k].position);
            tr.height.push_back(samples[k].height);
            run.tracks.push_back(std::move(tr));
        }
        double mu = 0.0, mv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu += s.U[i];
            mv += s.V[i];
        }
        if (!periodic) {
            mu -= 0.5 * (s.U.front() + s.U.back());
            mv -= 0.5 * (s.V.front() + s.V.back());
        }
        run.mass_t.push_back(s.t);
        run.mass_u.push_back(mu * grid.dx);
        run.mass_v.push_back(mv * grid.dx);
    };

    run.snapshots.push_back(cur);
    double next_track = cur.t;
    double next_snapshot =
        options.snapshot_stride > 0.0 ? cur.t + options.snapshot_stride : t_end + span;

    bool have_history = false;
    std::int64_t since_recheck = 0;
    while (cur.t < t_end - 1e-12 * span) {
        if (cur.t >= next_track) {
            sample_tracks(cur);
            while (next_track <= cur.t) next_track += options.track_stride;
        }
        if (cur.t >= next_snapshot) {
            run.snapshots.push_back(cur);
            while (next_snapshot <= cur.t) next_snapshot += options.snapshot_stride;
        }
        if (options.dt <= 0.0 && ++since_recheck >= 128) {
            since_recheck = 0;
            const double bound = stable_dt(cur);
            if (dt > bound) {
                dt = align_dt(0.8 * bound, t_end - cur.t);
                run.dt = dt;
                have_history = false;
            }
        }

        explicit_terms(cur, fu, fv);
        FieldState next;
        next.t = cur.t + dt;
        next.a = params.a(next.t);
        next.U.resize(n);
        next.V.resize(n);
        if (!have_history) {
            // One implicit-explicit Euler step seeds the two-level history.
            K.combine(n, 1.0, cur.U.data(), dt, fu.data(), 0.0, fu.data(), 0.0, fu.data(),
                      rhs_u.data());
            K.combine(n, 1.0, cur.V.data(), dt, fv.data(), 0.0, fv.data(), 0.0, fv.data(),
                      rhs_v.data());
            field_u.solve(dt, rhs_u);
            field_v.solve(dt, rhs_v);
            have_history = true;
        } else {
            const double g = 2.0 * dt / 3.0;
            K.combine(n, 4.0 / 3.0, cur.U.data(), -1.0 / 3.0, u_prev.data(), 2.0 * g, fu.data(),
                      -g, fu_prev.data(), rhs_u.data());
            K.combine(n, 4.0 / 3.0, cur.V.data(), -1.0 / 3.0, v_prev.data(), 2.0 * g, fv.data(),
                      -g, fv_prev.data(), rhs_v.data());
            field_u.solve(g, rhs_u);
            field_v.solve(g, rhs_v);
        }
        u_prev.swap(cur.U);
        v_prev.swap(cur.V);
        next.U.swap(rhs_u);
        next.V.swap(rhs_v);
        fu_prev.swap(fu);
        fv_prev.swap(fv);
        clip_v(next);
        check_fields(next);
        cur = std::move(next);
        if (++run.steps > options.max_steps)
            throw NumericalError(format_msg("pde exceeded the step budget at t=%.6g", cur.t));
    }
    sample_tracks(cur);
    run.snapshots.push_back(cur);
    run.final_state = cur;
    return run;
}

CompareMetrics compare(const CascadeTrace& ode, const std::vector<PulseTrack>& pde_tracks,
                       const DomainSpec& domain) {
    if (ode.segments.empty() || ode.segments.front().trajectory.t.empty())
        throw ValidationError("compare: the cascade trace is empty");
    const bool periodic = domain.kind == DomainSpec::Kind::Periodic;
    const double L = domain.L;
    auto dist = [&](double a, double b) {
        const double d = a - b;
        return periodic ? std::abs(wrap_delta(d, L)) : std::abs(d);
    };

    // Identity of each segment's columns in terms of the initial pulses.
    const int n0 = ode.segments.front().n_pulses;
    struct Life {
        std::vector<double> t;
        std::vector<double> pos;
        double removal = std::numeric_limits<double>::infinity();
        bool removed = false;
    };
    std::vector<Life> lives(static_cast<std::size_t>(n0));
    std::vector<int> ids(static_cast<std::size_t>(n0));
    for (int j = 0; j < n0; ++j) ids[static_cast<std::size_t>(j)] = j;
    for (const auto& seg : ode.segments) {
        const Trajectory& traj = seg.trajectory;
        for (std::size_t r = 0; r < traj.t.size(); ++r) {
            for (std::size_t c = 0; c < ids.size(); ++c) {
                Life& life = lives[static_cast<std::size_t>(ids[c])];
                life.t.push_back(traj.t[r]);
                life.pos.push_back(traj.P[r][c]);
            }
        }
        if (seg.event) {
            std::vector<int> survivors;
            std::size_t r = 0;
            for (std::size_t c = 0; c < ids.size(); ++c) {
                if (r < seg.event->removed.size() &&
                    seg.event->removed[r] == static_cast<int>(c)) {
                    Life& life = lives[static_cast<std::size_t>(ids[c])];
                    life.removed = true;
                    life.removal = seg.event->t;
                    ++r;
                } else {
                    survivors.push_back(ids[c]);
                }
            }
            ids = std::move(survivors);
        }
    }

    // Match initial pulses to tracks born at the start, in position order.
    const double t0 = ode.segments.front().trajectory.t.front();
    std::vector<const PulseTrack*> born;
    for (const auto& tr : pde_tracks)
        if (tr.birth <= t0 + 1e-9 && !tr.position.empty()) born.push_back(&tr);
    if (static_cast<int>(born.size()) != n0)
        throw ValidationError("compare: initial track count does not match the cascade");
    std::sort(born.begin(), born.end(), [](const PulseTrack* a, const PulseTrack* b) {
        return a->position.front() < b->position.front();
    });
    double min_gap = std::numeric_limits<double>::infinity();
    for (int j = 1; j < n0; ++j)
        min_gap = std::min(min_gap, lives[static_cast<std::size_t>(j)].pos.front() -
                                        lives[static_cast<std::size_t>(j - 1)].pos.front());
    const double tol = n0 > 1 ? 0.25 * min_gap : 0.25 * (L > 0.0 ? L : 10.0);
    for (int j = 0; j < n0; ++j)
        if (dist(born[static_cast<std::size_t>(j)]->position.front(),
                 lives[static_cast<std::size_t>(j)].pos.front()) > tol)
            throw ValidationError("compare: track association exceeded the gap tolerance");

    CompareMetrics mx;
    mx.per_pulse_error.assign(static_cast<std::size_t>(n0), 0.0);
    for (int j = 0; j < n0; ++j) {
        const Life& life = lives[static_cast<std::size_t>(j)];
        const PulseTrack& tr = *born[static_cast<std::size_t>(j)];
        const double t_stop = std::min(life.removal, tr.alive ? life.t.back() : tr.death);
        double worst = 0.0;
        std::size_t cursor = 1;
        for (std::size_t k = 0; k < tr.t.size(); ++k) {
            const double t = tr.t[k];
            if (t > t_stop || t > life.t.back()) break;
            while (cursor < life.t.size() && life.t[cursor] < t) ++cursor;
            double p;
            if (cursor >= life.t.size()) {
                p = life.pos.back();
            } else {
                const double t1 = life.t[cursor - 1], t2 = life.t[cursor];
                const double w = t2 > t1 ? (t - t1) / (t2 - t1) : 0.0;
                p = (1.0 - w) * life.pos[cursor - 1] + w * life.pos[cursor];
            }
            worst = std::max(worst, dist(tr.position[k], p));
        }
        mx.per_pulse_error[static_cast<std::size_t>(j)] = worst;
        mx.max_position_error = std::max(mx.max_position_error, worst);
        if (life.removed && !tr.alive)
            mx.annihilation_offsets.push_back(tr.death - life.removal);
    }

    int survivors_ode = 0;
    for (const Life& life : lives)
        if (!life.removed) ++survivors_ode;
    if (ode.terminal == CascadeTrace::Terminal::Extinct) survivors_ode = 0;
    mx.survivors_ode = survivors_ode;
    for (const auto& tr : pde_tracks)
        if (tr.alive) ++mx.survivors_pde;
    mx.survivors_match = mx.survivors_ode == mx.survivors_pde;
    return mx;
}

}  // namespace kgs
