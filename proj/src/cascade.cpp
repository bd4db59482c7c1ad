#include "kgs/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "kgs/amplitudes.hpp"
#include "kgs/common.hpp"

namespace kgs {

namespace {

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string format_note(const char* fmt, double t, const char* extra = nullptr) {
    char buf[256];
    if (extra)
        std::snprintf(buf, sizeof(buf), fmt, t, extra);
    else
        std::snprintf(buf, sizeof(buf), fmt, t);
    return buf;
}

std::vector<double> interp_positions(const Trajectory& traj, double t) {
    const auto& ts = traj.t;
    if (ts.empty()) throw ValidationError("cascade: trajectory has no stored rows");
    if (t <= ts.front()) return traj.P.front();
    if (t >= ts.back()) return traj.P.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double t0 = ts[i - 1];
    const double t1 = ts[i];
    const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
    std::vector<double> p(traj.P[i - 1].size());
    for (std::size_t j = 0; j < p.size(); ++j)
        p[j] = (1.0 - w) * traj.P[i - 1][j] + w * traj.P[i][j];
    return p;
}

std::vector<double> nearest_u0(const Trajectory& traj, double t) {
    const auto& ts = traj.t;
    if (ts.empty()) throw ValidationError("cascade: trajectory has no stored rows");
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::size_t i = static_cast<std::size_t>(it - ts.begin());
    if (i == ts.size()) {
        i = ts.size() - 1;
    } else if (i > 0 && std::abs(ts[i - 1] - t) <= std::abs(ts[i] - t)) {
        --i;
    }
    return traj.u0[i];
}

struct ProbeOutcome {
    MonitorPoint point;
    PulseConfig config;  // amplitudes filled when point.amplitudes_ok
    std::optional<SpectrumReport> report;
};

// Cold Newton starts can miss tightly packed branches well inside their
// existence region. Solving first at an inflated steady supply and walking
// the supply back down with step halving keeps every solve inside the
// Newton basin. Past a fold no quasi-steady branch continues, so the step
// underflows and the walk fails honestly.
std::vector<double> continued_amplitudes(const PulseConfig& cfg, const ModelParams& params,
                                         const Terrain& terrain, const DomainSpec& domain) {
    const double a_target = params.a(cfg.t);
    ModelParams relaxed = params;
    for (double factor : {2.0, 4.0, 8.0, 16.0}) {
        relaxed.a = Schedule::constant(factor * a_target);
        AmplitudeSolve hot = try_amplitudes_newton(cfg, relaxed, terrain, domain);
        if (!hot.converged) continue;
        std::vector<double> u0 = std::move(hot.u0);
        double a_now = factor * a_target;
        double step = 0.05 * a_now;
        for (int solves = 0; a_now > a_target && solves < 400; ++solves) {
            const double a_next = std::max(a_target, a_now - step);
            relaxed.a = Schedule::constant(a_next);
            AmplitudeSolve st = try_amplitudes_newton(cfg, relaxed, terrain, domain,
                                                      AmplitudeSolve::Branch::Minus, &u0);
            if (st.converged) {
                u0 = std::move(st.u0);
                a_now = a_next;
                step = std::min(step * 1.5, 0.05 * a_now);
            } else {
                step *= 0.25;
                if (step < 1e-5 * a_target) break;
            }
        }
        if (a_now <= a_target) return u0;
        return {};
    }
    return {};
}

// Amplitude solve plus spectrum evaluation at one instant. Auto mode falls
// back from the coupled to the decoupled solver on failure, once noted.
class SpectrumMonitor {
public:
    SpectrumMonitor(const ModelParams& params, const Terrain& terrain,
                    const DomainSpec& domain, SpectrumChoice mode,
                    std::vector<std::string>& notes)
        : params_(params), terrain_(terrain), domain_(domain), mode_(mode), notes_(&notes) {}

    ProbeOutcome eval(double t, std::vector<double> positions,
                      const std::vector<double>& warm) const {
        ProbeOutcome out;
        out.point.t = t;
        out.config.t = t;
        out.config.positions = std::move(positions);
        const std::vector<double>* warm_ptr = warm.empty() ? nullptr : &warm;
        const AmplitudeSolve solve = try_amplitudes_newton(
            out.config, params_, terrain_, domain_, AmplitudeSolve::Branch::Minus, warm_ptr);
        if (solve.converged) {
            out.config.amplitudes = solve.u0;
        } else {
            out.config.amplitudes = continued_amplitudes(out.config, params_, terrain_, domain_);
            if (out.config.amplitudes.empty()) return out;
        }
        out.point.amplitudes_ok = true;
        try {
            out.report = evaluate(out.config);
        } catch (const std::exception& e) {
            if (mode_ == SpectrumChoice::Auto) {
                try {
                    out.report = dsp_spectrum(out.config, params_, terrain_.slope());
                    note_fallback(t, e.what());
                } catch (const std::exception&) {
                    out.report.reset();
                }
            }
        }
        if (out.report && out.report->eigenvalues.empty()) out.report.reset();
        if (out.report) {
            out.point.spectrum_ok = true;
            out.point.max_re = out.report->max_re();
        }
        return out;
    }

private:
    SpectrumReport evaluate(const PulseConfig& cfg) const {
        const double H = terrain_.slope();
        switch (mode_) {
            case SpectrumChoice::Dsp:
                return dsp_spectrum(cfg, params_, H);
            case SpectrumChoice::SmallM:
                return small_m_spectrum(cfg, params_, H, domain_);
            case SpectrumChoice::Csp:
            case SpectrumChoice::Auto:
                return csp_spectrum(cfg, params_, H, domain_);
        }
        throw NumericalError("cascade: unknown spectrum mode");
    }

    void note_fallback(double t, const char* why) const {
        if (fallback_noted_) return;
        fallback_noted_ = true;
        notes_->push_back(
            format_note("coupled spectrum failed at t=%.6g, fell back to decoupled: %s", t, why));
    }

    const ModelParams& params_;
    const Terrain& terrain_;
    const DomainSpec& domain_;
    SpectrumChoice mode_;
    std::vector<std::string>* notes_;
    mutable bool fallback_noted_ = false;
};

}  // namespace

std::vector<CascadeEvent> CascadeTrace::events() const {
    std::vector<CascadeEvent> out;
    for (const auto& seg : segments)
        if (seg.event) out.push_back(*seg.event);
    return out;
}

PatternClass classify_pattern(const PulseConfig& config, const SpectrumReport& report,
                              const CascadeTuning& tuning,
                              std::optional<PatternClass> previous) {
    const int n = config.n();
    if (n < 2 || report.eigenvalues.empty()) return PatternClass::Irregular;
    if (static_cast<int>(report.K.size()) != n)
        throw ValidationError("classify_pattern: K does not match the pulse count");

    double kmin = report.K[0];
    double kmax = report.K[0];
    double kmean = 0.0;
    for (double k : report.K) {
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
        kmean += k;
    }
    kmean /= n;
    if (kmean <= 0.0) return PatternClass::Irregular;

    const bool was_regular = previous && *previous == PatternClass::Regular;
    const double tol = tuning.regularity_tol * (was_regular ? 1.25 : 1.0);
    if ((kmax - kmin) / kmean >= tol) return PatternClass::Irregular;

    // the critical eigenvalue must belong to a cluster, not stand alone;
    // the radius is a fixed fraction of the visible band so a split but
    // still coherent mode family stays regular while a lone crossing does
    // not, independent of how far the remaining spectrum trails behind
    const cplx lead = report.eigenvalues.front().lambda;
    const double radius = tuning.cluster_tol * report.lambda_window;
    int close = 0;
    for (const auto& e : report.eigenvalues)
        if (std::abs(e.lambda - lead) <= radius) ++close;
    return close >= 2 ? PatternClass::Regular : PatternClass::Irregular;
}

RemovalDecision select_removal(const SpectrumReport& report, const PulseConfig& config,
                               const CascadeTuning& tuning, bool parity_flip,
                               std::optional<PatternClass> previous) {
    if (report.eigenvalues.empty())
        throw ValidationError("select_removal: spectrum report has no eigenvalues");
    const int n = config.n();
    if (static_cast<int>(report.K.size()) != n)
        throw ValidationError("select_removal: K does not match the pulse count");

    RemovalDecision dec;
    dec.pattern = classify_pattern(config, report, tuning, previous);

    const int jmax = argmax_index(report.K);
    bool regular_rules = dec.pattern == PatternClass::Regular;
    if (!regular_rules && n >= 2) {
        // a near-tie of the top carrying values makes single removal
        // arbitrary, so fall through to the sign-pattern rules
        double second = -1.0;
        for (int j = 0; j < n; ++j)
            if (j != jmax) second = std::max(second, report.K[j]);
        if (report.K[jmax] > 0.0 &&
            (report.K[jmax] - second) / report.K[jmax] < tuning.regularity_tol) {
            regular_rules = true;
            dec.ambiguity = true;
        }
    }

    const auto& signs = report.eigenvalues.front().sign_pattern;
    if (regular_rules && n >= 2 && static_cast<int>(signs.size()) == n) {
        bool alternating = true;
        bool single_signed = true;
        for (int j = 0; j < n; ++j) {
            if (signs[j] == 0) {
                alternating = false;
                single_signed = false;
                break;
            }
            if (j > 0) {
                if (signs[j] * signs[j - 1] != -1) alternating = false;
                if (signs[j] != signs[j - 1]) single_signed = false;
            }
        }
        if (alternating) {
            dec.kind = RemovalKind::PeriodDoubling;
            dec.parity = parity_flip ? 0 : 1;
            for (int j = dec.parity; j < n; j += 2) dec.removed.push_back(j);
            dec.ambiguity = true;  // the surviving comb is a convention
            return dec;
        }
        if (single_signed) {
            dec.kind = RemovalKind::FullCollapse;
            for (int j = 0; j < n; ++j) dec.removed.push_back(j);
            return dec;
        }
        // mixed sign pattern: no family rule applies, fall back to the
        // strongest single pulse and flag the call
        dec.ambiguity = true;
    }

    dec.kind = RemovalKind::Single;
    dec.removed = {jmax};
    dec.weight_mismatch = report.critical_pulse >= 0 && report.critical_pulse != jmax;
    return dec;
}

double detect_crossing(const std::function<MonitorPoint(double)>& probe, MonitorPoint lo,
                       MonitorPoint hi, double dt_tol, double lambda_tol) {
    if (!(hi.t > lo.t)) throw ValidationError("detect_crossing: bracket is not ordered");
    if (!(dt_tol > 0.0)) throw ValidationError("detect_crossing: dt_tol must be positive");
    if (!lo.amplitudes_ok || !lo.spectrum_ok || lo.max_re > 0.0)
        throw ValidationError("detect_crossing: lower point must be solvable and stable");
    if (hi.amplitudes_ok && hi.spectrum_ok && hi.max_re <= 0.0)
        throw ValidationError("detect_crossing: upper point must be unstable or unsolvable");

    for (int it = 0; it < 80; ++it) {
        const bool hi_solvable = hi.amplitudes_ok && hi.spectrum_ok;
        // a fold bracket cannot sharpen the eigenvalue, width decides alone
        if (hi.t - lo.t <= dt_tol &&
            (!hi_solvable || std::abs(lo.max_re) <= lambda_tol))
            break;
        const MonitorPoint mid = probe(0.5 * (lo.t + hi.t));
        if (!mid.amplitudes_ok || !mid.spectrum_ok || mid.max_re > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return lo.t;
}

namespace {

Trajectory single_row(const ProbeOutcome& at, const ModelParams& params,
                      Trajectory::Reason reason) {
    Trajectory traj;
    traj.t = {at.point.t};
    traj.P = {at.config.positions};
    traj.u0 = {at.config.amplitudes};
    traj.a = {params.a(at.point.t)};
    traj.reason = reason;
    traj.t_final = at.point.t;
    return traj;
}

Trajectory truncate_to_event(const Trajectory& traj, const ProbeOutcome& at,
                             const ModelParams& params) {
    const double te = at.point.t;
    Trajectory out;
    for (std::size_t i = 0; i < traj.t.size() && traj.t[i] < te; ++i) {
        out.t.push_back(traj.t[i]);
        out.P.push_back(traj.P[i]);
        out.u0.push_back(traj.u0[i]);
        out.a.push_back(traj.a[i]);
    }
    out.t.push_back(te);
    out.P.push_back(at.config.positions);
    out.u0.push_back(at.config.amplitudes);
    out.a.push_back(params.a(te));
    out.reason = Trajectory::Reason::Event;
    out.t_final = te;
    return out;
}

CascadeEvent build_event(const ProbeOutcome& at, bool fold, const ModelParams& params,
                         const CascadeTuning& tuning, bool parity_flip,
                         std::optional<PatternClass> previous,
                         std::vector<std::string>& notes) {
    const SpectrumReport& rep = *at.report;
    const RemovalDecision dec = select_removal(rep, at.config, tuning, parity_flip, previous);
    CascadeEvent ev;
    ev.t = at.point.t;
    ev.a = params.a(ev.t);
    ev.lambda = rep.eigenvalues.front().lambda;
    ev.bifurcation = std::abs(ev.lambda.imag()) > tuning.hopf_tol ? Bifurcation::Hopf
                                                                  : Bifurcation::SaddleNode;
    ev.pattern = dec.pattern;
    ev.kind = dec.kind;
    ev.removed = dec.removed;
    ev.parity = dec.parity;
    ev.ambiguity = dec.ambiguity;
    ev.from_existence_fold = fold;
    if (dec.weight_mismatch)
        notes.push_back(format_note(
            "dominant eigenfunction weight disagrees with argmax K at t=%.6g", ev.t));
    return ev;
}

}  // namespace

CascadeTrace run_cascade(const PulseConfig& initial, const ModelParams& params,
                         const Terrain& terrain, const DomainSpec& domain, double t_end,
                         SpectrumChoice mode, const CascadeOptions& options) {
    params.validate();
    initial.validate(domain);
    if (!terrain.is_constant_slope())
        throw ValidationError("cascade: spectrum monitoring requires constant-slope terrain");
    if (!(t_end > initial.t))
        throw ValidationError("cascade: t_end must exceed the start time");
    if (options.tuning.monitor_points < 2)
        throw ValidationError("cascade: monitor_points must be at least 2");

    const CascadeTuning& tun = options.tuning;
    CascadeTrace trace;
    SpectrumMonitor monitor(params, terrain, domain, mode, trace.notes);

    PulseConfig config = initial;
    config.amplitudes.clear();
    double t_cur = initial.t;
    const double span = t_end - initial.t;
    const double dt_tol = tun.dt_tol_factor * span;
    std::optional<PatternClass> prev_class;

    // applies a removal: records the segment, keeps the survivors, advances
    // the clock; returns false when the cascade is finished
    auto apply_event = [&](Trajectory seg_traj, const ProbeOutcome& at, bool fold) {
        CascadeEvent ev = build_event(at, fold, params, tun, options.parity_flip,
                                      prev_class, trace.notes);
        seg_traj.event_name = fold ? "existence_fold" : "stability_boundary";
        const int n_before = config.n();
        trace.segments.push_back({std::move(seg_traj), ev, n_before});

        std::vector<double> kept;
        std::vector<double> kept_u0;
        const bool have_u0 = at.config.amplitudes.size() == static_cast<std::size_t>(n_before);
        std::size_t r = 0;
        for (int j = 0; j < n_before; ++j) {
            if (r < ev.removed.size() && ev.removed[r] == j) {
                ++r;
                continue;
            }
            kept.push_back(at.config.positions[j]);
            if (have_u0) kept_u0.push_back(at.config.amplitudes[j]);
        }
        config.positions = std::move(kept);
        // survivor amplitudes jump after a removal but stay inside the
        // Newton basin, so the event values make a good warm start
        config.amplitudes = std::move(kept_u0);
        t_cur = ev.t;
        prev_class = ev.pattern;
        if (config.n() == 0) {
            trace.terminal = CascadeTrace::Terminal::Extinct;
            return false;
        }
        if (t_cur >= t_end) {
            trace.terminal = CascadeTrace::Terminal::TEnd;
            return false;
        }
        return true;
    };

    auto fail_with = [&](Trajectory seg_traj, std::string why) {
        trace.segments.push_back({std::move(seg_traj), std::nullopt, config.n()});
        trace.terminal = CascadeTrace::Terminal::Failed;
        trace.failure = std::move(why);
    };

    while (config.n() > 0) {
        // the survivors of an event may already sit past the boundary; in
        // that case the follow-up removal happens at the same instant
        ProbeOutcome start = monitor.eval(t_cur, config.positions, config.amplitudes);
        if (!start.point.amplitudes_ok) {
            if (trace.segments.empty())
                throw ValidationError(
                    "cascade: no quasi-steady amplitudes at the initial configuration");
            trace.terminal = CascadeTrace::Terminal::Failed;
            trace.failure = format_note(
                "quasi-steady amplitudes unsolvable for the survivors at t=%.6g", t_cur);
            return trace;
        }
        if (!start.point.spectrum_ok) {
            fail_with(single_row(start, params, Trajectory::Reason::TEnd),
                      format_note("spectrum solver failed at t=%.6g", t_cur));
            return trace;
        }
        if (start.point.max_re > 0.0) {
            if (!apply_event(single_row(start, params, Trajectory::Reason::Event), start, false))
                return trace;
            continue;
        }

        config.t = t_cur;
        const Trajectory traj = integrate(config, params, terrain, domain, t_cur, t_end,
                                          options.ode_mode, {}, options.integrate);

        auto on_track = [&](double t) {
            return monitor.eval(t, interp_positions(traj, t), nearest_u0(traj, t));
        };
        auto track_point = [&](double t) { return on_track(t).point; };

        const int nrows = static_cast<int>(traj.t.size());
        const int step = std::max(1, nrows / tun.monitor_points);
        MonitorPoint prev = start.point;
        MonitorPoint hi;
        bool bracket = false;
        bool solver_broke = false;
        for (int i = step; i < nrows + step; i += step) {
            const int idx = std::min(i, nrows - 1);
            const double tk = traj.t[idx];
            if (tk <= prev.t) {
                if (idx == nrows - 1) break;
                continue;
            }
            const MonitorPoint cur = track_point(tk);
            if (!cur.amplitudes_ok) {
                hi = cur;
                bracket = true;
                break;
            }
            if (!cur.spectrum_ok) {
                hi = cur;
                solver_broke = true;
                break;
            }
            if (cur.max_re > 0.0) {
                hi = cur;
                bracket = true;
                break;
            }
            prev = cur;
            if (idx == nrows - 1) break;
        }

        if (solver_broke) {
            ProbeOutcome last = on_track(prev.t);
            fail_with(truncate_to_event(traj, last, params),
                      format_note("spectrum solver failed at t=%.6g", hi.t));
            return trace;
        }

        if (bracket) {
            const double te = detect_crossing(track_point, prev, hi, dt_tol, tun.lambda_tol);
            const ProbeOutcome at = on_track(te);
            if (!at.point.spectrum_ok) {
                fail_with(truncate_to_event(traj, at, params),
                          format_note("spectrum solver failed at t=%.6g", te));
                return trace;
            }
            // a fold shows as unsolvable amplitudes just past the event
            const double beyond_t = std::min(hi.t, te + 2.0 * dt_tol);
            const bool fold =
                beyond_t > te && !track_point(beyond_t).amplitudes_ok;
            if (!apply_event(truncate_to_event(traj, at, params), at, fold)) return trace;
            continue;
        }

        switch (traj.reason) {
            case Trajectory::Reason::TEnd: {
                trace.segments.push_back({traj, std::nullopt, config.n()});
                trace.terminal = CascadeTrace::Terminal::TEnd;
                return trace;
            }
            case Trajectory::Reason::OdeFixedPoint: {
                trace.segments.push_back({traj, std::nullopt, config.n()});
                trace.terminal = CascadeTrace::Terminal::OdeFixedPoint;
                return trace;
            }
            case Trajectory::Reason::Event: {
                fail_with(traj, format_note("pulse collision at t=%.6g, the reduction "
                                            "does not continue through merges",
                                            traj.t_final));
                return trace;
            }
            case Trajectory::Reason::StepUnderflow: {
                fail_with(traj, format_note("step size underflow at t=%.6g", traj.t_final));
                return trace;
            }
            case Trajectory::Reason::AmplitudeFailure: {
                // the integrator lost the quasi-steady branch just past the
                // last stored row; localize the fold with positions frozen
                // there (drift is negligible on the localization scale)
                const std::vector<double> pf = traj.P_final();
                const std::vector<double> warm = traj.u0_final();
                auto frozen = [&](double t) { return monitor.eval(t, pf, warm).point; };
                MonitorPoint lo = prev;
                MonitorPoint hi2;
                bool found = false;
                for (double dt = std::max(dt_tol, span / 1024.0);; dt *= 2.0) {
                    const double tt = std::min(t_end, traj.t_final + dt);
                    hi2 = frozen(tt);
                    if (!hi2.amplitudes_ok || !hi2.spectrum_ok || hi2.max_re > 0.0) {
                        found = true;
                        break;
                    }
                    lo = hi2;
                    if (tt >= t_end) break;
                }
                if (!found) {
                    fail_with(traj, format_note("amplitude solve failed inside the "
                                                "integrator near t=%.6g but the fold "
                                                "could not be reproduced",
                                                traj.t_final));
                    return trace;
                }
                if (hi2.amplitudes_ok && !hi2.spectrum_ok) {
                    fail_with(traj, format_note("spectrum solver failed at t=%.6g", hi2.t));
                    return trace;
                }
                const double te = detect_crossing(frozen, lo, hi2, dt_tol, tun.lambda_tol);
                const ProbeOutcome at = monitor.eval(te, pf, warm);
                if (!at.point.spectrum_ok) {
                    fail_with(traj, format_note("spectrum solver failed at t=%.6g", te));
                    return trace;
                }
                const double beyond_t = std::min(hi2.t, te + 2.0 * dt_tol);
                const bool fold = !(beyond_t > te) || !frozen(beyond_t).amplitudes_ok;
                if (!apply_event(truncate_to_event(traj, at, params), at, fold)) return trace;
                continue;
            }
        }
        throw NumericalError("cascade: unhandled trajectory termination");
    }

    trace.terminal = CascadeTrace::Terminal::Extinct;
    return trace;
}

}  // namespace kgs
