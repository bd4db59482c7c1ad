#include "kgs/nlep.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "kgs/amplitudes.hpp"
#include "kgs/outer.hpp"

namespace kgs {

namespace {

double sech(double x) { return 1.0 / std::cosh(x); }

double omega_fn(double xi) {
    double s = sech(0.5 * xi);
    return 1.5 * s * s;
}

// Composite Simpson on a uniform grid with an even interval count.
cplx simpson(const std::vector<cplx>& f, double h) {
    cplx acc = f.front() + f.back();
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += (i % 2 ? 4.0 : 2.0) * f[i];
    return acc * (h / 3.0);
}

// Tridiagonal elimination without pivoting. The Numerov matrix is a small
// perturbation of the discrete Laplacian, so pivots stay O(1) away from
// zero except at the guarded resonances; collapse is checked regardless.
void thomas_solve(std::vector<cplx>& lower, std::vector<cplx>& diag,
                  std::vector<cplx>& upper, std::vector<cplx>& rhs) {
    std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(diag[i - 1]) < 1e-12)
            throw NumericalError("inner eigenfunction solve hit a vanishing pivot");
        cplx w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (std::abs(diag[n - 1]) < 1e-12)
        throw NumericalError("inner eigenfunction solve hit a vanishing pivot");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

unsigned long long cache_key(cplx lambda) {
    // Rounded bit pattern: evaluations within ~1e-12 share an entry.
    auto fold = [](double x) {
        double r = std::round(x * 1e12);
        unsigned long long u;
        static_assert(sizeof r == sizeof u);
        std::memcpy(&u, &r, sizeof u);
        return u;
    };
    return fold(lambda.real()) * 1000003ULL ^ fold(lambda.imag());
}

double bisect(const std::function<double(double)>& fn, double lo, double hi, double flo,
              int iters = 80) {
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = fn(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

NlepSolver::NlepSolver(double xi_max, std::size_t n_points, double pole_guard)
    : xi_max_(xi_max), n_(n_points), pole_guard_(pole_guard) {
    if (xi_max_ <= 0.0 || n_ < 601 || n_ % 2 != 1)
        throw ValidationError("inner grid needs xi_max > 0 and an odd point count >= 601");
    if (pole_guard_ <= 0.0) throw ValidationError("pole_guard must be positive");
    h_ = 2.0 * xi_max_ / static_cast<double>(n_ - 1);
    xi_.resize(n_);
    omega_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        xi_[i] = -xi_max_ + h_ * static_cast<double>(i);
        omega_[i] = omega_fn(xi_[i]);
    }
}

void NlepSolver::check_guard(cplx lambda) const {
    if (std::abs(lambda - cplx(pole_plus, 0.0)) < pole_guard_ ||
        std::abs(lambda - cplx(pole_minus, 0.0)) < pole_guard_)
        throw NumericalError("inner moment evaluated inside a pole guard");
    if (lambda.imag() == 0.0 && lambda.real() < -1.0)
        throw NumericalError("inner moment evaluated on the essential spectrum");
}

VinProfile NlepSolver::solve_interior(cplx lambda) const {
    // Numerov rows for v'' = q v + s with q = (1 + lambda) - 2 w, s = w^2.
    // Robin ends eliminate the ghost points through the centered first
    // derivative, which keeps the matrix tridiagonal.
    cplx kappa = std::sqrt(cplx(1.0, 0.0) + lambda);
    double h2 = h_ * h_;
    std::vector<cplx> lower(n_), diag(n_), upper(n_), rhs(n_);
    auto q = [&](std::size_t i) { return cplx(1.0, 0.0) + lambda - 2.0 * omega_[i]; };
    auto s = [&](std::size_t i) { return cplx(omega_[i] * omega_[i], 0.0); };
    auto a_of = [&](std::size_t i) { return 1.0 - h2 / 12.0 * q(i); };
    auto b_of = [&](std::size_t i) { return -2.0 * (1.0 + 5.0 * h2 / 12.0 * q(i)); };
    for (std::size_t i = 1; i + 1 < n_; ++i) {
        lower[i] = a_of(i - 1);
        diag[i] = b_of(i);
        upper[i] = a_of(i + 1);
        rhs[i] = h2 / 12.0 * (s(i - 1) + 10.0 * s(i) + s(i + 1));
    }
    // Left end: v'(xi0) = +kappa v0, ghost v_{-1} = v_1 - 2 h kappa v0.
    diag[0] = b_of(0) - 2.0 * h_ * kappa * a_of(0);
    upper[0] = a_of(1) + a_of(0);
    rhs[0] = h2 / 12.0 * (11.0 * s(0) + s(1));
    // Right end: v'(xi_n) = -kappa v_n, ghost v_{n+1} = v_{n-1} - 2 h kappa v_n.
    diag[n_ - 1] = b_of(n_ - 1) - 2.0 * h_ * kappa * a_of(n_ - 1);
    lower[n_ - 1] = a_of(n_ - 2) + a_of(n_ - 1);
    rhs[n_ - 1] = h2 / 12.0 * (s(n_ - 2) + 11.0 * s(n_ - 1));

    std::vector<cplx> low_c = lower, diag_c = diag, up_c = upper, sol = rhs;
    thomas_solve(low_c, diag_c, up_c, sol);

    VinProfile out;
    out.lambda = lambda;
    out.xi = xi_;
    out.v = std::move(sol);
    // Defect of the assembled rows at the computed values.
    double defect = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        cplx r = diag[i] * out.v[i] - rhs[i];
        if (i > 0) r += lower[i] * out.v[i - 1];
        if (i + 1 < n_) r += upper[i] * out.v[i + 1];
        defect = std::max(defect, std::abs(r));
    }
    out.residual = defect;
    if (!(defect < 1e-8))
        throw NumericalError("inner eigenfunction solve left a residual above 1e-8");
    for (const cplx& z : out.v)
        if (!finite(z)) throw NumericalError("inner eigenfunction solve produced non-finite values");
    return out;
}

VinProfile NlepSolver::solve_vin(cplx lambda) const {
    check_guard(lambda);
    // The operator kernel at lambda = 0 is odd while the forcing is even,
    // and the Robin ends degenerate at lambda = -1; both points have clean
    // even closed-form representatives.
    bool at_zero = std::abs(lambda) < 1e-9;
    bool at_edge = std::abs(lambda + 1.0) < 1e-9;
    if (at_zero || at_edge) {
        VinProfile out;
        out.lambda = lambda;
        out.xi = xi_;
        out.v.resize(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out.v[i] = at_zero ? cplx(omega_[i], 0.0) : cplx(omega_[i] - 0.5, 0.0);
        out.residual = 0.0;
        return out;
    }
    return solve_interior(lambda);
}

NlepEvaluation NlepSolver::eval_R(cplx lambda) const {
    check_guard(lambda);
    unsigned long long key = cache_key(lambda);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    VinProfile vin = solve_vin(lambda);
    std::vector<cplx> f(n_);
    for (std::size_t i = 0; i < n_; ++i) f[i] = omega_[i] * vin.v[i];
    NlepEvaluation ev;
    ev.lambda = lambda;
    ev.R = simpson(f, h_);
    ev.C = 6.0 - 2.0 * ev.R;
    ev.near_pole = std::abs(lambda - cplx(pole_plus, 0.0)) < 10.0 * pole_guard_ ||
                   std::abs(lambda - cplx(pole_minus, 0.0)) < 10.0 * pole_guard_;
    cache_.emplace(key, ev);
    return ev;
}

cplx NlepSolver::R_prime(cplx lambda, double step) const {
    return (eval_R(lambda + step).R - eval_R(lambda - step).R) / (2.0 * step);
}

const NlepSolver& default_nlep() {
    static NlepSolver solver;
    return solver;
}

double m_critical(double H) { return 3.0 * (1.0 + H * H / 4.0); }

cplx composed_rhs(cplx lambda, double m, double H, const NlepSolver& solver) {
    double c = (H * H + 4.0) / (4.0 * m);
    return (solver.eval_R(lambda).R - 3.0) / std::sqrt(lambda + c);
}

namespace {

struct RealAxis {
    // Connected real intervals on which f is defined and real: right of
    // both the branch point -c and the essential spectrum edge -1, split
    // at the -3/4 pole when that pole is inside the domain.
    std::vector<std::pair<double, double>> components;
    std::vector<double> poles;
};

RealAxis real_axis_layout(double m, double H, double guard) {
    RealAxis ax;
    double c = (H * H + 4.0) / (4.0 * m);
    double g = guard * 1.001;  // cushion against rounding at the guard edge
    double left = std::max(-1.0, -c) + g;
    double right = NlepSolver::pole_plus - g;
    ax.poles.push_back(NlepSolver::pole_plus);
    if (-c > -1.0) ax.poles.push_back(-c);
    if (NlepSolver::pole_minus > left) {
        ax.poles.push_back(NlepSolver::pole_minus);
        ax.components.emplace_back(left, NlepSolver::pole_minus - g);
        ax.components.emplace_back(NlepSolver::pole_minus + g, right);
    } else {
        ax.components.emplace_back(left, right);
    }
    std::sort(ax.poles.begin(), ax.poles.end());
    return ax;
}

double f_real(double lam, double m, double H, const NlepSolver& solver) {
    return composed_rhs(cplx(lam, 0.0), m, H, solver).real();
}

// Derivative condition for a flat point of f on the real axis:
// 2 R'(lam) (lam + c) - (R(lam) - 3) = 0.
double landing_g(double lam, double m, double H, const NlepSolver& solver) {
    double c = (H * H + 4.0) / (4.0 * m);
    double Rp = solver.R_prime(cplx(lam, 0.0)).real();
    double R = solver.eval_R(cplx(lam, 0.0)).R.real();
    return 2.0 * Rp * (lam + c) - (R - 3.0);
}

}  // namespace

SkeletonCurve trace_skeleton(double m, double H, const NlepSolver& solver) {
    if (m <= 0.0) throw ValidationError("skeleton needs m > 0");
    SkeletonCurve out;
    out.m = m;
    out.H = H;
    out.m_c = m_critical(H);
    double guard = solver.pole_guard();
    RealAxis ax = real_axis_layout(m, H, guard);
    out.poles = ax.poles;

    // Real branch: sample each component, keep f >= 0.
    for (auto [lo, hi] : ax.components) {
        int n = 400;
        for (int i = 0; i <= n; ++i) {
            double lam = lo + (hi - lo) * i / n;
            if (f_real(lam, m, H, solver) >= 0.0) out.real_branch.emplace_back(lam, 0.0);
        }
    }

    // Landing point: interior local minimum of f (derivative condition
    // crossing - to +) with f >= 0 there. Smallest f wins when several
    // exist; none found means the complex branch has degenerated onto the
    // essential spectrum edge at -1.
    auto g = [&](double lam) { return landing_g(lam, m, H, solver); };
    double best_lam = 0.0, best_f = std::numeric_limits<double>::infinity();
    bool found = false;
    for (auto [lo, hi] : ax.components) {
        // Margin keeps the derivative stencil out of the pole guards.
        double glo = lo + 1e-4, ghi = hi - 1e-4;
        int n = 200;
        double prev_lam = glo, prev_g = g(glo);
        for (int i = 1; i <= n; ++i) {
            double lam = glo + (ghi - glo) * i / n;
            double cur = g(lam);
            if (prev_g < 0.0 && cur >= 0.0) {
                double root = bisect(g, prev_lam, lam, prev_g);
                double fv = f_real(root, m, H, solver);
                if (fv >= 0.0 && fv < best_f) {
                    best_f = fv;
                    best_lam = root;
                    found = true;
                }
            }
            prev_lam = lam;
            prev_g = cur;
        }
    }
    if (found) {
        out.landing = cplx(best_lam, 0.0);
        out.f_at_landing = best_f;
    } else {
        out.landing = cplx(-1.0, 0.0);
        out.f_at_landing = 0.0;
        out.landing_degenerate = true;
    }

    // Complex branch: continuation of Im f = 0 out of the landing point;
    // the local quadratic structure makes the branch leave vertically.
    if (found) {
        auto im_f = [&](cplx z) { return composed_rhs(z, m, H, solver).imag(); };
        std::vector<cplx> branch;
        branch.push_back(out.landing);
        cplx z = out.landing + cplx(0.0, 1e-3);
        branch.push_back(z);
        cplx tangent(0.0, 1.0);
        double ds = 0.02;
        for (int step = 0; step < 4000 && ds >= 1e-5; ++step) {
            cplx pred = z + ds * tangent;
            cplx normal(-tangent.imag(), tangent.real());
            // Secant correction along the normal.
            double s0 = 0.0, s1 = 0.2 * ds;
            double f0, f1;
            bool ok = true;
            try {
                f0 = im_f(pred);
                f1 = im_f(pred + s1 * normal);
                for (int it = 0; it < 30 && f1 != f0; ++it) {
                    double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
                    s0 = s1;
                    f0 = f1;
                    s1 = s2;
                    f1 = im_f(pred + s1 * normal);
                    if (std::abs(s1 - s0) < 1e-12) break;
                    if (std::abs(s1) > 2.0 * ds) {
                        ok = false;
                        break;
                    }
                }
            } catch (const NumericalError&) {
                ok = false;
                f1 = 1.0;
            }
            if (!ok || !std::isfinite(s1) || std::abs(f1) > 1e-6) {
                ds *= 0.5;
                continue;
            }
            cplx znew = pred + s1 * normal;
            bool stop = znew.imag() < 0.0 || std::abs(znew) > 30.0;
            for (double p : ax.poles)
                if (std::abs(znew - cplx(p, 0.0)) < 2.0 * guard) stop = true;
            double fre;
            try {
                fre = composed_rhs(znew, m, H, solver).real();
            } catch (const NumericalError&) {
                break;
            }
            if (stop || fre < -0.05) break;
            tangent = (znew - z) / std::abs(znew - z);
            z = znew;
            branch.push_back(z);
            if (std::abs(s1) < 0.1 * ds) ds = std::min(ds * 1.3, 0.1);
            if (fre < 1e-4) break;  // reached the R = 3 endpoint of the branch
        }
        out.complex_branch = std::move(branch);
    }
    return out;
}

double kstar(double m, double H, const NlepSolver& solver) {
    if (m <= 0.0) throw ValidationError("kstar needs m > 0");
    double mc = m_critical(H);
    if (m <= mc) return 6.0 * std::sqrt(m / (H * H + 4.0));
    // Hopf branch: lowest crossing of the skeleton with the imaginary
    // axis. The trivial odd zero of Im f(i w) at w = 0 is divided out.
    auto gfun = [&](double w) { return composed_rhs(cplx(0.0, w), m, H, solver).imag() / w; };
    double best = std::numeric_limits<double>::infinity();
    double prev_w = 1e-3, prev_g = gfun(prev_w);
    int n = 800;
    for (int i = 1; i <= n; ++i) {
        double w = 1e-3 * std::pow(20.0 / 1e-3, static_cast<double>(i) / n);
        double cur = gfun(w);
        if ((prev_g < 0.0) != (cur < 0.0)) {
            double root = bisect(gfun, prev_w, w, prev_g);
            double re = composed_rhs(cplx(0.0, root), m, H, solver).real();
            if (re > 0.0) best = std::min(best, re);
        }
        prev_w = w;
        prev_g = cur;
    }
    if (!std::isfinite(best))
        throw NumericalError("no imaginary-axis skeleton crossing found above m_critical");
    return best;
}

namespace {

std::vector<double> resolve_amplitudes(const PulseConfig& config, const ModelParams& params,
                                       double H, const DomainSpec& domain) {
    if (!config.amplitudes.empty()) {
        if (config.amplitudes.size() != config.positions.size())
            throw ValidationError("amplitudes and positions must have equal length");
        return config.amplitudes;
    }
    return amplitudes_newton(config, params, Terrain::constant_slope(H), domain).u0;
}

std::vector<double> k_values(const std::vector<double>& u0, const ModelParams& params,
                             double t) {
    double a = params.a(t);
    std::vector<double> K(u0.size());
    for (std::size_t j = 0; j < u0.size(); ++j)
        K[j] = params.m * params.m * params.D * u0[j] * u0[j] / (a * a);
    return K;
}

// Scale to max modulus one with the largest entry rotated real positive,
// then read off the sign pattern.
void finalize_entry(SpectrumEntry& e) {
    double mx = 0.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < e.rho.size(); ++j)
        if (std::abs(e.rho[j]) > mx) {
            mx = std::abs(e.rho[j]);
            arg = j;
        }
    if (mx > 0.0) {
        cplx phase = e.rho[arg] / std::abs(e.rho[arg]);
        for (cplx& r : e.rho) r /= mx * phase;
    }
    e.sign_pattern.resize(e.rho.size());
    for (std::size_t j = 0; j < e.rho.size(); ++j) {
        double re = e.rho[j].real();
        e.sign_pattern[j] = std::abs(re) < 1e-9 ? 0 : (re > 0.0 ? 1 : -1);
    }
}

void finalize_report(SpectrumReport& rep, const std::vector<double>& u0) {
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](const SpectrumEntry& a, const SpectrumEntry& b) {
                  if (a.lambda.real() != b.lambda.real())
                      return a.lambda.real() > b.lambda.real();
                  return a.lambda.imag() > b.lambda.imag();
              });
    if (rep.eigenvalues.empty()) return;
    const SpectrumEntry& lead = rep.eigenvalues.front();
    if (lead.lambda.real() < 0.0) {
        rep.classification = SpectrumClass::Stable;
    } else {
        rep.classification = std::abs(lead.lambda.imag()) > 1e-3 ? SpectrumClass::Hopf
                                                                 : SpectrumClass::SaddleNode;
    }
    double best = -1.0;
    for (std::size_t j = 0; j < lead.rho.size(); ++j) {
        double w = std::abs(lead.rho[j]) / (u0[j] * u0[j]);
        if (w > best) {
            best = w;
            rep.critical_pulse = static_cast<int>(j);
        }
    }
}

// Width of the real-axis band where eigenvalues can sit, from the positive
// pole down to the higher of the inner (-1) and outer (-c) continuum edges.
double visible_window(double m, double H) {
    double c = (H * H + 4.0) / (4.0 * m);
    return NlepSolver::pole_plus - std::max(-1.0, -c);
}

// Roots of f(lambda) = K for one decoupled pulse: bracketed bisection over
// each visible real component plus, below the landing value, the conjugate
// pair refined along the traced complex branch.
std::vector<cplx> decoupled_roots(double K, double m, double H, const SkeletonCurve& skel,
                                  const NlepSolver& solver) {
    std::vector<cplx> roots;
    RealAxis ax = real_axis_layout(m, H, solver.pole_guard());
    auto fr = [&](double lam) { return f_real(lam, m, H, solver) - K; };
    for (auto [lo, hi] : ax.components) {
        int n = 300;
        double prev_lam = lo, prev_v = fr(lo);
        for (int i = 1; i <= n; ++i) {
            double lam = lo + (hi - lo) * i / n;
            double cur = fr(lam);
            if ((prev_v < 0.0) != (cur < 0.0))
                roots.emplace_back(bisect(fr, prev_lam, lam, prev_v), 0.0);
            prev_lam = lam;
            prev_v = cur;
        }
    }
    if (!skel.landing_degenerate && K < skel.f_at_landing && skel.complex_branch.size() > 2) {
        // f decreases from the landing value toward zero along the branch;
        // find the crossing segment, then polish with a complex secant.
        const auto& br = skel.complex_branch;
        for (std::size_t i = 1; i < br.size(); ++i) {
            double va = composed_rhs(br[i - 1], m, H, solver).real() - K;
            double vb = composed_rhs(br[i], m, H, solver).real() - K;
            if ((va < 0.0) == (vb < 0.0)) continue;
            cplx z0 = br[i - 1], z1 = br[i];
            cplx f0 = composed_rhs(z0, m, H, solver) - K;
            cplx f1 = composed_rhs(z1, m, H, solver) - K;
            for (int it = 0; it < 40 && f1 != f0; ++it) {
                cplx z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
                z0 = z1;
                f0 = f1;
                z1 = z2;
                f1 = composed_rhs(z1, m, H, solver) - K;
                if (std::abs(z1 - z0) < 1e-12) break;
            }
            if (std::abs(f1) < 1e-8) {
                if (z1.imag() < 0.0) z1 = std::conj(z1);
                roots.push_back(z1);
                roots.push_back(std::conj(z1));
            }
            break;
        }
    }
    return roots;
}

}  // namespace

double SpectrumReport::max_re() const {
    return eigenvalues.empty() ? -std::numeric_limits<double>::infinity()
                               : eigenvalues.front().lambda.real();
}

SpectrumReport dsp_spectrum(const PulseConfig& config, const ModelParams& params, double H,
                            const NlepSolver& solver) {
    if (config.amplitudes.empty())
        throw ValidationError("decoupled spectrum needs amplitudes in the configuration");
    if (config.amplitudes.size() != config.positions.size())
        throw ValidationError("amplitudes and positions must have equal length");
    SpectrumReport rep;
    rep.mode = SpectrumMode::Dsp;
    const std::vector<double>& u0 = config.amplitudes;
    rep.K = k_values(u0, params, config.t);
    rep.kstar = kstar(params.m, H, solver);
    SkeletonCurve skel = trace_skeleton(params.m, H, solver);
    int N = config.n();
    for (int n = 0; n < N; ++n) {
        for (cplx lam : decoupled_roots(rep.K[n], params.m, H, skel, solver)) {
            SpectrumEntry e;
            e.lambda = lam;
            e.rho.assign(N, cplx(0.0, 0.0));
            e.rho[n] = 1.0;
            finalize_entry(e);
            rep.eigenvalues.push_back(std::move(e));
        }
    }
    double kmax = *std::max_element(rep.K.begin(), rep.K.end());
    for (std::size_t i = 0; i < rep.K.size(); ++i)
        for (std::size_t j = i + 1; j < rep.K.size(); ++j)
            if (std::abs(rep.K[i] - rep.K[j]) < 1e-6 * std::max(1.0, kmax)) rep.degenerate = true;
    rep.lambda_window = visible_window(params.m, H);
    finalize_report(rep, u0);
    return rep;
}

namespace {

// Coupled-problem transfer. State = values at the current position of the
// decaying and growing outer exponentials, the growing factor divided out
// per interval so nothing overflows. The scaling is analytic and zero-free,
// so the boundary mismatch keeps exactly the eigenvalue roots.
struct TransferContext {
    std::vector<double> widths;  // interval widths; open ends are +inf
    std::vector<double> gfac;    // jump strength per pulse before C(lambda)
    DomainSpec::Kind kind;
    double L = 0.0;
    double m = 0.0;
    double H = 0.0;
};

TransferContext make_context(const PulseConfig& config, const ModelParams& params,
                             const std::vector<double>& u0, const DomainSpec& domain,
                             double H) {
    TransferContext ctx;
    ctx.kind = domain.kind;
    ctx.L = domain.L;
    ctx.m = params.m;
    ctx.H = H;
    int N = config.n();
    const std::vector<double>& P = config.positions;
    double a = params.a(config.t);
    double pref = a * a / (params.m * std::sqrt(params.m) * params.D);
    ctx.gfac.resize(N);
    for (int j = 0; j < N; ++j) ctx.gfac[j] = pref / (u0[j] * u0[j]);
    double inf = std::numeric_limits<double>::infinity();
    if (domain.kind == DomainSpec::Kind::Periodic) {
        // widths[j] spans P_j to P_{j+1}, the last wraps to P_0 + L.
        ctx.widths.resize(N);
        for (int j = 0; j + 1 < N; ++j) ctx.widths[j] = P[j + 1] - P[j];
        ctx.widths[N - 1] = P[0] + domain.L - P[N - 1];
    } else {
        // widths[j] is the interval left of pulse j; widths[N] is right of
        // the last pulse.
        ctx.widths.resize(N + 1);
        ctx.widths[0] = domain.kind == DomainSpec::Kind::Neumann ? P[0] : inf;
        for (int j = 0; j + 1 < N; ++j) ctx.widths[j + 1] = P[j + 1] - P[j];
        ctx.widths[N] = domain.kind == DomainSpec::Kind::Neumann ? domain.L - P[N - 1] : inf;
    }
    return ctx;
}

struct TransferRun {
    cplx mismatch;                // boundary functional (kind-specific)
    cplx wrap_gamma;              // periodic only: growing component after the wrap
    std::vector<cplx> rho;        // scaled pulse values
    std::vector<double> log_mag;  // accumulated log of the divided-out growth
};

// One sweep at fixed lambda from a given start state. For periodic domains
// the sweep starts just before the first pulse's jump and ends after the
// wrap interval, one full loop of the normalized monodromy.
TransferRun transfer_sweep(cplx lambda, const TransferContext& ctx, const NlepSolver& solver,
                           cplx start_alpha, cplx start_gamma, bool record) {
    cplx beta = std::sqrt(cplx(ctx.H * ctx.H + 4.0, 0.0) + 4.0 * ctx.m * lambda);
    if (std::abs(beta) < 1e-6) beta = cplx(1e-6, 0.0);
    cplx mu_minus = 0.5 * (-ctx.H - beta), mu_plus = 0.5 * (-ctx.H + beta);
    cplx Cval = solver.eval_R(lambda).C;
    std::size_t N = ctx.gfac.size();
    bool periodic = ctx.kind == DomainSpec::Kind::Periodic;
    TransferRun run;
    cplx alpha = start_alpha, gamma = start_gamma;
    double logmag = 0.0;
    auto propagate = [&](double w) {
        if (std::isinf(w)) {
            alpha = 0.0;
            return;
        }
        alpha *= std::exp(-beta * w);
        logmag += mu_plus.real() * w;
    };
    for (std::size_t j = 0; j < N; ++j) {
        if (periodic) {
            if (j > 0) propagate(ctx.widths[j - 1]);
        } else {
            propagate(ctx.widths[j]);
        }
        cplx rho = alpha + gamma;
        if (record) {
            run.rho.push_back(rho);
            run.log_mag.push_back(logmag);
        }
        cplx kick = ctx.gfac[j] * Cval / beta * rho;
        alpha -= kick;
        gamma += kick;
    }
    if (ctx.kind == DomainSpec::Kind::Neumann) {
        propagate(ctx.widths[N]);
        run.mismatch = mu_minus * alpha + mu_plus * gamma;
    } else if (ctx.kind == DomainSpec::Kind::Unbounded) {
        run.mismatch = gamma;
    } else {
        propagate(ctx.widths[N - 1]);
        run.mismatch = alpha;
        run.wrap_gamma = gamma;
    }
    return run;
}

cplx csp_mismatch(cplx lambda, const TransferContext& ctx, const NlepSolver& solver) {
    cplx beta = std::sqrt(cplx(ctx.H * ctx.H + 4.0, 0.0) + 4.0 * ctx.m * lambda);
    if (std::abs(beta) < 1e-6) beta = cplx(1e-6, 0.0);
    cplx mu_minus = 0.5 * (-ctx.H - beta), mu_plus = 0.5 * (-ctx.H + beta);
    switch (ctx.kind) {
        case DomainSpec::Kind::Unbounded:
            return transfer_sweep(lambda, ctx, solver, 0.0, 1.0, false).mismatch;
        case DomainSpec::Kind::Neumann:
            return transfer_sweep(lambda, ctx, solver, mu_plus, -mu_minus, false).mismatch;
        case DomainSpec::Kind::Periodic:
        default: {
            // The true monodromy is unimodular up to det = e^{-H L}; with
            // the growth e^{mu_plus L} divided out, requiring eigenvalue
            // one becomes: trace = e^{-mu_plus L} + e^{mu_minus L}.
            TransferRun c0 = transfer_sweep(lambda, ctx, solver, 1.0, 0.0, false);
            TransferRun c1 = transfer_sweep(lambda, ctx, solver, 0.0, 1.0, false);
            cplx tr = c0.mismatch + c1.wrap_gamma;
            return tr - std::exp(-mu_plus * ctx.L) - std::exp(mu_minus * ctx.L);
        }
    }
}

// Secant iteration in the complex plane with reflection off the pole
// guards. Returns true on a verified root.
bool secant_root(const std::function<cplx(cplx)>& F, cplx seed, double fscale,
                 const std::vector<double>& poles, double guard, cplx& root) {
    auto reflect = [&](cplx z) {
        for (double p : poles) {
            cplx d = z - cplx(p, 0.0);
            if (std::abs(d) < guard) {
                cplx dir = std::abs(d) > 0.0 ? d / std::abs(d) : cplx(0.0, 1.0);
                z = cplx(p, 0.0) + guard * 1.5 * dir;
            }
        }
        if (std::abs(z.imag()) < 1e-12 && z.real() < -1.0 + guard)
            z = cplx(-1.0 + guard, z.imag());
        return z;
    };
    cplx z0 = reflect(seed), z1 = reflect(seed + cplx(1e-4, 1e-5));
    cplx f0, f1;
    try {
        f0 = F(z0);
        f1 = F(z1);
    } catch (const NumericalError&) {
        return false;
    }
    for (int it = 0; it < 80; ++it) {
        if (f1 == f0) break;
        cplx z2 = reflect(z1 - f1 * (z1 - z0) / (f1 - f0));
        if (!finite(z2) || std::abs(z2) > 100.0) return false;
        z0 = z1;
        f0 = f1;
        z1 = z2;
        try {
            f1 = F(z1);
        } catch (const NumericalError&) {
            return false;
        }
        if (std::abs(z1 - z0) < 1e-12 * std::max(1.0, std::abs(z1))) break;
    }
    if (std::abs(f1) < 1e-8 * fscale) {
        // The point spectrum sits right of lambda = -1 inside an O(1)
        // window; the mismatch also decays along the oscillatory rays, so
        // converged iterates out there are not eigenvalues.
        if (std::abs(z1) > 20.0) return false;
        if (std::abs(z1.imag()) < 1e-9 && z1.real() < -1.0 + guard) return false;
        root = z1;
        return true;
    }
    return false;
}

}  // namespace

SpectrumReport csp_spectrum(const PulseConfig& config, const ModelParams& params, double H,
                            const DomainSpec& domain, const NlepSolver& solver) {
    config.validate(domain);
    std::vector<double> u0 = resolve_amplitudes(config, params, H, domain);
    SpectrumReport rep;
    rep.mode = SpectrumMode::Csp;
    rep.K = k_values(u0, params, config.t);
    rep.kstar = kstar(params.m, H, solver);
    TransferContext ctx = make_context(config, params, u0, domain, H);
    auto F = [&](cplx lam) { return csp_mismatch(lam, ctx, solver); };

    // Seeds: decoupled roots per pulse, asymptotic small-m roots, a spread
    // along the complex skeleton branch, and a coarse real sweep.
    std::vector<cplx> seeds;
    PulseConfig with_u0 = config;
    with_u0.amplitudes = u0;
    SpectrumReport dsp = dsp_spectrum(with_u0, params, H, solver);
    for (const auto& e : dsp.eigenvalues) seeds.push_back(e.lambda);
    try {
        SpectrumReport sm = small_m_spectrum(with_u0, params, H, domain, solver);
        for (const auto& e : sm.eigenvalues) seeds.push_back(e.lambda);
    } catch (const NumericalError&) {
        // Asymptotic seeding is best-effort; the other seed families cover.
    }
    SkeletonCurve skel = trace_skeleton(params.m, H, solver);
    if (!skel.complex_branch.empty()) {
        std::size_t stride = std::max<std::size_t>(1, skel.complex_branch.size() / 8);
        for (std::size_t i = 0; i < skel.complex_branch.size(); i += stride)
            seeds.push_back(skel.complex_branch[i]);
    }
    for (double lam = -0.9; lam < 1.0; lam += 0.25) seeds.emplace_back(lam, 0.0);

    double c = (H * H + 4.0) / (4.0 * params.m);
    std::vector<double> poles = {NlepSolver::pole_plus, NlepSolver::pole_minus};
    if (c <= 1.0) poles.push_back(-c);
    double fscale = 0.0;
    int counted = 0;
    for (const cplx& s : seeds) {
        try {
            fscale += std::abs(F(s));
            ++counted;
        } catch (const NumericalError&) {
        }
    }
    fscale = counted ? fscale / counted : 1.0;
    if (fscale == 0.0) fscale = 1.0;

    std::vector<cplx> roots;
    auto push_root = [&](cplx z) {
        if (z.imag() < 0.0) z = std::conj(z);
        if (std::abs(z.imag()) < 1e-9) z = cplx(z.real(), 0.0);
        for (const cplx& r : roots)
            if (std::abs(r - z) < 1e-4) return;
        roots.push_back(z);
    };
    for (const cplx& s : seeds) {
        cplx root;
        if (secant_root(F, s, fscale, poles, solver.pole_guard(), root)) push_root(root);
    }

    std::size_t N = static_cast<std::size_t>(config.n());
    for (const cplx& lam : roots) {
        bool real_root = std::abs(lam.imag()) < 1e-9;
        for (cplx lam_signed : {lam, std::conj(lam)}) {
            SpectrumEntry e;
            e.lambda = lam_signed;
            TransferRun run;
            cplx beta = std::sqrt(cplx(H * H + 4.0, 0.0) + 4.0 * params.m * lam_signed);
            if (std::abs(beta) < 1e-6) beta = cplx(1e-6, 0.0);
            cplx mu_minus = 0.5 * (-H - beta), mu_plus = 0.5 * (-H + beta);
            try {
                if (domain.kind == DomainSpec::Kind::Unbounded) {
                    run = transfer_sweep(lam_signed, ctx, solver, 0.0, 1.0, true);
                } else if (domain.kind == DomainSpec::Kind::Neumann) {
                    run = transfer_sweep(lam_signed, ctx, solver, mu_plus, -mu_minus, true);
                } else {
                    // Null vector of (normalized monodromy - q I), q the
                    // normalized unit eigenvalue.
                    TransferRun c0 = transfer_sweep(lam_signed, ctx, solver, 1.0, 0.0, false);
                    TransferRun c1 = transfer_sweep(lam_signed, ctx, solver, 0.0, 1.0, false);
                    cplx m11 = c0.mismatch, m21 = c0.wrap_gamma;
                    cplx m12 = c1.mismatch, m22 = c1.wrap_gamma;
                    cplx q = std::exp(-mu_plus * ctx.L);
                    cplx v1 = m12, v2 = q - m11;
                    if (std::abs(q - m22) + std::abs(m21) > std::abs(v1) + std::abs(v2)) {
                        v1 = q - m22;
                        v2 = m21;
                    }
                    run = transfer_sweep(lam_signed, ctx, solver, v1, v2, true);
                }
            } catch (const NumericalError&) {
                continue;
            }
            // Undo the per-interval normalization relative to the largest
            // pulse so reported rho ratios are true.
            double ref = -std::numeric_limits<double>::infinity();
            std::vector<double> mag(N);
            for (std::size_t j = 0; j < N; ++j) {
                mag[j] = std::log(std::max(std::abs(run.rho[j]), 1e-300)) + run.log_mag[j];
                ref = std::max(ref, mag[j]);
            }
            e.rho.resize(N);
            double min_mag = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < N; ++j) {
                min_mag = std::min(min_mag, mag[j]);
                cplx unit = std::abs(run.rho[j]) > 0.0 ? run.rho[j] / std::abs(run.rho[j])
                                                       : cplx(0.0, 0.0);
                e.rho[j] = unit * std::exp(mag[j] - ref);
            }
            e.ill_conditioned = ref - min_mag > std::log(1e8);
            finalize_entry(e);
            rep.eigenvalues.push_back(std::move(e));
            if (real_root) break;
        }
    }
    rep.lambda_window = visible_window(params.m, H);
    finalize_report(rep, u0);
    return rep;
}

SpectrumReport small_m_spectrum(const PulseConfig& config, const ModelParams& params, double H,
                                const DomainSpec& domain, const NlepSolver& solver) {
    config.validate(domain);
    std::vector<double> u0 = resolve_amplitudes(config, params, H, domain);
    int N = config.n();
    const std::vector<double>& P = config.positions;
    double s = slope_param(H);
    double mu_m = 0.5 * (-H - s), mu_p = 0.5 * (-H + s);

    // Outer derivative jump as a linear map of the pulse values. With the
    // lambda dependence dropped from the exponents, the interval with end
    // values (rho_l, rho_r) and decay factors p = e^{mu_m w}, q = e^{-mu_p w}
    // contributes
    //   at its left pulse:  mu_m rho_l + s q (rho_r - p rho_l) / (1 - p q)
    //   at its right pulse: mu_p rho_r - s p (rho_l - q rho_r) / (1 - p q).
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    auto pq = [&](double w) {
        if (std::isinf(w)) return std::pair<double, double>(0.0, 0.0);
        return std::pair<double, double>(std::exp(mu_m * w), std::exp(-mu_p * w));
    };
    bool periodic = domain.kind == DomainSpec::Kind::Periodic;
    bool neumann = domain.kind == DomainSpec::Kind::Neumann;
    std::vector<double> widths;
    if (periodic) {
        widths.resize(N);
        for (int j = 0; j + 1 < N; ++j) widths[j] = P[j + 1] - P[j];
        widths[N - 1] = P[0] + domain.L - P[N - 1];
    } else {
        double inf = std::numeric_limits<double>::infinity();
        widths.resize(N + 1);
        widths[0] = neumann ? P[0] : inf;
        for (int j = 0; j + 1 < N; ++j) widths[j + 1] = P[j + 1] - P[j];
        widths[N] = neumann ? domain.L - P[N - 1] : inf;
    }
    // Interior interval couplings.
    auto add_plus_side = [&](int row, int right, double w) {
        auto [p, q] = pq(w);
        double den = 1.0 - p * q;
        A(row, row) += mu_m - s * q * p / den;
        A(row, right) += s * q / den;
    };
    auto add_minus_side = [&](int row, int left, double w) {
        auto [p, q] = pq(w);
        double den = 1.0 - p * q;
        A(row, row) += -mu_p - s * p * q / den;
        A(row, left) += s * p / den;
    };
    for (int j = 0; j < N; ++j) {
        if (periodic) {
            add_plus_side(j, (j + 1) % N, widths[j]);
            add_minus_side(j, (j - 1 + N) % N, widths[(j - 1 + N) % N]);
            continue;
        }
        // right side of pulse j
        if (j + 1 < N) {
            add_plus_side(j, j + 1, widths[j + 1]);
        } else if (neumann) {
            auto [p, q] = pq(widths[N]);
            double den = 1.0 - (mu_m / mu_p) * p * q;
            A(j, j) += mu_m * (1.0 - p * q) / den;
        } else {
            A(j, j) += mu_m;
        }
        // left side of pulse j
        if (j > 0) {
            add_minus_side(j, j - 1, widths[j]);
        } else if (neumann) {
            auto [p, q] = pq(widths[0]);
            double den = 1.0 - (mu_p / mu_m) * p * q;
            A(j, j) -= mu_p * (1.0 - p * q) / den;
        } else {
            A(j, j) -= mu_p;
        }
    }

    SpectrumReport rep;
    rep.mode = SpectrumMode::SmallM;
    rep.K = k_values(u0, params, config.t);
    rep.kstar = kstar(params.m, H, solver);

    // C* per mode shape: A rho = C* diag(1/u0_j^2) rho.
    Eigen::MatrixXd B(N, N);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) B(j, k) = u0[j] * u0[j] * A(j, k);
    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success)
        throw NumericalError("asymptotic jump eigenproblem failed to converge");

    double a = params.a(config.t);
    double delta = params.m * std::sqrt(params.m) * params.D / (a * a);
    double guard = solver.pole_guard();
    // Dip of the moment on the main real component: real targets below it
    // have no real root there and the pair sits off the axis.
    double g = guard * 1.001;
    double dip_lam = 0.0, dip_val = std::numeric_limits<double>::infinity();
    {
        double lo = NlepSolver::pole_minus + g, hi = NlepSolver::pole_plus - g;
        int n = 200;
        for (int i = 0; i <= n; ++i) {
            double lam = lo + (hi - lo) * i / n;
            double v = solver.eval_R(cplx(lam, 0.0)).R.real();
            if (v < dip_val) {
                dip_val = v;
                dip_lam = lam;
            }
        }
    }
    for (int k = 0; k < N; ++k) {
        cplx cstar = es.eigenvalues()(k);
        cplx target = 3.0 - 0.5 * delta * cstar;
        std::vector<cplx> lams;
        if (std::abs(cstar.imag()) < 1e-9 * std::max(1.0, std::abs(cstar))) {
            // Real target: bracketed roots of R(lam) = target on the two
            // real components flanking the -3/4 pole.
            auto rr = [&](double lam) {
                return solver.eval_R(cplx(lam, 0.0)).R.real() - target.real();
            };
            for (auto [lo, hi] :
                 {std::pair<double, double>{-1.0 + g, NlepSolver::pole_minus - g},
                  std::pair<double, double>{NlepSolver::pole_minus + g,
                                            NlepSolver::pole_plus - g}}) {
                int n = 250;
                double prev_lam = lo, prev_v = rr(lo);
                for (int i = 1; i <= n; ++i) {
                    double lam = lo + (hi - lo) * i / n;
                    double cur = rr(lam);
                    if ((prev_v < 0.0) != (cur < 0.0))
                        lams.emplace_back(bisect(rr, prev_lam, lam, prev_v), 0.0);
                    prev_lam = lam;
                    prev_v = cur;
                }
            }
            if (target.real() < dip_val) {
                // The main-component pair detached from the axis at the dip.
                auto rc = [&](cplx lam) { return solver.eval_R(lam).R - target; };
                for (double im : {0.15, 0.4, 0.9}) {
                    cplx root;
                    if (secant_root(rc, cplx(dip_lam, im), 1.0,
                                    {NlepSolver::pole_plus, NlepSolver::pole_minus}, guard,
                                    root) &&
                        std::abs(root.imag()) > 1e-9) {
                        lams.push_back(root);
                        lams.push_back(std::conj(root));
                        break;
                    }
                }
            }
        } else {
            auto rc = [&](cplx lam) { return solver.eval_R(lam).R - target; };
            cplx root;
            if (secant_root(rc, cplx(-0.1, 0.1), 1.0,
                            {NlepSolver::pole_plus, NlepSolver::pole_minus}, guard, root)) {
                lams.push_back(root);
                lams.push_back(std::conj(root));
            }
        }
        for (cplx lam : lams) {
            SpectrumEntry e;
            e.lambda = lam;
            e.rho.resize(N);
            for (int j = 0; j < N; ++j) e.rho[j] = es.eigenvectors()(j, k);
            finalize_entry(e);
            rep.eigenvalues.push_back(std::move(e));
        }
    }
    rep.lambda_window = visible_window(params.m, H);
    finalize_report(rep, u0);
    return rep;
}

SpectrumReport compute_spectrum(SpectrumMode mode, const PulseConfig& config,
                                const ModelParams& params, double H, const DomainSpec& domain,
                                const NlepSolver& solver) {
    PulseConfig cfg = config;
    if (cfg.amplitudes.empty()) cfg.amplitudes = resolve_amplitudes(cfg, params, H, domain);
    switch (mode) {
        case SpectrumMode::Dsp:
            return dsp_spectrum(cfg, params, H, solver);
        case SpectrumMode::SmallM:
            return small_m_spectrum(cfg, params, H, domain, solver);
        case SpectrumMode::Csp:
        default:
            return csp_spectrum(cfg, params, H, domain, solver);
    }
}

EigenfunctionProfile eigenfunction_profile(const SpectrumReport& report, std::size_t index,
                                           const PulseConfig& config, const ModelParams& params,
                                           double H, const DomainSpec& domain,
                                           std::size_t n_samples, const NlepSolver& solver) {
    if (index >= report.eigenvalues.size())
        throw ValidationError("eigenfunction index out of range");
    if (n_samples < 2) throw ValidationError("eigenfunction sampling needs at least 2 points");
    const SpectrumEntry& entry = report.eigenvalues[index];
    std::vector<double> u0 = resolve_amplitudes(config, params, H, domain);
    int N = config.n();
    const std::vector<double>& P = config.positions;
    cplx lambda = entry.lambda;
    // The asymptotic mode built its outer fields with the lambda-free
    // exponents; reconstruct with the same ones for consistency.
    cplx beta = report.mode == SpectrumMode::SmallM
                    ? cplx(slope_param(H), 0.0)
                    : std::sqrt(cplx(H * H + 4.0, 0.0) + 4.0 * params.m * lambda);
    if (std::abs(beta) < 1e-6) beta = cplx(1e-6, 0.0);
    cplx mu_m = 0.5 * (-H - beta), mu_p = 0.5 * (-H + beta);

    double x_lo, x_hi;
    if (domain.bounded()) {
        x_lo = 0.0;
        x_hi = domain.L;
    } else {
        x_lo = P.front() - 5.0;
        x_hi = P.back() + 5.0;
    }

    VinProfile vin = solver.solve_vin(lambda);
    auto vin_at = [&](double xi) -> cplx {
        // Linear interpolation; the profile has decayed to nothing at the
        // window edges.
        if (xi <= vin.xi.front() || xi >= vin.xi.back()) return cplx(0.0, 0.0);
        double t = (xi - vin.xi.front()) / (vin.xi[1] - vin.xi[0]);
        std::size_t i = std::min(static_cast<std::size_t>(t), vin.xi.size() - 2);
        double frac = t - static_cast<double>(i);
        return vin.v[i] * (1.0 - frac) + vin.v[i + 1] * frac;
    };

    // Outer water component per interval from its end values.
    auto interval_eval = [&](cplx rho_l, cplx rho_r, double xl, double w, double x) -> cplx {
        cplx p = std::exp(mu_m * w), q = std::exp(-mu_p * w);
        cplx den = 1.0 - p * q;
        cplx gam = (rho_r - rho_l * p) / den;  // anchored at the right end
        cplx alp = rho_l - q * gam;            // anchored at the left end
        double dx = x - xl;
        return alp * std::exp(mu_m * dx) + gam * std::exp(mu_p * (dx - w));
    };
    auto eval_U = [&](double x) -> cplx {
        int j = static_cast<int>(std::upper_bound(P.begin(), P.end(), x) - P.begin());
        if (domain.kind == DomainSpec::Kind::Periodic) {
            if (j == 0)
                return interval_eval(entry.rho[N - 1], entry.rho[0], P[N - 1] - domain.L,
                                     P[0] + domain.L - P[N - 1], x);
            if (j == N)
                return interval_eval(entry.rho[N - 1], entry.rho[0], P[N - 1],
                                     P[0] + domain.L - P[N - 1], x);
            return interval_eval(entry.rho[j - 1], entry.rho[j], P[j - 1], P[j] - P[j - 1], x);
        }
        if (j == 0) {
            if (domain.kind == DomainSpec::Kind::Unbounded)
                return entry.rho[0] * std::exp(mu_p * (x - P[0]));
            // No-flux wall at 0 and value rho_0 at the first pulse.
            double w = P[0];
            cplx p = std::exp(mu_m * w), q = std::exp(-mu_p * w);
            cplx gam = entry.rho[0] / (1.0 - (mu_p / mu_m) * p * q);
            cplx alp = -(mu_p / mu_m) * q * gam;
            return alp * std::exp(mu_m * x) + gam * std::exp(mu_p * (x - w));
        }
        if (j == N) {
            if (domain.kind == DomainSpec::Kind::Unbounded)
                return entry.rho[N - 1] * std::exp(mu_m * (x - P[N - 1]));
            double w = domain.L - P[N - 1];
            cplx p = std::exp(mu_m * w), q = std::exp(-mu_p * w);
            cplx alp = entry.rho[N - 1] / (1.0 - (mu_m / mu_p) * p * q);
            cplx gam = -(mu_m / mu_p) * p * alp;
            double dx = x - P[N - 1];
            return alp * std::exp(mu_m * dx) + gam * std::exp(mu_p * (dx - w));
        }
        return interval_eval(entry.rho[j - 1], entry.rho[j], P[j - 1], P[j] - P[j - 1], x);
    };

    EigenfunctionProfile prof;
    prof.x.resize(n_samples);
    prof.U.resize(n_samples);
    prof.V.resize(n_samples);
    double scale_x = std::sqrt(params.m) / params.D;
    double vmax = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / (n_samples - 1);
        prof.x[i] = x;
        prof.U[i] = eval_U(x);
        cplx v(0.0, 0.0);
        for (int jp = 0; jp < N; ++jp) {
            double base = x - P[jp];
            v -= entry.rho[jp] / (u0[jp] * u0[jp]) * vin_at(scale_x * base);
            if (domain.kind == DomainSpec::Kind::Periodic) {
                double shifted = base - (base > 0.0 ? domain.L : -domain.L);
                v -= entry.rho[jp] / (u0[jp] * u0[jp]) * vin_at(scale_x * shifted);
            }
        }
        prof.V[i] = v;
        vmax = std::max(vmax, std::abs(v));
    }
    if (vmax > 0.0) {
        for (std::size_t i = 0; i < n_samples; ++i) {
            prof.U[i] /= vmax;
            prof.V[i] /= vmax;
        }
    }
    return prof;
}

}  // namespace kgs
