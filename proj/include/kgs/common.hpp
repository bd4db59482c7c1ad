#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgs {

// Input rejected before any numerics ran (bad config, contradictory keys,
// malformed schedule). CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A solver failed to converge or produced non-finite values. CLI maps this
// to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

using cplx = std::complex<double>;

// Round-trippable decimal form; every double written to CSV/JSON goes
// through this so reruns are byte-identical.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

template <typename T>
int sgn(T x) { return (x > T(0)) - (x < T(0)); }

}  // namespace kgs
