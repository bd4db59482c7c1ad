#include <cmath>
#include <cstddef>

#include "kgs/kernels.hpp"

namespace kgs::kernels {

namespace {

void reaction_scalar(std::size_t n, const double* u, const double* v, double a, double* fu,
                     double* fv) {
    for (std::size_t i = 0; i < n; ++i) {
        const double uvv = u[i] * v[i] * v[i];
        fu[i] = a - uvv;
        fv[i] = uvv;
    }
}

void advect_add_scalar(std::size_t n, const double* p, const double* c1, const double* c2,
                       double* out) {
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] += c1[i] * (p[i + 1] - p[i - 1]) + c2[i] * p[i];
}

void combine_scalar(std::size_t n, double c0, const double* x0, double c1, const double* x1,
                    double c2, const double* x2, double c3, const double* x3, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = c0 * x0[i] + c1 * x1[i] + c2 * x2[i] + c3 * x3[i];
}

double max_abs_diff_scalar(std::size_t n, const double* x, const double* y) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::abs(x[i] - y[i]));
    return best;
}

double max_abs_scalar(std::size_t n, const double* x) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::abs(x[i]));
    return best;
}

}  // namespace

const KernelSet& scalar_kernels() {
    static const KernelSet set = {reaction_scalar, advect_add_scalar, combine_scalar,
                                  max_abs_diff_scalar, max_abs_scalar, "scalar"};
    return set;
}

}  // namespace kgs::kernels
