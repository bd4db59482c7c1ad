#pragma once

#include <cstddef>

namespace kgs::kernels {

// Explicitly stepped reaction terms of the two-field model, the linear
// decay of both fields living in the implicit operators:
//   fu_i = a - u_i v_i^2,  fv_i = u_i v_i^2.
using ReactionFn = void (*)(std::size_t n, const double* u, const double* v, double a,
                            double* fu, double* fv);

// Accumulates the advection stencil on the interior nodes 1..n-2:
//   out_i += c1_i (p_{i+1} - p_{i-1}) + c2_i p_i.
// Boundary rows stay with the caller, which knows the domain closure.
using AdvectAddFn = void (*)(std::size_t n, const double* p, const double* c1,
                             const double* c2, double* out);

// out_i = c0 x0_i + c1 x1_i + c2 x2_i + c3 x3_i, the shape of every
// implicit-explicit right-hand side assembly.
using CombineFn = void (*)(std::size_t n, double c0, const double* x0, double c1,
                           const double* x1, double c2, const double* x2, double c3,
                           const double* x3, double* out);

using MaxAbsDiffFn = double (*)(std::size_t n, const double* x, const double* y);
using MaxAbsFn = double (*)(std::size_t n, const double* x);

struct KernelSet {
    ReactionFn reaction;
    AdvectAddFn advect_add;
    CombineFn combine;
    MaxAbsDiffFn max_abs_diff;
    MaxAbsFn max_abs;
    const char* name;
};

// Reference implementation, always available.
const KernelSet& scalar_kernels();

// Vector implementation, or nullptr when the build or the CPU lacks AVX2.
const KernelSet* avx2_kernels();

// scalar_kernels() unless allow_vector and a vector set is available.
const KernelSet& select_kernels(bool allow_vector);

// Set picked once per process; KGS_FORCE_SCALAR=1 in the environment pins
// the reference implementation.
const KernelSet& active_kernels();

}  // namespace kgs::kernels
