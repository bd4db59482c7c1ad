#include <cmath>
#include <cstddef>

#include <immintrin.h>

#include "kgs/kernels.hpp"

namespace kgs::kernels {

namespace {

void reaction_avx2(std::size_t n, const double* u, const double* v, double a, double* fu,
                   double* fv) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d uu = _mm256_loadu_pd(u + i);
        const __m256d vv = _mm256_loadu_pd(v + i);
        const __m256d uvv = _mm256_mul_pd(_mm256_mul_pd(uu, vv), vv);
        _mm256_storeu_pd(fu + i, _mm256_sub_pd(va, uvv));
        _mm256_storeu_pd(fv + i, uvv);
    }
    for (; i < n; ++i) {
        const double uvv = u[i] * v[i] * v[i];
        fu[i] = a - uvv;
        fv[i] = uvv;
    }
}

void advect_add_avx2(std::size_t n, const double* p, const double* c1, const double* c2,
                     double* out) {
    std::size_t i = 1;
    if (n >= 2) {
        for (; i + 4 <= n - 1; i += 4) {
            const __m256d diff =
                _mm256_sub_pd(_mm256_loadu_pd(p + i + 1), _mm256_loadu_pd(p + i - 1));
            __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(c1 + i), diff);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), _mm256_loadu_pd(p + i), acc);
            _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), acc));
        }
        for (; i + 1 < n; ++i)
            out[i] += c1[i] * (p[i + 1] - p[i - 1]) + c2[i] * p[i];
    }
}

void combine_avx2(std::size_t n, double c0, const double* x0, double c1, const double* x1,
                  double c2, const double* x2, double c3, const double* x3, double* out) {
    const __m256d v0 = _mm256_set1_pd(c0);
    const __m256d v1 = _mm256_set1_pd(c1);
    const __m256d v2 = _mm256_set1_pd(c2);
    const __m256d v3 = _mm256_set1_pd(c3);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_mul_pd(v0, _mm256_loadu_pd(x0 + i));
        acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(x1 + i), acc);
        acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(x2 + i), acc);
        acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(x3 + i), acc);
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i < n; ++i) {
        double acc = c0 * x0[i];
        acc = std::fma(c1, x1[i], acc);
        acc = std::fma(c2, x2[i], acc);
        acc = std::fma(c3, x3[i], acc);
        out[i] = acc;
    }
}

double horizontal_max(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m2 = _mm_max_pd(lo, hi);
    const __m128d m1 = _mm_max_sd(m2, _mm_unpackhi_pd(m2, m2));
    return _mm_cvtsd_f64(m1);
}

double max_abs_diff_avx2(std::size_t n, const double* x, const double* y) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double best = horizontal_max(acc);
    for (; i < n; ++i) best = std::max(best, std::abs(x[i] - y[i]));
    return best;
}

double max_abs_avx2(std::size_t n, const double* x) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i)));
    double best = horizontal_max(acc);
    for (; i < n; ++i) best = std::max(best, std::abs(x[i]));
    return best;
}

}  // namespace

// Looked up by the dispatcher; not part of the public header.
const KernelSet& avx2_kernel_set() {
    static const KernelSet set = {reaction_avx2, advect_add_avx2, combine_avx2,
                                  max_abs_diff_avx2, max_abs_avx2, "avx2"};
    return set;
}

}  // namespace kgs::kernels
