#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kgs/kernels.hpp"

using namespace kgs::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (double& x : out) x = dist(rng);
    return out;
}

// FMA contraction changes the rounding of individual terms, nothing more.
bool close(double x, double y, double scale) {
    return std::abs(x - y) <= 1e-13 * std::max(1.0, scale);
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reaction terms match a direct evaluation") {
    const KernelSet& k = scalar_kernels();
    std::mt19937_64 rng(91);
    const std::size_t n = 37;
    const auto u = random_vector(rng, n, 0.0, 8.0);
    const auto v = random_vector(rng, n, 0.0, 3.0);
    const double a = 1.7;
    std::vector<double> fu(n), fv(n);
    k.reaction(n, u.data(), v.data(), a, fu.data(), fv.data());
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(fu[i] == a - u[i] * v[i] * v[i]);
        CHECK(fv[i] == u[i] * v[i] * v[i]);
    }
}

TEST_CASE("scalar advection accumulates the interior stencil only") {
    const KernelSet& k = scalar_kernels();
    std::mt19937_64 rng(94);
    const std::size_t n = 19;
    const auto p = random_vector(rng, n, -1.0, 1.0);
    const auto c1 = random_vector(rng, n, -2.0, 2.0);
    const auto c2 = random_vector(rng, n, -2.0, 2.0);
    std::vector<double> out(n, 0.5);
    k.advect_add(n, p.data(), c1.data(), c2.data(), out.data());
    CHECK(out[0] == 0.5);
    CHECK(out[n - 1] == 0.5);
    for (std::size_t i = 1; i + 1 < n; ++i)
        CHECK(out[i] == 0.5 + (c1[i] * (p[i + 1] - p[i - 1]) + c2[i] * p[i]));
}

TEST_CASE("scalar combine and reductions match direct evaluations") {
    const KernelSet& k = scalar_kernels();
    std::mt19937_64 rng(92);
    const std::size_t n = 23;
    const auto x0 = random_vector(rng, n, -2.0, 2.0);
    const auto x1 = random_vector(rng, n, -2.0, 2.0);
    const auto x2 = random_vector(rng, n, -2.0, 2.0);
    const auto x3 = random_vector(rng, n, -2.0, 2.0);
    std::vector<double> out(n);
    k.combine(n, 1.5, x0.data(), -0.25, x1.data(), 2.0, x2.data(), -1.0, x3.data(), out.data());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(out[i] == 1.5 * x0[i] - 0.25 * x1[i] + 2.0 * x2[i] - x3[i]);
        worst = std::max(worst, std::abs(x0[i] - x1[i]));
    }
    CHECK(k.max_abs_diff(n, x0.data(), x1.data()) == worst);
    CHECK(k.max_abs(n, x2.data()) > 0.0);
    CHECK(k.max_abs(0, x2.data()) == 0.0);
    CHECK(k.max_abs_diff(0, x0.data(), x1.data()) == 0.0);
}

TEST_CASE("vector backend agrees with the scalar reference on every op") {
    const KernelSet* vec = avx2_kernels();
    if (vec == nullptr) {
        MESSAGE("no vector backend on this machine, nothing to compare");
        return;
    }
    const KernelSet& ref = scalar_kernels();
    std::mt19937_64 rng(93);
    // Sizes cover empty, sub-width, exact multiples, and ragged tails.
    for (std::size_t n : {0, 1, 3, 4, 5, 8, 31, 32, 64, 67, 257}) {
        const auto u = random_vector(rng, n, 0.0, 10.0);
        const auto v = random_vector(rng, n, 0.0, 4.0);
        std::vector<double> fu_r(n), fv_r(n), fu_v(n), fv_v(n);
        ref.reaction(n, u.data(), v.data(), 2.3, fu_r.data(), fv_r.data());
        vec->reaction(n, u.data(), v.data(), 2.3, fu_v.data(), fv_v.data());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(close(fu_v[i], fu_r[i], std::abs(fu_r[i])));
            CHECK(close(fv_v[i], fv_r[i], std::abs(fv_r[i])));
        }

        const auto x2 = random_vector(rng, n, -5.0, 5.0);
        const auto x3 = random_vector(rng, n, -5.0, 5.0);
        std::vector<double> adv_r(n, 1.0), adv_v(n, 1.0);
        ref.advect_add(n, u.data(), x2.data(), x3.data(), adv_r.data());
        vec->advect_add(n, u.data(), x2.data(), x3.data(), adv_v.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(close(adv_v[i], adv_r[i], std::abs(adv_r[i])));

        std::vector<double> out_r(n), out_v(n);
        ref.combine(n, 1.5, u.data(), -2.0, v.data(), 0.125, x2.data(), -0.75, x3.data(),
                    out_r.data());
        vec->combine(n, 1.5, u.data(), -2.0, v.data(), 0.125, x2.data(), -0.75, x3.data(),
                     out_v.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(close(out_v[i], out_r[i], std::abs(out_r[i])));

        // max of |x| commutes with any evaluation order, so these are exact.
        CHECK(vec->max_abs(n, x2.data()) == ref.max_abs(n, x2.data()));
        CHECK(vec->max_abs_diff(n, x2.data(), x3.data()) ==
              ref.max_abs_diff(n, x2.data(), x3.data()));
    }
}

TEST_CASE("kernel selection honors availability and the override") {
    CHECK(std::string(select_kernels(false).name) == "scalar");
    const KernelSet* vec = avx2_kernels();
    if (vec != nullptr)
        CHECK(std::string(select_kernels(true).name) == "avx2");
    else
        CHECK(std::string(select_kernels(true).name) == "scalar");
    const KernelSet& active = active_kernels();
    CHECK(active.reaction != nullptr);
    CHECK(active.advect_add != nullptr);
    CHECK(active.combine != nullptr);
    CHECK(active.max_abs_diff != nullptr);
    CHECK(active.max_abs != nullptr);
}

}  // TEST_SUITE
