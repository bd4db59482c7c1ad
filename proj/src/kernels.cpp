#include <cstdlib>
#include <cstring>

#include "kgs/kernels.hpp"

namespace kgs::kernels {

#if defined(KGS_HAVE_AVX2)
const KernelSet& avx2_kernel_set();
#endif

const KernelSet* avx2_kernels() {
#if defined(KGS_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2")) return &avx2_kernel_set();
#endif
    return nullptr;
}

const KernelSet& select_kernels(bool allow_vector) {
    if (allow_vector)
        if (const KernelSet* vec = avx2_kernels()) return *vec;
    return scalar_kernels();
}

const KernelSet& active_kernels() {
    static const KernelSet* set = [] {
        const char* force = std::getenv("KGS_FORCE_SCALAR");
        const bool forced = force != nullptr && std::strcmp(force, "1") == 0;
        return &select_kernels(!forced);
    }();
    return *set;
}

}  // namespace kgs::kernels
