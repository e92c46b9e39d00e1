#include "idim/kernels.hpp"

#include <cstdlib>

namespace idim::kernels {

namespace {

bool force_scalar() {
    const char* v = std::getenv("IDIM_FORCE_SCALAR");
    return v != nullptr && v[0] != '\0';
}

const char* pick_name() {
    if (force_scalar()) return "scalar";
#if defined(IDIM_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2")) return "avx2";
#endif
#if defined(IDIM_HAVE_NEON)
    return "neon";
#endif
    return "scalar";
}

} // namespace

const char* active_kernel_name() {
    static const char* name = pick_name();
    return name;
}

BatchSqDistFn select_hard() {
    const char* name = active_kernel_name();
#if defined(IDIM_HAVE_AVX2)
    if (name[0] == 'a') return sq_dist_hard_avx2;
#endif
#if defined(IDIM_HAVE_NEON)
    if (name[0] == 'n') return sq_dist_hard_neon;
#endif
    (void)name;
    return sq_dist_hard_scalar;
}

BatchSqDistFn select_periodic() {
    const char* name = active_kernel_name();
#if defined(IDIM_HAVE_AVX2)
    if (name[0] == 'a') return sq_dist_periodic_avx2;
#endif
#if defined(IDIM_HAVE_NEON)
    if (name[0] == 'n') return sq_dist_periodic_neon;
#endif
    (void)name;
    return sq_dist_periodic_scalar;
}

} // namespace idim::kernels
