#include "idim/kernels.hpp"

#if defined(IDIM_HAVE_NEON)

#include <arm_neon.h>

// Two points per lane pair; same per-lane operation order as the scalar
// reference (no FMA), so results are bit-identical.

namespace idim::kernels {

void sq_dist_hard_neon(const double* coords, std::size_t n, std::size_t dim,
                       const double* query, double* out) {
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            const float64x2_t x = vld1q_f64(coords + j * n + i);
            const float64x2_t q = vdupq_n_f64(query[j]);
            const float64x2_t d = vsubq_f64(x, q);
            acc = vaddq_f64(acc, vmulq_f64(d, d));
        }
        vst1q_f64(out + i, acc);
    }
    for (std::size_t i = n2; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = coords[j * n + i] - query[j];
            acc += d * d;
        }
        out[i] = acc;
    }
}

void sq_dist_periodic_neon(const double* coords, std::size_t n, std::size_t dim,
                           const double* query, double* out) {
    const float64x2_t one = vdupq_n_f64(1.0);
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            const float64x2_t x = vld1q_f64(coords + j * n + i);
            const float64x2_t q = vdupq_n_f64(query[j]);
            const float64x2_t t = vabsq_f64(vsubq_f64(x, q));
            const float64x2_t w = vsubq_f64(one, t);
            const float64x2_t m = vminq_f64(t, w);
            acc = vaddq_f64(acc, vmulq_f64(m, m));
        }
        vst1q_f64(out + i, acc);
    }
    for (std::size_t i = n2; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double t = __builtin_fabs(coords[j * n + i] - query[j]);
            const double w = 1.0 - t;
            const double m = t < w ? t : w;
            acc += m * m;
        }
        out[i] = acc;
    }
}

} // namespace idim::kernels

#endif // IDIM_HAVE_NEON
