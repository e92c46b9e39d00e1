#include "idim/kernels.hpp"

#if defined(IDIM_HAVE_AVX2)

#include <immintrin.h>

// One point per lane, coordinates iterated in the same order as the scalar
// reference; mul and add are kept separate (no FMA) so each lane performs the
// exact operation sequence of the scalar loop and results match bit for bit.

namespace idim::kernels {

void sq_dist_hard_avx2(const double* coords, std::size_t n, std::size_t dim,
                       const double* query, double* out) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < dim; ++j) {
            const __m256d x = _mm256_loadu_pd(coords + j * n + i);
            const __m256d q = _mm256_set1_pd(query[j]);
            const __m256d d = _mm256_sub_pd(x, q);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
        }
        _mm256_storeu_pd(out + i, acc);
    }
    for (std::size_t i = n4; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = coords[j * n + i] - query[j];
            acc += d * d;
        }
        out[i] = acc;
    }
}

void sq_dist_periodic_avx2(const double* coords, std::size_t n, std::size_t dim,
                           const double* query, double* out) {
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < dim; ++j) {
            const __m256d x = _mm256_loadu_pd(coords + j * n + i);
            const __m256d q = _mm256_set1_pd(query[j]);
            const __m256d t = _mm256_and_pd(_mm256_sub_pd(x, q), abs_mask);
            const __m256d w = _mm256_sub_pd(one, t);
            const __m256d m = _mm256_min_pd(t, w);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(m, m));
        }
        _mm256_storeu_pd(out + i, acc);
    }
    for (std::size_t i = n4; i < n; ++i) {
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

#endif // IDIM_HAVE_AVX2
