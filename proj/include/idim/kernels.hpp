#pragma once

#include <cstddef>

// Batch squared-distance kernels: the inner loop of every neighbor query.
// A kernel computes the squared Euclidean distance from one query point to
// a block of n points stored coordinate-major (SoA): coords[j * n + i] is
// coordinate j of point i. The periodic variant wraps every coordinate
// difference on the unit torus before squaring.
//
// The SIMD variants vectorize across points, one point per lane, and keep
// the per-point operation order identical to the scalar reference, so all
// variants produce bit-identical output (equivalence-tested).

namespace idim::kernels {

using BatchSqDistFn = void (*)(const double* coords, std::size_t n, std::size_t dim,
                               const double* query, double* out);

// Scalar reference kernels.
void sq_dist_hard_scalar(const double* coords, std::size_t n, std::size_t dim,
                         const double* query, double* out);
void sq_dist_periodic_scalar(const double* coords, std::size_t n, std::size_t dim,
                             const double* query, double* out);

#if defined(IDIM_HAVE_AVX2)
void sq_dist_hard_avx2(const double* coords, std::size_t n, std::size_t dim,
                       const double* query, double* out);
void sq_dist_periodic_avx2(const double* coords, std::size_t n, std::size_t dim,
                           const double* query, double* out);
#endif

#if defined(IDIM_HAVE_NEON)
void sq_dist_hard_neon(const double* coords, std::size_t n, std::size_t dim,
                       const double* query, double* out);
void sq_dist_periodic_neon(const double* coords, std::size_t n, std::size_t dim,
                           const double* query, double* out);
#endif

// Runtime selection. Honors the IDIM_FORCE_SCALAR environment variable
// (any non-empty value pins the scalar reference kernels).
BatchSqDistFn select_hard();
BatchSqDistFn select_periodic();

// Name of the variant select_* returns ("scalar", "avx2", "neon").
const char* active_kernel_name();

} // namespace idim::kernels
