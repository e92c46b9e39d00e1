#include "idim/kernels.hpp"

#include <cmath>

namespace idim::kernels {

void sq_dist_hard_scalar(const double* coords, std::size_t n, std::size_t dim,
                         const double* query, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = coords[j * n + i] - query[j];
            acc += d * d;
        }
        out[i] = acc;
    }
}

void sq_dist_periodic_scalar(const double* coords, std::size_t n, std::size_t dim,
                             const double* query, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double t = std::fabs(coords[j * n + i] - query[j]);
            const double w = 1.0 - t;
            const double m = t < w ? t : w;
            acc += m * m;
        }
        out[i] = acc;
    }
}

} // namespace idim::kernels
