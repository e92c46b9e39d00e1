#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "idim/geometry.hpp"

namespace idim {

enum class Method { kMedianFsa, kMeanFsa, kModeFsa, kLevinaBickel, kFsaMl, kCorrectedMedianFsa };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

// Local estimates d_k at every query point. A value is valid when it is
// finite and > 0; a tie R_k == R_2k is stored as +inf and a zero R_k as 0,
// so invalid locals stay visible instead of being silently dropped.
struct LocalEstimateSet {
    int k = 0;
    std::vector<double> values;

    static bool is_valid(double v);
    std::size_t valid_count() const;
    std::size_t invalid_count() const { return values.size() - valid_count(); }
    std::vector<double> valid_values() const;
};

struct GlobalEstimate {
    Method method;
    double value = 0.0;
    int k = 0;
    std::size_t n_local = 0;    // valid locals used
    std::size_t n_invalid = 0;  // locals excluded as invalid
};

// Local FSA estimate ln 2 / ln(R_2k / R_k). Requires 0 <= R_k <= R_2k.
double fsa_local(double r_k, double r_2k);

// One fsa_local value per point from its k-th and 2k-th neighbor distances.
// Requires n >= 2k + 1.
LocalEstimateSet local_estimates(const PointCloud& cloud, int k, int threads = 1);

// Same, reusing neighbor lists of length >= 2k (for shared-K sweeps).
LocalEstimateSet local_estimates_from_knn(const std::vector<NeighborDistances>& neighbors, int k);

GlobalEstimate aggregate_median(const LocalEstimateSet& locals);
GlobalEstimate aggregate_mean(const LocalEstimateSet& locals);
// Mode of the locals rounded to the nearest positive integer, ties broken
// toward the smaller integer.
GlobalEstimate aggregate_mode(const LocalEstimateSet& locals);

// Levina-Bickel ML estimate (K-1) / (-sum ln r_j) from normalized ratios
// r_j = R_j / R_K in (0, 1]. A ratio of 1 contributes zero; if the whole sum
// is zero the result is invalid (+inf).
double levina_bickel(std::span<const double> ratios);

// Local Levina-Bickel estimate at every point with neighborhood K.
LocalEstimateSet levina_bickel_locals(const PointCloud& cloud, int K, int threads = 1);

// Log-likelihood of the i.i.d. FSA model at dimension D (used by the ML
// solver and by its local-maximum check).
double fsa_log_likelihood(std::span<const double> locals, int k, double D);

// Maximum-likelihood dimension given i.i.d. local estimates: the root of the
// score equation, found by a log-spaced sign-change scan plus bisection on
// D in (1e-6, 1e3]. Closed form n / (ln 2 * sum 1/d_i) at k=1.
double fsa_ml_solve(std::span<const double> locals, int k);
inline double fsa_ml_solve(const LocalEstimateSet& locals) {
    return fsa_ml_solve(locals.values, locals.k);
}

} // namespace idim
