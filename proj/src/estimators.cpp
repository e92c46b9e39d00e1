#include "idim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "idim/errors.hpp"
#include "idim/parallel.hpp"

namespace idim {

const char* to_string(Method m) {
    switch (m) {
        case Method::kMedianFsa: return "mfsa";
        case Method::kMeanFsa: return "mean";
        case Method::kModeFsa: return "mode";
        case Method::kLevinaBickel: return "ml";
        case Method::kFsaMl: return "fsaml";
        case Method::kCorrectedMedianFsa: return "cmfsa";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "mfsa") return Method::kMedianFsa;
    if (s == "mean") return Method::kMeanFsa;
    if (s == "mode") return Method::kModeFsa;
    if (s == "ml") return Method::kLevinaBickel;
    if (s == "fsaml") return Method::kFsaMl;
    if (s == "cmfsa") return Method::kCorrectedMedianFsa;
    throw ArgumentError("unknown method '" + s + "' (expected mfsa|mean|mode|ml|fsaml|cmfsa)");
}

bool LocalEstimateSet::is_valid(double v) { return std::isfinite(v) && v > 0.0; }

std::size_t LocalEstimateSet::valid_count() const {
    std::size_t c = 0;
    for (double v : values) c += is_valid(v) ? 1 : 0;
    return c;
}

std::vector<double> LocalEstimateSet::valid_values() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) {
        if (is_valid(v)) out.push_back(v);
    }
    return out;
}

double fsa_local(double r_k, double r_2k) {
    if (!(r_k >= 0.0) || !(r_2k >= r_k)) {
        throw ArgumentError("fsa_local: need 0 <= R_k <= R_2k");
    }
    if (r_k == 0.0) return 0.0;  // duplicate point, flagged invalid
    if (r_k == r_2k) return std::numeric_limits<double>::infinity();
    return M_LN2 / std::log(r_2k / r_k);
}

LocalEstimateSet local_estimates_from_knn(const std::vector<NeighborDistances>& neighbors, int k) {
    if (k < 1) throw ArgumentError("local_estimates: k must be >= 1");
    LocalEstimateSet out;
    out.k = k;
    out.values.resize(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        const auto& d = neighbors[i].distances;
        if (d.size() < static_cast<std::size_t>(2 * k)) {
            throw ArgumentError("local_estimates: neighbor list shorter than 2k");
        }
        out.values[i] = fsa_local(d[k - 1], d[2 * k - 1]);
    }
    return out;
}

LocalEstimateSet local_estimates(const PointCloud& cloud, int k, int threads) {
    if (k < 1) throw ArgumentError("local_estimates: k must be >= 1");
    if (cloud.size() < static_cast<std::size_t>(2 * k + 1)) {
        throw ArgumentError("insufficient sample: local estimates at k=" + std::to_string(k) +
                            " need n >= 2k+1, n=" + std::to_string(cloud.size()));
    }
    return local_estimates_from_knn(knn_all(cloud, 2 * static_cast<std::size_t>(k), threads), k);
}

namespace {

std::vector<double> require_valid(const LocalEstimateSet& locals) {
    auto v = locals.valid_values();
    if (v.empty()) throw EstimationError("no valid estimates to aggregate");
    return v;
}

// Nearest positive integer, half rounded up, floor at 1.
long long round_positive(double v) {
    const long long r = static_cast<long long>(std::floor(v + 0.5));
    return r < 1 ? 1 : r;
}

} // namespace

GlobalEstimate aggregate_median(const LocalEstimateSet& locals) {
    auto v = require_valid(locals);
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double med = v[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + mid);
        med = 0.5 * (lower + med);
    }
    return {Method::kMedianFsa, med, locals.k, n, locals.invalid_count()};
}

GlobalEstimate aggregate_mean(const LocalEstimateSet& locals) {
    const auto v = require_valid(locals);
    double s = 0.0;
    for (double x : v) s += x;
    return {Method::kMeanFsa, s / static_cast<double>(v.size()), locals.k, v.size(),
            locals.invalid_count()};
}

GlobalEstimate aggregate_mode(const LocalEstimateSet& locals) {
    const auto v = require_valid(locals);
    std::map<long long, std::size_t> counts;
    for (double x : v) ++counts[round_positive(x)];
    long long best = 0;
    std::size_t best_count = 0;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {  // map iterates ascending: ties keep the smaller integer
            best = value;
            best_count = count;
        }
    }
    return {Method::kModeFsa, static_cast<double>(best), locals.k, v.size(),
            locals.invalid_count()};
}

double levina_bickel(std::span<const double> ratios) {
    if (ratios.empty()) throw ArgumentError("levina_bickel: empty ratio list");
    double s = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !(r <= 1.0)) {
            throw ArgumentError("levina_bickel: ratios must be in (0,1]");
        }
        s -= std::log(r);
    }
    if (s == 0.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(ratios.size()) / s;
}

LocalEstimateSet levina_bickel_locals(const PointCloud& cloud, int K, int threads) {
    if (K < 2) throw ArgumentError("levina_bickel_locals: K must be >= 2");
    if (cloud.size() < static_cast<std::size_t>(K + 1)) {
        throw ArgumentError("insufficient sample: Levina-Bickel needs n >= K+1");
    }
    const auto neighbors = knn_all(cloud, static_cast<std::size_t>(K), threads);
    LocalEstimateSet out;
    out.k = K;
    out.values.resize(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        const auto& d = neighbors[i].distances;
        if (d[0] <= 0.0) {
            out.values[i] = 0.0;  // duplicate point, invalid
            continue;
        }
        out.values[i] = levina_bickel(neighbors[i].normalized_ratios());
    }
    return out;
}

double fsa_log_likelihood(std::span<const double> locals, int k, double D) {
    if (k < 1) throw ArgumentError("fsa_log_likelihood: k must be >= 1");
    if (!(D > 0.0)) throw ArgumentError("fsa_log_likelihood: D must be > 0");
    const double n = static_cast<double>(locals.size());
    double sum_inv = 0.0, sum_log = 0.0, sum_tail = 0.0;
    for (double d : locals) {
        sum_inv += 1.0 / d;
        sum_log += std::log(d);
        if (k > 1) sum_tail += std::log(-std::expm1(-D / d * M_LN2));
    }
    return n * std::log(M_LN2) + n * std::log(D) - D * k * M_LN2 * sum_inv +
           (k - 1) * sum_tail - 2.0 * sum_log;
}

namespace {

// Score function whose root is the ML dimension.
double ml_score(std::span<const double> locals, int k, double D) {
    const double n = static_cast<double>(locals.size());
    double s1 = 0.0, s2 = 0.0;
    for (double d : locals) {
        s1 += 1.0 / d;
        if (k > 1) {
            const double denom = std::expm1(D / d * M_LN2);  // 2^(D/d) - 1
            s2 += std::isinf(denom) ? 0.0 : 1.0 / (d * denom);
        }
    }
    return n / D - M_LN2 * k * s1 + M_LN2 * (k - 1) * s2;
}

} // namespace

double fsa_ml_solve(std::span<const double> locals, int k) {
    if (k < 1) throw ArgumentError("fsa_ml_solve: k must be >= 1");
    if (locals.empty()) throw ArgumentError("fsa_ml_solve: empty local estimate set");
    double sum_inv = 0.0;
    for (double d : locals) {
        if (!LocalEstimateSet::is_valid(d)) {
            throw ArgumentError("fsa_ml_solve: all local estimates must be valid");
        }
        sum_inv += 1.0 / d;
    }
    if (k == 1) return static_cast<double>(locals.size()) / (M_LN2 * sum_inv);

    // Scan 64 log-spaced points for sign changes, then bisect. Uniqueness of
    // the root is not guaranteed a priori, so multiple brackets are an error.
    constexpr int kScan = 64;
    constexpr double kLo = 1e-6, kHi = 1e3;
    double grid[kScan + 1];
    double score[kScan + 1];
    for (int i = 0; i <= kScan; ++i) {
        grid[i] = kLo * std::pow(kHi / kLo, static_cast<double>(i) / kScan);
        score[i] = ml_score(locals, k, grid[i]);
    }
    int bracket = -1;
    int n_brackets = 0;
    for (int i = 0; i < kScan; ++i) {
        if ((score[i] > 0.0 && score[i + 1] <= 0.0) || (score[i] < 0.0 && score[i + 1] >= 0.0)) {
            bracket = i;
            ++n_brackets;
        }
    }
    if (n_brackets == 0) {
        std::ostringstream msg;
        msg << "fsa_ml_solve: no root: no sign change of the score over D in [" << kLo << ", "
            << kHi << "]";
        throw EstimationError(msg.str());
    }
    if (n_brackets > 1) {
        throw EstimationError("fsa_ml_solve: score has multiple sign changes; likelihood is "
                              "not unimodal on the scanned range");
    }
    double lo = grid[bracket], hi = grid[bracket + 1];
    double flo = score[bracket];
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        const double fm = ml_score(locals, k, mid);
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace idim
