#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idim/geometry.hpp"

namespace idim {

// Fitted finite-sample/edge correction: D ~ d * exp(sum_i alpha_i d^i).
// The polynomial acts on the log relative error ln(D/d) with no intercept.
struct CalibrationModel {
    std::size_t n = 0;  // calibration sample size
    int k = 0;          // neighborhood order
    BoundaryCondition boundary = BoundaryCondition::kHard;
    int order = 1;
    std::vector<double> coeffs;  // alpha_1 .. alpha_order
    double residual_mean = 0.0;  // of ln E after the fit
    double residual_sd = 0.0;
    // Normality diagnostics of the residuals (reported, never enforced).
    double residual_skewness = 0.0;
    double residual_excess_kurtosis = 0.0;
    double d_min = 0.0;  // calibrated estimate range
    double d_max = 0.0;
    std::string fit_method = "ols";  // "ols" or "odr"

    // Provenance so corrected results stay reproducible.
    std::uint64_t seed = 0;
    std::size_t realizations = 0;
    std::vector<double> grid_true_dims;
    std::vector<double> grid_mean_estimates;
    std::vector<double> grid_mean_log_errors;

    std::string to_json() const;
    static CalibrationModel from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static CalibrationModel load(const std::filesystem::path& path);
};

// Through-origin least-squares slope of ln E on d for (D_true, d_est) pairs:
// the order-1 hard-boundary fit.
double fit_alpha(std::span<const std::pair<double, double>> pairs);

// Least squares of ln E on {d, d^2, ..., d^s} with no intercept, plus
// residual statistics and a monotonicity check of the resulting correction
// over the data range (violation rejects the model). Needs at least s+1
// distinct abscissae.
CalibrationModel fit_polynomial(std::span<const std::pair<double, double>> pairs, int s,
                                bool use_odr = false);

// Same fit on raw (d, ln E) points; what calibrate() uses for per-dimension
// means. order = -1 selects s <= 4 by an AIC criterion.
CalibrationModel fit_log_error(std::span<const double> d_values,
                               std::span<const double> log_errors, int order,
                               bool use_odr = false);

// d * exp(sum alpha_i d^i). Outside the calibrated range the value is still
// computed; *out_of_range is set so callers can warn.
double apply_correction(double d_est, const CalibrationModel& model,
                        bool* out_of_range = nullptr);

// Nearest positive integer (half up, floor at 1).
int integer_mode(double corrected);

struct CalibrateOptions {
    std::size_t n = 2500;
    int k = 5;
    BoundaryCondition boundary = BoundaryCondition::kHard;
    std::vector<int> dims;  // intrinsic dimensions of the hypercube sweep
    std::size_t realizations = 100;
    std::uint64_t seed = 1;
    int order = -1;  // -1 = auto (AIC over s <= 4)
    bool use_odr = false;
    int threads = 1;
};

// Hypercube calibration sweep: for every D in dims, `realizations` clouds
// are sampled and estimated with the median-FSA rule; the correction is
// fitted on the per-D means of ln E. Deterministic given seed and
// independent of thread count.
CalibrationModel calibrate(const CalibrateOptions& options);

// Named default sweeps keyed by (n, k): (2500, 1) covers D = 2..30 and
// (2500, 5) covers D = 2..80 for wide-range corrections.
std::optional<CalibrateOptions> calibration_preset(std::size_t n, int k,
                                                   BoundaryCondition boundary);

} // namespace idim
