#include "idim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "idim/errors.hpp"
#include "idim/estimators.hpp"
#include "idim/parallel.hpp"
#include "idim/rng.hpp"
#include "idim/synthdata.hpp"

namespace idim {

namespace {

double poly_no_intercept(std::span<const double> coeffs, double d) {
    // Horner on sum_i c_i d^i with c_0 = 0.
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * d + coeffs[j];
    return acc * d;
}

// Solves the s x s normal equations by Gaussian elimination with partial
// pivoting. Throws on a (near-)singular system.
std::vector<double> solve_normal_equations(std::vector<std::vector<double>> g,
                                           std::vector<double> b) {
    const std::size_t s = b.size();
    for (std::size_t col = 0; col < s; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < s; ++r) {
            if (std::fabs(g[r][col]) > std::fabs(g[pivot][col])) pivot = r;
        }
        if (std::fabs(g[pivot][col]) < 1e-280) {
            throw EstimationError("degenerate design: polynomial fit is rank deficient");
        }
        std::swap(g[col], g[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < s; ++r) {
            const double f = g[r][col] / g[col][col];
            for (std::size_t c = col; c < s; ++c) g[r][c] -= f * g[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(s);
    for (std::size_t r = s; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < s; ++c) acc -= g[r][c] * x[c];
        x[r] = acc / g[r][r];
    }
    return x;
}

std::vector<double> ols_fit(std::span<const double> xs, std::span<const double> ys, int s) {
    std::vector<std::vector<double>> g(s, std::vector<double>(s, 0.0));
    std::vector<double> b(s, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double pow_cache[8];
        double p = 1.0;
        for (int j = 0; j < s; ++j) {
            p *= xs[i];
            pow_cache[j] = p;
        }
        for (int r = 0; r < s; ++r) {
            b[r] += pow_cache[r] * ys[i];
            for (int c = 0; c < s; ++c) g[r][c] += pow_cache[r] * pow_cache[c];
        }
    }
    return solve_normal_equations(std::move(g), std::move(b));
}

// Orthogonal-distance variant: minimizes sum (y_i - f(t_i))^2 + (x_i - t_i)^2
// by alternating a per-point Newton step in t with an OLS refit on the
// displaced abscissae. On noise-free data it coincides with OLS.
std::vector<double> odr_fit(std::span<const double> xs, std::span<const double> ys, int s) {
    std::vector<double> c = ols_fit(xs, ys, s);
    std::vector<double> t(xs.begin(), xs.end());
    for (int round = 0; round < 100; ++round) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            double ti = t[i];
            for (int step = 0; step < 5; ++step) {
                // f(t) = sum_j c_j t^j (j = 1..s) and its first two derivatives.
                double f = 0.0, fd = 0.0, fdd = 0.0;
                double tj = ti, tjm1 = 1.0, tjm2 = 0.0;
                for (int j = 1; j <= s; ++j) {
                    f += c[j - 1] * tj;
                    fd += j * c[j - 1] * tjm1;
                    if (j >= 2) fdd += j * (j - 1) * c[j - 1] * tjm2;
                    tjm2 = tjm1;
                    tjm1 = tj;
                    tj *= ti;
                }
                const double ry = ys[i] - f;
                const double grad = -2.0 * ry * fd - 2.0 * (xs[i] - ti);
                const double hess = 2.0 * (fd * fd - ry * fdd) + 2.0;
                if (!(std::fabs(hess) > 1e-300)) break;
                const double delta = grad / hess;
                ti -= delta;
                if (std::fabs(delta) < 1e-14 * std::max(1.0, std::fabs(ti))) break;
            }
            t[i] = ti;
        }
        const std::vector<double> next = ols_fit(t, ys, s);
        double change = 0.0;
        for (int j = 0; j < s; ++j) change = std::max(change, std::fabs(next[j] - c[j]));
        c = next;
        if (change < 1e-13) break;
    }
    return c;
}

void check_monotone(const CalibrationModel& model) {
    if (!(model.d_max > model.d_min)) return;  // single abscissa, nothing to check
    constexpr int kGrid = 1024;
    double prev = -1.0;
    for (int i = 0; i <= kGrid; ++i) {
        const double d = model.d_min + (model.d_max - model.d_min) * i / kGrid;
        if (d <= 0.0) continue;
        const double v = d * std::exp(poly_no_intercept(model.coeffs, d));
        if (v <= prev) {
            throw EstimationError(
                "calibration rejected: correction is not strictly increasing over the "
                "calibrated range");
        }
        prev = v;
    }
}

CalibrationModel fit_points(std::span<const double> xs, std::span<const double> ys, int s,
                            bool use_odr) {
    if (s < 1 || s > 6) throw ArgumentError("polynomial order must be in 1..6");
    if (xs.size() != ys.size() || xs.empty()) {
        throw ArgumentError("polynomial fit: empty or mismatched inputs");
    }
    std::set<double> distinct(xs.begin(), xs.end());
    if (distinct.size() < static_cast<std::size_t>(s) + 1) {
        throw ArgumentError("polynomial fit of order " + std::to_string(s) + " needs at least " +
                            std::to_string(s + 1) + " distinct abscissae");
    }
    CalibrationModel model;
    model.order = s;
    model.fit_method = use_odr ? "odr" : "ols";
    model.coeffs = use_odr ? odr_fit(xs, ys, s) : ols_fit(xs, ys, s);
    std::vector<double> resid(xs.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        resid[i] = ys[i] - poly_no_intercept(model.coeffs, xs[i]);
        mean += resid[i];
    }
    mean /= static_cast<double>(xs.size());
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double r : resid) {
        const double d = r - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(xs.size());
    m3 /= static_cast<double>(xs.size());
    m4 /= static_cast<double>(xs.size());
    model.residual_mean = mean;
    model.residual_sd = std::sqrt(std::max(0.0, m2));
    if (m2 > 0.0) {
        model.residual_skewness = m3 / std::pow(m2, 1.5);
        model.residual_excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    model.d_min = *std::min_element(xs.begin(), xs.end());
    model.d_max = *std::max_element(xs.begin(), xs.end());
    check_monotone(model);
    return model;
}

} // namespace

double fit_alpha(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) throw ArgumentError("fit_alpha: empty input");
    double num = 0.0, den = 0.0;
    for (const auto& [true_d, est] : pairs) {
        if (!(true_d > 0.0) || !(est > 0.0)) {
            throw ArgumentError("fit_alpha: dimensions and estimates must be > 0");
        }
        num += std::log(true_d / est) * est;
        den += est * est;
    }
    return num / den;
}

CalibrationModel fit_polynomial(std::span<const std::pair<double, double>> pairs, int s,
                                bool use_odr) {
    std::vector<double> xs, ys;
    xs.reserve(pairs.size());
    ys.reserve(pairs.size());
    for (const auto& [true_d, est] : pairs) {
        if (!(true_d > 0.0) || !(est > 0.0)) {
            throw ArgumentError("fit_polynomial: dimensions and estimates must be > 0");
        }
        xs.push_back(est);
        ys.push_back(std::log(true_d / est));
    }
    return fit_points(xs, ys, s, use_odr);
}

CalibrationModel fit_log_error(std::span<const double> d_values,
                               std::span<const double> log_errors, int order, bool use_odr) {
    if (order != -1) return fit_points(d_values, log_errors, order, use_odr);
    // Auto order: smallest AIC over s = 1..4 (as far as the data allows).
    std::optional<CalibrationModel> best;
    double best_aic = 0.0;
    const auto pts = static_cast<double>(d_values.size());
    for (int s = 1; s <= 4; ++s) {
        CalibrationModel m;
        try {
            m = fit_points(d_values, log_errors, s, use_odr);
        } catch (const ArgumentError&) {
            break;  // not enough distinct abscissae for this order
        }
        const double ssr =
            pts * (m.residual_sd * m.residual_sd + m.residual_mean * m.residual_mean);
        const double aic = pts * std::log(std::max(ssr / pts, 1e-300)) + 2.0 * s;
        if (!best || aic < best_aic) {
            best = m;
            best_aic = aic;
        }
    }
    if (!best) throw ArgumentError("fit_log_error: no admissible polynomial order");
    return *best;
}

double apply_correction(double d_est, const CalibrationModel& model, bool* out_of_range) {
    if (!(d_est > 0.0)) throw ArgumentError("apply_correction: estimate must be > 0");
    if (out_of_range) *out_of_range = d_est < model.d_min || d_est > model.d_max;
    return d_est * std::exp(poly_no_intercept(model.coeffs, d_est));
}

int integer_mode(double corrected) {
    if (!(corrected > 0.0)) throw ArgumentError("integer_mode: value must be > 0");
    const double r = std::floor(corrected + 0.5);
    return r < 1.0 ? 1 : static_cast<int>(r);
}

CalibrationModel calibrate(const CalibrateOptions& options) {
    if (options.dims.empty()) throw ArgumentError("calibrate: empty dimension list");
    if (options.realizations < 1) throw ArgumentError("calibrate: realizations must be >= 1");
    if (options.n < static_cast<std::size_t>(2 * options.k + 1)) {
        throw ArgumentError("calibrate: n must be >= 2k+1");
    }
    for (int d : options.dims) {
        if (d < 1) throw ArgumentError("calibrate: dimensions must be >= 1");
    }

    const std::size_t n_dims = options.dims.size();
    const std::size_t cells = n_dims * options.realizations;
    std::vector<double> estimates(cells, 0.0);

    parallel_for(cells, options.threads, [&](std::size_t cell) {
        const std::size_t di = cell / options.realizations;
        const std::size_t r = cell % options.realizations;
        ManifoldSpec spec;
        spec.family = ManifoldFamily::kHypercubeUniform;
        spec.intrinsic_dim = options.dims[di];
        spec.ambient_dim = options.dims[di];
        spec.n = options.n;
        spec.boundary = options.boundary;
        spec.seed = derive_stream(options.seed, {static_cast<std::uint64_t>(options.dims[di]), r});
        const PointCloud cloud = generate(spec);
        estimates[cell] = aggregate_median(local_estimates(cloud, options.k)).value;
    });

    // Per-dimension means of the estimate and of ln E; the fit runs on the
    // means, one point per calibration dimension.
    std::vector<double> mean_est(n_dims, 0.0), mean_log_err(n_dims, 0.0), true_dims(n_dims);
    for (std::size_t di = 0; di < n_dims; ++di) {
        true_dims[di] = options.dims[di];
        for (std::size_t r = 0; r < options.realizations; ++r) {
            const double est = estimates[di * options.realizations + r];
            mean_est[di] += est;
            mean_log_err[di] += std::log(options.dims[di] / est);
        }
        mean_est[di] /= static_cast<double>(options.realizations);
        mean_log_err[di] /= static_cast<double>(options.realizations);
    }

    CalibrationModel model = fit_log_error(mean_est, mean_log_err, options.order, options.use_odr);
    model.n = options.n;
    model.k = options.k;
    model.boundary = options.boundary;
    model.seed = options.seed;
    model.realizations = options.realizations;
    model.grid_true_dims = std::move(true_dims);
    model.grid_mean_estimates = std::move(mean_est);
    model.grid_mean_log_errors = std::move(mean_log_err);
    return model;
}

std::optional<CalibrateOptions> calibration_preset(std::size_t n, int k,
                                                   BoundaryCondition boundary) {
    CalibrateOptions opt;
    opt.n = n;
    opt.k = k;
    opt.boundary = boundary;
    opt.order = -1;
    if (n == 2500 && k == 1) {
        for (int d = 2; d <= 30; ++d) opt.dims.push_back(d);
        opt.realizations = 100;
        return opt;
    }
    if (n == 2500 && k == 5) {
        // Wide sweep: unit steps to 30, then coarser where the curve is smooth.
        for (int d = 2; d <= 30; ++d) opt.dims.push_back(d);
        for (int d = 32; d <= 80; d += 2) opt.dims.push_back(d);
        opt.realizations = 40;
        return opt;
    }
    return std::nullopt;
}

namespace {

nlohmann::json boundary_json(BoundaryCondition bc) { return to_string(bc); }

} // namespace

std::string CalibrationModel::to_json() const {
    nlohmann::json j;
    j["schema"] = "idim.calibration/1";
    j["n"] = n;
    j["k"] = k;
    j["boundary"] = boundary_json(boundary);
    j["order"] = order;
    j["coeffs"] = coeffs;
    j["residual_mean"] = residual_mean;
    j["residual_sd"] = residual_sd;
    j["residual_skewness"] = residual_skewness;
    j["residual_excess_kurtosis"] = residual_excess_kurtosis;
    j["d_range"] = {d_min, d_max};
    j["fit"] = fit_method;
    j["seed"] = seed;
    j["realizations"] = realizations;
    j["grid"]["true_dims"] = grid_true_dims;
    j["grid"]["mean_estimates"] = grid_mean_estimates;
    j["grid"]["mean_log_errors"] = grid_mean_log_errors;
    return j.dump(2);
}

CalibrationModel CalibrationModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("calibration model: invalid JSON: ") + e.what());
    }
    if (j.value("schema", "") != "idim.calibration/1") {
        throw DataError("calibration model: unknown schema " + j.value("schema", "(missing)"));
    }
    CalibrationModel m;
    try {
        m.n = j.at("n").get<std::size_t>();
        m.k = j.at("k").get<int>();
        m.boundary = boundary_from_string(j.at("boundary").get<std::string>());
        m.order = j.at("order").get<int>();
        m.coeffs = j.at("coeffs").get<std::vector<double>>();
        m.residual_mean = j.at("residual_mean").get<double>();
        m.residual_sd = j.at("residual_sd").get<double>();
        m.residual_skewness = j.value("residual_skewness", 0.0);
        m.residual_excess_kurtosis = j.value("residual_excess_kurtosis", 0.0);
        m.d_min = j.at("d_range").at(0).get<double>();
        m.d_max = j.at("d_range").at(1).get<double>();
        m.fit_method = j.value("fit", "ols");
        m.seed = j.value("seed", std::uint64_t{0});
        m.realizations = j.value("realizations", std::size_t{0});
        if (j.contains("grid")) {
            m.grid_true_dims = j["grid"].value("true_dims", std::vector<double>{});
            m.grid_mean_estimates = j["grid"].value("mean_estimates", std::vector<double>{});
            m.grid_mean_log_errors = j["grid"].value("mean_log_errors", std::vector<double>{});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("calibration model: missing or malformed field: ") + e.what());
    }
    if (m.coeffs.size() != static_cast<std::size_t>(m.order)) {
        throw DataError("calibration model: coefficient count does not match order");
    }
    return m;
}

void CalibrationModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write calibration model: " + path.string());
    out << to_json() << "\n";
    if (!out) throw DataError("write failed: " + path.string());
}

CalibrationModel CalibrationModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open calibration model: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace idim
