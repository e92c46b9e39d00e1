#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idim/calibration.hpp"
#include "idim/estimators.hpp"
#include "idim/synthdata.hpp"

namespace idim {

// One manifold of a benchmark suite: either a generator spec (realized
// `realizations` times with per-realization seeds) or an external CSV cloud
// (one realization, taken as-is).
struct SuiteItem {
    std::string name;
    int true_dim = 0;
    std::optional<ManifoldSpec> spec;
    std::optional<std::filesystem::path> csv;
    BoundaryCondition csv_boundary = BoundaryCondition::kHard;
};

struct EstimatorConfig {
    Method method = Method::kMedianFsa;
    int k = 5;                    // FSA order, or the neighborhood size K for ml
    bool ml_use_median = false;   // aggregation rule for ml (default mean)
    std::optional<CalibrationModel> calibration;  // required for cmfsa

    std::string label() const;
};

struct CellRecord {
    std::size_t item = 0;
    std::size_t realization = 0;
    std::size_t estimator = 0;
    double estimate = 0.0;
    bool ok = false;
    std::string note;  // error text for failed cells, warnings otherwise
};

struct EstimatorSummary {
    std::string label;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double mpe = 0.0;         // over ok cells
    double error_rate = 0.0;  // over ok cells, integer-mode comparison
};

struct BenchmarkResult {
    std::vector<SuiteItem> items;
    std::vector<EstimatorConfig> estimators;
    std::size_t realizations = 0;
    std::uint64_t seed = 0;
    std::vector<CellRecord> records;

    // Aggregates, recomputable from `records`.
    std::vector<std::vector<double>> mean_by_item;  // [item][estimator], NaN if all failed
    std::vector<EstimatorSummary> summaries;

    void write_raw_csv(const std::filesystem::path& path) const;
    void write_table_csv(const std::filesystem::path& path) const;
    void write_metrics_json(const std::filesystem::path& path) const;
};

// Mean percentage error of an M x N estimate matrix against per-manifold
// true dimensions: (100 / MN) * sum |D_j - est_ij| / D_j.
double mpe(std::span<const int> true_dims, const std::vector<std::vector<double>>& estimates);

// Fraction of cells whose integer-mode estimate misses the true dimension.
double error_rate(std::span<const int> true_dims,
                  const std::vector<std::vector<double>>& estimates);

// Runs every estimator on every (item, realization) cell. Estimator failures
// are recorded per cell and excluded from aggregates; the sweep always
// completes. Deterministic given seed, independent of thread count.
BenchmarkResult run_suite(std::vector<SuiteItem> items, std::vector<EstimatorConfig> estimators,
                          std::size_t realizations, std::uint64_t seed, int threads = 1);

// Reads a suite description (JSON, schema idim.suite/1). Relative CSV paths
// resolve against the suite file's directory.
std::vector<SuiteItem> read_suite(const std::filesystem::path& path);

} // namespace idim
