#include "idim/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "idim/errors.hpp"
#include "idim/parallel.hpp"
#include "idim/rng.hpp"

namespace idim {

std::string EstimatorConfig::label() const {
    std::string s = to_string(method);
    if (method == Method::kLevinaBickel && ml_use_median) s += "-median";
    return s;
}

double mpe(std::span<const int> true_dims, const std::vector<std::vector<double>>& estimates) {
    if (true_dims.size() != estimates.size() || true_dims.empty()) {
        throw ArgumentError("mpe: estimate matrix must have one row per manifold");
    }
    const std::size_t N = estimates.front().size();
    if (N == 0) throw ArgumentError("mpe: empty estimate rows");
    double acc = 0.0;
    for (std::size_t j = 0; j < true_dims.size(); ++j) {
        if (true_dims[j] <= 0) throw ArgumentError("mpe: true dimensions must be > 0");
        if (estimates[j].size() != N) throw ArgumentError("mpe: ragged estimate matrix");
        for (double est : estimates[j]) {
            acc += std::fabs(true_dims[j] - est) / true_dims[j];
        }
    }
    return 100.0 / (static_cast<double>(true_dims.size()) * static_cast<double>(N)) * acc;
}

double error_rate(std::span<const int> true_dims,
                  const std::vector<std::vector<double>>& estimates) {
    if (true_dims.size() != estimates.size() || true_dims.empty()) {
        throw ArgumentError("error_rate: estimate matrix must have one row per manifold");
    }
    const std::size_t N = estimates.front().size();
    if (N == 0) throw ArgumentError("error_rate: empty estimate rows");
    std::size_t misses = 0;
    for (std::size_t j = 0; j < true_dims.size(); ++j) {
        if (true_dims[j] <= 0) throw ArgumentError("error_rate: true dimensions must be > 0");
        if (estimates[j].size() != N) throw ArgumentError("error_rate: ragged estimate matrix");
        for (double est : estimates[j]) {
            misses += integer_mode(est) != true_dims[j] ? 1 : 0;
        }
    }
    return static_cast<double>(misses) /
           (static_cast<double>(true_dims.size()) * static_cast<double>(N));
}

namespace {

// Realization seeds derive from the item NAME, not its position, so
// reordering a suite never changes any cell.
std::uint64_t name_key(const std::string& name) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double run_estimator(const PointCloud& cloud, const EstimatorConfig& cfg, std::string* note) {
    switch (cfg.method) {
        case Method::kMedianFsa:
            return aggregate_median(local_estimates(cloud, cfg.k)).value;
        case Method::kMeanFsa:
            return aggregate_mean(local_estimates(cloud, cfg.k)).value;
        case Method::kModeFsa:
            return aggregate_mode(local_estimates(cloud, cfg.k)).value;
        case Method::kLevinaBickel: {
            const auto locals = levina_bickel_locals(cloud, cfg.k);
            return (cfg.ml_use_median ? aggregate_median(locals) : aggregate_mean(locals)).value;
        }
        case Method::kFsaMl: {
            const auto locals = local_estimates(cloud, cfg.k);
            const auto valid = locals.valid_values();
            if (valid.empty()) throw EstimationError("no valid estimates");
            return fsa_ml_solve(valid, cfg.k);
        }
        case Method::kCorrectedMedianFsa: {
            const double med = aggregate_median(local_estimates(cloud, cfg.k)).value;
            bool out_of_range = false;
            const double corrected = apply_correction(med, *cfg.calibration, &out_of_range);
            if (out_of_range && note) *note = "outside calibrated range";
            return corrected;
        }
    }
    throw ArgumentError("unknown estimator method");
}

} // namespace

BenchmarkResult run_suite(std::vector<SuiteItem> items, std::vector<EstimatorConfig> estimators,
                          std::size_t realizations, std::uint64_t seed, int threads) {
    if (items.empty()) throw ArgumentError("run_suite: empty suite");
    if (estimators.empty()) throw ArgumentError("run_suite: no estimators configured");
    if (realizations < 1) throw ArgumentError("run_suite: realizations must be >= 1");
    for (const auto& e : estimators) {
        if (e.method == Method::kCorrectedMedianFsa && !e.calibration) {
            throw ArgumentError("run_suite: cmfsa requires a calibration model");
        }
    }
    for (const auto& it : items) {
        if (it.true_dim < 1) throw ArgumentError("run_suite: item '" + it.name +
                                                 "' needs a positive true dimension");
        if (!it.spec && !it.csv) {
            throw ArgumentError("run_suite: item '" + it.name + "' has neither spec nor csv");
        }
    }

    BenchmarkResult result;
    result.realizations = realizations;
    result.seed = seed;

    const std::size_t n_est = estimators.size();
    // One work unit per (item, realization): the cloud is built once and all
    // estimators run on it.
    struct Unit {
        std::size_t item;
        std::size_t realization;
    };
    std::vector<Unit> units;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::size_t reps = items[i].csv ? 1 : realizations;
        for (std::size_t r = 0; r < reps; ++r) units.push_back({i, r});
    }
    std::vector<std::vector<CellRecord>> per_unit(units.size());

    parallel_for(units.size(), threads, [&](std::size_t u) {
        const auto [item_idx, r] = units[u];
        const SuiteItem& item = items[item_idx];
        std::vector<CellRecord>& cells = per_unit[u];
        cells.resize(n_est);

        std::optional<PointCloud> cloud;
        std::string load_error;
        try {
            if (item.csv) {
                cloud.emplace(PointCloud::read_csv(*item.csv, item.csv_boundary));
            } else {
                ManifoldSpec spec = *item.spec;
                spec.seed = derive_stream(seed, {name_key(item.name), r});
                cloud.emplace(generate(spec));
            }
        } catch (const std::exception& e) {
            load_error = e.what();
        }

        for (std::size_t e = 0; e < n_est; ++e) {
            CellRecord& cell = cells[e];
            cell.item = item_idx;
            cell.realization = r;
            cell.estimator = e;
            if (!cloud) {
                cell.ok = false;
                cell.note = load_error;
                continue;
            }
            try {
                cell.estimate = run_estimator(*cloud, estimators[e], &cell.note);
                cell.ok = true;
            } catch (const std::exception& ex) {
                cell.ok = false;
                cell.note = ex.what();
            }
        }
    });

    for (auto& cells : per_unit) {
        for (auto& c : cells) result.records.push_back(std::move(c));
    }

    // Aggregates from the records.
    result.mean_by_item.assign(items.size(),
                               std::vector<double>(n_est, std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::vector<double>> sums(items.size(), std::vector<double>(n_est, 0.0));
    std::vector<std::vector<std::size_t>> counts(items.size(), std::vector<std::size_t>(n_est, 0));
    std::vector<EstimatorSummary> summaries(n_est);
    std::vector<double> abs_rel(n_est, 0.0);
    std::vector<std::size_t> misses(n_est, 0);
    for (const auto& c : result.records) {
        if (!c.ok) {
            ++summaries[c.estimator].n_failed;
            continue;
        }
        ++summaries[c.estimator].n_ok;
        sums[c.item][c.estimator] += c.estimate;
        ++counts[c.item][c.estimator];
        const int true_d = items[c.item].true_dim;
        abs_rel[c.estimator] += std::fabs(true_d - c.estimate) / true_d;
        misses[c.estimator] += integer_mode(c.estimate) != true_d ? 1 : 0;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t e = 0; e < n_est; ++e) {
            if (counts[i][e] > 0) {
                result.mean_by_item[i][e] = sums[i][e] / static_cast<double>(counts[i][e]);
            }
        }
    }
    for (std::size_t e = 0; e < n_est; ++e) {
        summaries[e].label = estimators[e].label();
        if (summaries[e].n_ok > 0) {
            summaries[e].mpe = 100.0 * abs_rel[e] / static_cast<double>(summaries[e].n_ok);
            summaries[e].error_rate =
                static_cast<double>(misses[e]) / static_cast<double>(summaries[e].n_ok);
        }
    }
    result.summaries = std::move(summaries);
    result.items = std::move(items);
    result.estimators = std::move(estimators);
    return result;
}

void BenchmarkResult::write_raw_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "item,name,true_dim,realization,estimator,estimate,ok,note\n";
    char buf[32];
    for (const auto& c : records) {
        std::snprintf(buf, sizeof buf, "%.17g", c.estimate);
        std::string note = c.note;
        for (char& ch : note) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        out << c.item << ',' << items[c.item].name << ',' << items[c.item].true_dim << ','
            << c.realization << ',' << estimators[c.estimator].label() << ','
            << (c.ok ? buf : "") << ',' << (c.ok ? 1 : 0) << ',' << note << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

void BenchmarkResult::write_table_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "name,true_dim";
    for (const auto& e : estimators) out << ',' << e.label();
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < items.size(); ++i) {
        out << items[i].name << ',' << items[i].true_dim;
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            const double v = mean_by_item[i][e];
            if (std::isnan(v)) {
                out << ',';
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << ',' << buf;
            }
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

void BenchmarkResult::write_metrics_json(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["schema"] = "idim.metrics/1";
    j["seed"] = seed;
    j["realizations"] = realizations;
    for (const auto& s : summaries) {
        nlohmann::json e;
        e["mpe"] = s.mpe;
        e["error_rate"] = s.error_rate;
        e["n_ok"] = s.n_ok;
        e["n_failed"] = s.n_failed;
        j["estimators"][s.label] = e;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<SuiteItem> read_suite(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open suite file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("suite file " + path.string() + ": invalid JSON: " + e.what());
    }
    if (j.value("schema", "") != "idim.suite/1") {
        throw DataError("suite file " + path.string() + ": unknown schema");
    }
    std::vector<SuiteItem> items;
    try {
        for (const auto& m : j.at("manifolds")) {
            SuiteItem item;
            item.name = m.at("name").get<std::string>();
            item.true_dim = m.at("true_dim").get<int>();
            if (m.contains("csv")) {
                std::filesystem::path p = m.at("csv").get<std::string>();
                if (p.is_relative()) p = path.parent_path() / p;
                item.csv = p;
                item.csv_boundary = boundary_from_string(m.value("boundary", "hard"));
            } else {
                ManifoldSpec spec;
                spec.family = family_from_string(m.at("family").get<std::string>());
                spec.intrinsic_dim = m.at("intrinsic_dim").get<int>();
                spec.ambient_dim = m.value("ambient_dim", spec.intrinsic_dim);
                spec.n = m.at("n").get<std::size_t>();
                spec.boundary = boundary_from_string(m.value("boundary", "hard"));
                if (m.contains("params")) {
                    spec.params = m.at("params").get<std::map<std::string, double>>();
                }
                item.spec = spec;
            }
            items.push_back(std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("suite file " + path.string() + ": missing or malformed field: " +
                        e.what());
    }
    if (items.empty()) throw DataError("suite file " + path.string() + ": no manifolds");
    return items;
}

} // namespace idim
