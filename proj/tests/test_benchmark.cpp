#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "idim/benchmark.hpp"
#include "idim/errors.hpp"

using namespace idim;

TEST_CASE("mpe closed forms") {
    std::vector<int> dims{10};
    std::vector<std::vector<double>> est{{10.0, 10.0}};
    CHECK(mpe(dims, est) == 0.0);

    est = {{9.0}};
    CHECK(mpe(dims, est) == doctest::Approx(10.0).epsilon(1e-14));

    dims = {2, 10};
    est = {{2.0}, {9.0}};
    CHECK(mpe(dims, est) == doctest::Approx(5.0).epsilon(1e-14));

    est = {{2.0, 2.0}, {9.0}};
    CHECK_THROWS_AS(mpe(dims, est), ArgumentError);
    est = {{2.0}};
    CHECK_THROWS_AS(mpe(dims, est), ArgumentError);
}

TEST_CASE("error_rate closed forms") {
    std::vector<int> dims{2};
    std::vector<std::vector<double>> est{{1.6, 2.4}};
    CHECK(error_rate(dims, est) == 0.0);
    est = {{2.6, 2.4}};
    CHECK(error_rate(dims, est) == 0.5);
    est = {{2.0, 2.0}};
    CHECK(error_rate(dims, est) == 0.0);
}

TEST_CASE("five fixed metric fixtures, binary-exact") {
    // Fractions chosen to be exactly representable: quarters and eighths.
    {
        std::vector<int> dims{4};
        std::vector<std::vector<double>> est{{3.0}};  // |4-3|/4 = 0.25
        CHECK(mpe(dims, est) == 25.0);
        CHECK(error_rate(dims, est) == 1.0);
    }
    {
        std::vector<int> dims{2, 4};
        std::vector<std::vector<double>> est{{2.5, 1.5}, {5.0, 3.0}};
        // rel errors: 0.25 each -> 25%; 2.5 and 1.5 both round to 2ish:
        // round(2.5)=3 misses, round(1.5)=2 hits, 5 and 3 miss -> 3/4
        CHECK(mpe(dims, est) == 25.0);
        CHECK(error_rate(dims, est) == 0.75);
    }
    {
        std::vector<int> dims{8};
        std::vector<std::vector<double>> est{{6.0, 10.0, 8.0, 8.0}};
        // rel: .25, .25, 0, 0 -> 12.5%; misses: 2 of 4
        CHECK(mpe(dims, est) == 12.5);
        CHECK(error_rate(dims, est) == 0.5);
    }
    {
        std::vector<int> dims{16};
        std::vector<std::vector<double>> est{{16.25, 15.75}};  // both round to 16
        CHECK(mpe(dims, est) == 1.5625);
        CHECK(error_rate(dims, est) == 0.0);
    }
    {
        std::vector<int> dims{1, 2, 4, 8};
        std::vector<std::vector<double>> est{{1.0}, {2.0}, {5.0}, {6.0}};
        // rel: 0, 0, 0.25, 0.25 -> 12.5%; misses 2 of 4
        CHECK(mpe(dims, est) == 12.5);
        CHECK(error_rate(dims, est) == 0.5);
    }
}

namespace {

std::vector<SuiteItem> tiny_suite() {
    SuiteItem cube;
    cube.name = "cube3";
    cube.true_dim = 3;
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kHypercubeUniform;
    spec.intrinsic_dim = spec.ambient_dim = 3;
    spec.n = 400;
    cube.spec = spec;

    SuiteItem helix;
    helix.name = "helix";
    helix.true_dim = 1;
    ManifoldSpec hspec;
    hspec.family = ManifoldFamily::kHelix1D;
    hspec.intrinsic_dim = 1;
    hspec.ambient_dim = 3;
    hspec.n = 400;
    helix.spec = hspec;
    return {cube, helix};
}

} // namespace

TEST_CASE("run_suite produces recomputable aggregates") {
    auto items = tiny_suite();
    std::vector<EstimatorConfig> estimators(2);
    estimators[0].method = Method::kMedianFsa;
    estimators[0].k = 2;
    estimators[1].method = Method::kLevinaBickel;
    estimators[1].k = 6;

    const auto result = run_suite(items, estimators, 3, 11, 2);
    CHECK(result.records.size() == 2 * 3 * 2);

    // Rerun: determinism.
    const auto again = run_suite(items, estimators, 3, 11, 1);
    REQUIRE(again.records.size() == result.records.size());
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        CHECK(result.records[i].estimate == again.records[i].estimate);
    }

    // Aggregates recomputed from the records match the stored ones exactly.
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        double acc = 0.0;
        std::size_t n_ok = 0, misses = 0;
        for (const auto& c : result.records) {
            if (c.estimator != e || !c.ok) continue;
            ++n_ok;
            acc += std::fabs(items[c.item].true_dim - c.estimate) / items[c.item].true_dim;
            misses += integer_mode(c.estimate) != items[c.item].true_dim ? 1 : 0;
        }
        CHECK(result.summaries[e].n_ok == n_ok);
        CHECK(result.summaries[e].mpe == 100.0 * acc / static_cast<double>(n_ok));
        CHECK(result.summaries[e].error_rate ==
              static_cast<double>(misses) / static_cast<double>(n_ok));
    }

    // Swapping manifold order leaves the per-estimator metrics unchanged
    // (cell seeds key on the item name, not its position).
    auto swapped_items = items;
    std::swap(swapped_items[0], swapped_items[1]);
    const auto swapped = run_suite(swapped_items, estimators, 3, 11, 1);
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        CHECK(swapped.summaries[e].mpe == doctest::Approx(result.summaries[e].mpe).epsilon(1e-12));
        CHECK(swapped.summaries[e].error_rate == result.summaries[e].error_rate);
    }

    // The metric itself is invariant to permuting rows and realizations.
    {
        std::vector<int> dims{3, 1};
        std::vector<std::vector<double>> est{{2.5, 3.5, 3.0}, {1.0, 1.25, 0.75}};
        std::vector<int> dims_p{1, 3};
        std::vector<std::vector<double>> est_p{{0.75, 1.0, 1.25}, {3.0, 2.5, 3.5}};
        CHECK(mpe(dims, est) == doctest::Approx(mpe(dims_p, est_p)).epsilon(1e-14));
        CHECK(error_rate(dims, est) == error_rate(dims_p, est_p));
    }
}

TEST_CASE("single manifold, single estimator, N=1: aggregate equals the record") {
    auto items = tiny_suite();
    items.pop_back();
    std::vector<EstimatorConfig> estimators(1);
    estimators[0].method = Method::kMedianFsa;
    estimators[0].k = 2;
    const auto result = run_suite(items, estimators, 1, 3, 1);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].ok);
    CHECK(result.mean_by_item[0][0] == result.records[0].estimate);
    CHECK(result.summaries[0].mpe ==
          100.0 * (std::fabs(3.0 - result.records[0].estimate) / 3.0));
}

TEST_CASE("failed cells are recorded, not fatal") {
    auto items = tiny_suite();
    std::vector<EstimatorConfig> estimators(2);
    estimators[0].method = Method::kMedianFsa;
    estimators[0].k = 2;
    estimators[1].method = Method::kMedianFsa;
    estimators[1].k = 500;  // n = 400 < 2k+1: every cell fails
    const auto result = run_suite(items, estimators, 2, 7, 1);
    CHECK(result.summaries[0].n_failed == 0);
    CHECK(result.summaries[1].n_ok == 0);
    CHECK(result.summaries[1].n_failed == 4);
    for (const auto& c : result.records) {
        if (c.estimator == 1) {
            CHECK_FALSE(c.ok);
            CHECK_FALSE(c.note.empty());
        }
    }
}

TEST_CASE("cmfsa requires a calibration model") {
    auto items = tiny_suite();
    std::vector<EstimatorConfig> estimators(1);
    estimators[0].method = Method::kCorrectedMedianFsa;
    estimators[0].k = 2;
    CHECK_THROWS_AS(run_suite(items, estimators, 1, 1, 1), ArgumentError);
}

TEST_CASE("result files round trip through the filesystem") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "idim_bench_test";
    fs::create_directories(dir);

    auto items = tiny_suite();
    std::vector<EstimatorConfig> estimators(1);
    estimators[0].method = Method::kMedianFsa;
    estimators[0].k = 2;
    const auto result = run_suite(items, estimators, 2, 19, 1);
    result.write_raw_csv(dir / "raw.csv");
    result.write_table_csv(dir / "table.csv");
    result.write_metrics_json(dir / "metrics.json");

    // Recompute the MPE from the raw records on disk.
    std::ifstream raw(dir / "raw.csv");
    REQUIRE(raw.good());
    std::string line;
    std::getline(raw, line);  // header
    double acc = 0.0;
    std::size_t count = 0;
    while (std::getline(raw, line)) {
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() >= 7);
        const int true_d = std::stoi(fields[2]);
        const double est = std::stod(fields[5]);
        acc += std::fabs(true_d - est) / true_d;
        ++count;
    }
    CHECK(count == 4);
    CHECK(100.0 * acc / count == doctest::Approx(result.summaries[0].mpe).epsilon(1e-12));

    // Suite JSON parsing, including an external CSV item.
    const auto cloud = generate(*items[0].spec);
    cloud.write_csv(dir / "ext.csv");
    {
        std::ofstream suite(dir / "suite.json");
        suite << R"({"schema":"idim.suite/1","manifolds":[)"
              << R"({"name":"cube","family":"hypercube","intrinsic_dim":3,"n":400,"true_dim":3},)"
              << R"({"name":"ext","csv":"ext.csv","true_dim":3}]})";
    }
    const auto parsed = read_suite(dir / "suite.json");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].spec.has_value());
    CHECK(parsed[0].spec->ambient_dim == 3);
    CHECK(parsed[1].csv.has_value());

    const auto mixed = run_suite(parsed, estimators, 3, 4, 1);
    // CSV items run once regardless of the realization count.
    CHECK(mixed.records.size() == 3 + 1);

    CHECK_THROWS_AS(read_suite(dir / "missing.json"), DataError);
    fs::remove_all(dir);
}
