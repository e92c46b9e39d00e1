#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "idim/errors.hpp"
#include "idim/estimators.hpp"
#include "idim/geometry.hpp"
#include "idim/synthdata.hpp"

using namespace idim;

TEST_CASE("generation is deterministic in (spec, seed)") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kSwissRoll;
    spec.intrinsic_dim = 2;
    spec.ambient_dim = 3;
    spec.n = 200;
    spec.seed = 123;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.rows() == b.rows());
    spec.seed = 124;
    const auto c = generate(spec);
    CHECK(a.rows() != c.rows());
}

TEST_CASE("sphere samples sit on the unit sphere") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kHypersphereSurface;
    spec.intrinsic_dim = 2;
    spec.ambient_dim = 3;
    spec.n = 500;
    spec.seed = 5;
    const auto cloud = generate(spec);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double r2 = 0.0;
        for (double v : cloud.point(i)) r2 += v * v;
        CHECK(std::fabs(std::sqrt(r2) - 1.0) <= 1e-12);
    }
    spec.ambient_dim = 2;
    CHECK_THROWS_AS(generate(spec), ArgumentError);
}

TEST_CASE("helix estimates round to one") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kHelix1D;
    spec.intrinsic_dim = 1;
    spec.ambient_dim = 3;
    spec.n = 2500;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        spec.seed = seed;
        const auto est = aggregate_median(local_estimates(generate(spec), 5, 2));
        CHECK(est.value > 0.8);
        CHECK(est.value < 1.5);
        CHECK(std::llround(est.value) == 1);
    }
}

TEST_CASE("hypercube marginals pass a chi-square uniformity check") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kHypercubeUniform;
    spec.intrinsic_dim = spec.ambient_dim = 3;
    spec.n = 100000;
    spec.seed = 9;
    const auto cloud = generate(spec);
    constexpr int kBins = 20;
    // 1% critical value of chi-square with 19 degrees of freedom.
    constexpr double kCritical = 36.19;
    for (std::size_t j = 0; j < cloud.dim(); ++j) {
        std::vector<std::size_t> counts(kBins, 0);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const int b =
                std::min(kBins - 1, static_cast<int>(cloud.point(i)[j] * kBins));
            ++counts[b];
        }
        const double expected = static_cast<double>(spec.n) / kBins;
        double chi2 = 0.0;
        for (auto c : counts) {
            const double dev = static_cast<double>(c) - expected;
            chi2 += dev * dev / expected;
        }
        CHECK(chi2 < kCritical);
    }
}

TEST_CASE("subspace embedding is an isometry of a D-dimensional set") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kLinearSubspace;
    spec.intrinsic_dim = 3;
    spec.ambient_dim = 8;
    spec.n = 60;
    spec.seed = 31;
    const auto cloud = generate(spec);

    // Orthonormalize differences from point 0 to get a basis of the span.
    std::vector<std::vector<double>> basis;
    const auto p0 = cloud.point(0);
    for (std::size_t i = 1; i < cloud.size() && basis.size() < 3; ++i) {
        std::vector<double> v(cloud.dim());
        for (std::size_t j = 0; j < cloud.dim(); ++j) v[j] = cloud.point(i)[j] - p0[j];
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * b[j];
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * b[j];
        }
        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (norm2 > 1e-16) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& x : v) x *= inv;
            basis.push_back(std::move(v));
        }
    }
    REQUIRE(basis.size() == 3);

    // Every point lies in the affine span, and in-span coordinates reproduce
    // the ambient pairwise distances.
    std::vector<std::vector<double>> coords(cloud.size(), std::vector<double>(3));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::vector<double> v(cloud.dim());
        for (std::size_t j = 0; j < cloud.dim(); ++j) v[j] = cloud.point(i)[j] - p0[j];
        double res2 = 0.0;
        for (std::size_t b = 0; b < 3; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * basis[b][j];
            coords[i][b] = dot;
        }
        for (std::size_t j = 0; j < v.size(); ++j) {
            double rec = 0.0;
            for (std::size_t b = 0; b < 3; ++b) rec += coords[i][b] * basis[b][j];
            res2 += (v[j] - rec) * (v[j] - rec);
        }
        CHECK(std::sqrt(res2) <= 1e-9);
    }
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = i + 1; j < 20; ++j) {
            const double ambient =
                distance(cloud.point(i), cloud.point(j), BoundaryCondition::kHard);
            const double latent = distance(coords[i], coords[j], BoundaryCondition::kHard);
            CHECK(std::fabs(ambient - latent) <= 1e-9);
        }
    }
}

TEST_CASE("nonlinear embedding keeps the intrinsic dimension") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kNonlinearEmbedHypercube;
    spec.intrinsic_dim = 2;
    spec.ambient_dim = 4;
    spec.n = 2000;
    spec.seed = 8;
    const auto cloud = generate(spec);
    CHECK(cloud.dim() == 4);
    const auto est = aggregate_median(local_estimates(cloud, 3, 2));
    CHECK(est.value == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("spec validation") {
    ManifoldSpec spec;
    spec.family = ManifoldFamily::kHypercubeUniform;
    spec.intrinsic_dim = 5;
    spec.ambient_dim = 3;
    spec.n = 10;
    CHECK_THROWS_AS(generate(spec), ArgumentError);
    spec.ambient_dim = 5;
    spec.n = 0;
    CHECK_THROWS_AS(generate(spec), ArgumentError);
    spec.n = 10;
    spec.family = ManifoldFamily::kHelix1D;
    spec.intrinsic_dim = 2;
    spec.ambient_dim = 3;
    CHECK_THROWS_AS(generate(spec), ArgumentError);
    // Periodic tag is reserved for the hypercube family.
    spec.family = ManifoldFamily::kSwissRoll;
    spec.intrinsic_dim = 2;
    spec.boundary = BoundaryCondition::kPeriodicUnit;
    CHECK_THROWS_AS(generate(spec), ArgumentError);
}

TEST_CASE("family names round trip") {
    for (auto f : {ManifoldFamily::kHypercubeUniform, ManifoldFamily::kHypersphereSurface,
                   ManifoldFamily::kSwissRoll, ManifoldFamily::kLinearSubspace,
                   ManifoldFamily::kHelix1D, ManifoldFamily::kNonlinearEmbedHypercube}) {
        CHECK(family_from_string(to_string(f)) == f);
    }
    CHECK_THROWS_AS(family_from_string("torus"), ArgumentError);
}

TEST_CASE("sample_fsa_locals: determinism, median recovery, KS") {
    const auto a = sample_fsa_locals(7.0, 3, 1000, 4);
    const auto b = sample_fsa_locals(7.0, 3, 1000, 4);
    CHECK(a.values == b.values);

    auto big = sample_fsa_locals(7.0, 3, 100000, 12).values;
    std::nth_element(big.begin(), big.begin() + big.size() / 2, big.end());
    CHECK(std::fabs(big[big.size() / 2] - 7.0) < 0.03);
}
