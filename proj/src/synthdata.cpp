#include "idim/synthdata.hpp"

#include <cmath>
#include <numbers>

#include "idim/distributions.hpp"
#include "idim/errors.hpp"
#include "idim/rng.hpp"

namespace idim {

const char* to_string(ManifoldFamily f) {
    switch (f) {
        case ManifoldFamily::kHypercubeUniform: return "hypercube";
        case ManifoldFamily::kHypersphereSurface: return "sphere";
        case ManifoldFamily::kSwissRoll: return "swissroll";
        case ManifoldFamily::kLinearSubspace: return "subspace";
        case ManifoldFamily::kHelix1D: return "helix";
        case ManifoldFamily::kNonlinearEmbedHypercube: return "nonlinear";
    }
    return "?";
}

ManifoldFamily family_from_string(const std::string& s) {
    if (s == "hypercube") return ManifoldFamily::kHypercubeUniform;
    if (s == "sphere") return ManifoldFamily::kHypersphereSurface;
    if (s == "swissroll") return ManifoldFamily::kSwissRoll;
    if (s == "subspace") return ManifoldFamily::kLinearSubspace;
    if (s == "helix") return ManifoldFamily::kHelix1D;
    if (s == "nonlinear") return ManifoldFamily::kNonlinearEmbedHypercube;
    throw ArgumentError("unknown manifold family '" + s +
                        "' (expected hypercube|sphere|swissroll|subspace|helix|nonlinear)");
}

double ManifoldSpec::param_or(const std::string& name, double fallback) const {
    const auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SplitMix64 spec_rng(const ManifoldSpec& spec) {
    return SplitMix64(derive_stream(spec.seed, {static_cast<std::uint64_t>(spec.family),
                                                static_cast<std::uint64_t>(spec.intrinsic_dim),
                                                static_cast<std::uint64_t>(spec.ambient_dim),
                                                static_cast<std::uint64_t>(spec.n)}));
}

void check_spec(const ManifoldSpec& spec, int min_intrinsic, int max_intrinsic, int min_ambient) {
    if (spec.n < 1) throw ArgumentError("manifold spec: n must be >= 1");
    if (spec.intrinsic_dim < min_intrinsic ||
        (max_intrinsic > 0 && spec.intrinsic_dim > max_intrinsic)) {
        throw ArgumentError(std::string("manifold spec: intrinsic dimension out of range for ") +
                            to_string(spec.family));
    }
    if (spec.ambient_dim < spec.intrinsic_dim) {
        throw ArgumentError("manifold spec: ambient dimension must be >= intrinsic dimension");
    }
    if (spec.ambient_dim < min_ambient) {
        throw ArgumentError(std::string("manifold spec: ambient dimension too small for ") +
                            to_string(spec.family));
    }
    if (spec.boundary == BoundaryCondition::kPeriodicUnit &&
        spec.family != ManifoldFamily::kHypercubeUniform) {
        throw ArgumentError("periodic boundary applies to the hypercube family only");
    }
}

PointCloud gen_hypercube(const ManifoldSpec& spec) {
    check_spec(spec, 1, 0, 1);
    SplitMix64 rng = spec_rng(spec);
    const std::size_t D = spec.intrinsic_dim, A = spec.ambient_dim;
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < D; ++j) rows[i * A + j] = rng.next_double();
    }
    return PointCloud(std::move(rows), spec.n, A, spec.boundary);
}

PointCloud gen_sphere(const ManifoldSpec& spec) {
    if (spec.ambient_dim < spec.intrinsic_dim + 1) {
        throw ArgumentError("sphere S^D needs ambient dimension >= D + 1");
    }
    check_spec(spec, 1, 0, 2);
    SplitMix64 rng = spec_rng(spec);
    const std::size_t m = spec.intrinsic_dim + 1, A = spec.ambient_dim;
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double g = rng.next_gauss();
                rows[i * A + j] = g;
                norm2 += g * g;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t j = 0; j < m; ++j) rows[i * A + j] *= inv;
    }
    return PointCloud(std::move(rows), spec.n, A, BoundaryCondition::kHard);
}

PointCloud gen_swissroll(const ManifoldSpec& spec) {
    if (spec.intrinsic_dim != 2) throw ArgumentError("swissroll is a 2-manifold");
    check_spec(spec, 2, 2, 3);
    SplitMix64 rng = spec_rng(spec);
    const std::size_t A = spec.ambient_dim;
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * rng.next_double());
        const double h = 21.0 * rng.next_double();
        rows[i * A + 0] = t * std::cos(t);
        rows[i * A + 1] = h;
        rows[i * A + 2] = t * std::sin(t);
    }
    return PointCloud(std::move(rows), spec.n, A, BoundaryCondition::kHard);
}

PointCloud gen_subspace(const ManifoldSpec& spec) {
    check_spec(spec, 1, 0, 1);
    SplitMix64 rng = spec_rng(spec);
    const std::size_t D = spec.intrinsic_dim, A = spec.ambient_dim;
    // Orthonormal basis of a random D-dimensional subspace of R^A via
    // Gram-Schmidt on Gaussian vectors.
    std::vector<std::vector<double>> basis(D, std::vector<double>(A));
    for (std::size_t c = 0; c < D; ++c) {
        for (;;) {
            for (std::size_t j = 0; j < A; ++j) basis[c][j] = rng.next_gauss();
            for (std::size_t p = 0; p < c; ++p) {
                double dot = 0.0;
                for (std::size_t j = 0; j < A; ++j) dot += basis[c][j] * basis[p][j];
                for (std::size_t j = 0; j < A; ++j) basis[c][j] -= dot * basis[p][j];
            }
            double norm2 = 0.0;
            for (std::size_t j = 0; j < A; ++j) norm2 += basis[c][j] * basis[c][j];
            if (norm2 > 1e-12) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (std::size_t j = 0; j < A; ++j) basis[c][j] *= inv;
                break;
            }
        }
    }
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t c = 0; c < D; ++c) {
            const double x = rng.next_double();
            for (std::size_t j = 0; j < A; ++j) rows[i * A + j] += x * basis[c][j];
        }
    }
    return PointCloud(std::move(rows), spec.n, A, BoundaryCondition::kHard);
}

PointCloud gen_helix(const ManifoldSpec& spec) {
    if (spec.intrinsic_dim != 1) throw ArgumentError("helix is a 1-manifold");
    check_spec(spec, 1, 1, 3);
    SplitMix64 rng = spec_rng(spec);
    const double winding = spec.param_or("winding", 8.0);
    const double amplitude = spec.param_or("amplitude", 1.0);
    const std::size_t A = spec.ambient_dim;
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double t = kTwoPi * rng.next_double();
        rows[i * A + 0] = std::cos(t);
        rows[i * A + 1] = std::sin(t);
        rows[i * A + 2] = amplitude * std::sin(winding * t);
    }
    return PointCloud(std::move(rows), spec.n, A, BoundaryCondition::kHard);
}

PointCloud gen_nonlinear(const ManifoldSpec& spec) {
    if (spec.ambient_dim < 2 * spec.intrinsic_dim) {
        throw ArgumentError("nonlinear embedding needs ambient dimension >= 2 * intrinsic");
    }
    check_spec(spec, 1, 0, 2);
    SplitMix64 rng = spec_rng(spec);
    const double scale = spec.param_or("scale", 0.25);
    const std::size_t D = spec.intrinsic_dim, A = spec.ambient_dim;
    std::vector<double> rows(spec.n * A, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < D; ++j) {
            const double x = rng.next_double();
            rows[i * A + j] = x;
            rows[i * A + D + j] = scale * std::sin(kTwoPi * x);
        }
    }
    return PointCloud(std::move(rows), spec.n, A, BoundaryCondition::kHard);
}

} // namespace

PointCloud generate(const ManifoldSpec& spec) {
    switch (spec.family) {
        case ManifoldFamily::kHypercubeUniform: return gen_hypercube(spec);
        case ManifoldFamily::kHypersphereSurface: return gen_sphere(spec);
        case ManifoldFamily::kSwissRoll: return gen_swissroll(spec);
        case ManifoldFamily::kLinearSubspace: return gen_subspace(spec);
        case ManifoldFamily::kHelix1D: return gen_helix(spec);
        case ManifoldFamily::kNonlinearEmbedHypercube: return gen_nonlinear(spec);
    }
    throw ArgumentError("unknown manifold family");
}

LocalEstimateSet sample_fsa_locals(double D, int k, std::size_t n, std::uint64_t seed) {
    if (!(D > 0.0)) throw ArgumentError("sample_fsa_locals: D must be > 0");
    SplitMix64 rng(derive_stream(seed, {0x10CA15u, static_cast<std::uint64_t>(k), n}));
    LocalEstimateSet out;
    out.k = k;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Uniform strictly inside (0,1) so the quantile stays finite.
        const double u = (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        out.values[i] = fsa_quantile(u, k, D);
    }
    return out;
}

} // namespace idim
