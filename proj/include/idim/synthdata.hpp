#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "idim/estimators.hpp"
#include "idim/geometry.hpp"

namespace idim {

enum class ManifoldFamily {
    kHypercubeUniform,
    kHypersphereSurface,
    kSwissRoll,
    kLinearSubspace,
    kHelix1D,
    kNonlinearEmbedHypercube,
};

const char* to_string(ManifoldFamily f);
ManifoldFamily family_from_string(const std::string& s);

// Recipe for a reproducible synthetic point cloud. Identical (spec, seed)
// pairs generate identical clouds on every platform (splitmix64 draws only).
struct ManifoldSpec {
    ManifoldFamily family = ManifoldFamily::kHypercubeUniform;
    int intrinsic_dim = 1;
    int ambient_dim = 1;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    BoundaryCondition boundary = BoundaryCondition::kHard;
    std::map<std::string, double> params;  // family-specific knobs

    double param_or(const std::string& name, double fallback) const;
};

// Families:
//   hypercube  - i.i.d. uniform [0,1)^D, zero-padded to the ambient dimension
//   sphere     - uniform on the unit sphere S^D in R^(D+1) via normalized
//                Gaussians, zero-padded
//   swissroll  - the standard 2-manifold in 3-space (t cos t, h, t sin t),
//                t in [1.5pi, 4.5pi], h in [0, 21)
//   subspace   - uniform [0,1)^D rotated into the ambient space by a seeded
//                random orthonormal basis (pairwise distances preserved)
//   helix      - closed 1-manifold in 3-space (cos t, sin t, a sin(w t));
//                params: winding w (default 8), amplitude a (default 1)
//   nonlinear  - [0,1)^D mapped by the smooth injective embedding
//                x -> (x, s sin(2 pi x_1), ..., s sin(2 pi x_D)) into R^(2D);
//                params: scale s (default 0.25)
PointCloud generate(const ManifoldSpec& spec);

// n i.i.d. draws from the analytic local-estimate density via inverse-cdf
// sampling (test plumbing for estimator checks).
LocalEstimateSet sample_fsa_locals(double D, int k, std::size_t n, std::uint64_t seed);

} // namespace idim
