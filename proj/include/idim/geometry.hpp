#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace idim {

enum class BoundaryCondition { kHard, kPeriodicUnit };

const char* to_string(BoundaryCondition bc);
BoundaryCondition boundary_from_string(const std::string& s);

// An immutable set of n points in ambient dimension dim. Point coordinates
// are stored row-major; a coordinate-major (SoA) mirror is kept for the
// batch distance kernels. Under kPeriodicUnit all coordinates must lie in
// [0,1) and distances wrap on the unit torus.
class PointCloud {
public:
    PointCloud(std::vector<double> row_major, std::size_t n, std::size_t dim,
               BoundaryCondition boundary);

    static PointCloud read_csv(const std::filesystem::path& path, BoundaryCondition boundary);
    void write_csv(const std::filesystem::path& path) const;

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    BoundaryCondition boundary() const { return boundary_; }

    std::span<const double> point(std::size_t i) const {
        return {rows_.data() + i * dim_, dim_};
    }
    const std::vector<double>& rows() const { return rows_; }
    // Coordinate-major mirror: soa()[j * size() + i] = coordinate j of point i.
    const double* soa() const { return cols_.data(); }

private:
    std::size_t n_;
    std::size_t dim_;
    BoundaryCondition boundary_;
    std::vector<double> rows_;
    std::vector<double> cols_;
};

// Euclidean distance between two points; under kPeriodicUnit each coordinate
// difference wraps to min(|delta|, 1 - |delta|) before the square-sum.
double distance(std::span<const double> a, std::span<const double> b, BoundaryCondition boundary);

// Ordered neighbor distances of one query point, the query itself excluded.
struct NeighborDistances {
    std::size_t query_index = 0;
    std::vector<double> distances;   // R_1 <= R_2 <= ... <= R_K
    bool has_zero_distance = false;  // duplicate point at zero distance was kept

    // Normalized ratios r_j = R_j / R_K for j = 1..K-1.
    std::vector<double> normalized_ratios() const;
};

// The K nearest neighbors of cloud[query_index], sorted ascending, distance
// ties broken by lower point index. Throws ArgumentError if K > n-1.
NeighborDistances knn(const PointCloud& cloud, std::size_t query_index, std::size_t K);

// knn for every point of the cloud; read-only queries run in parallel.
std::vector<NeighborDistances> knn_all(const PointCloud& cloud, std::size_t K, int threads = 1);

} // namespace idim
