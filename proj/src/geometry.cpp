#include "idim/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "idim/errors.hpp"
#include "idim/kernels.hpp"
#include "idim/parallel.hpp"

namespace idim {

const char* to_string(BoundaryCondition bc) {
    return bc == BoundaryCondition::kHard ? "hard" : "periodic";
}

BoundaryCondition boundary_from_string(const std::string& s) {
    if (s == "hard") return BoundaryCondition::kHard;
    if (s == "periodic") return BoundaryCondition::kPeriodicUnit;
    throw ArgumentError("unknown boundary condition '" + s + "' (expected hard|periodic)");
}

int default_threads() {
    if (const char* v = std::getenv("IDIM_THREADS")) {
        const int t = std::atoi(v);
        if (t >= 1) return t;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

PointCloud::PointCloud(std::vector<double> row_major, std::size_t n, std::size_t dim,
                       BoundaryCondition boundary)
    : n_(n), dim_(dim), boundary_(boundary), rows_(std::move(row_major)) {
    if (n_ < 1 || dim_ < 1) throw ArgumentError("point cloud needs n >= 1 and dim >= 1");
    if (rows_.size() != n_ * dim_) throw ArgumentError("coordinate buffer size mismatch");
    for (double v : rows_) {
        if (!std::isfinite(v)) throw ArgumentError("point cloud contains non-finite coordinate");
    }
    if (boundary_ == BoundaryCondition::kPeriodicUnit) {
        for (double v : rows_) {
            if (v < 0.0 || v >= 1.0) {
                throw ArgumentError("periodic boundary requires all coordinates in [0,1)");
            }
        }
    }
    cols_.resize(rows_.size());
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            cols_[j * n_ + i] = rows_[i * dim_ + j];
        }
    }
}

PointCloud PointCloud::read_csv(const std::filesystem::path& path, BoundaryCondition boundary) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open point cloud file: " + path.string());
    std::vector<double> values;
    std::size_t n = 0, dim = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t row_dim = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            const char* field_end = std::find(p, end, ',');
            double v;
            auto [ptr, ec] = std::from_chars(p, field_end, v);
            if (ec != std::errc()) {
                throw DataError("malformed number in " + path.string() + " row " +
                                std::to_string(n + 1));
            }
            (void)ptr;
            values.push_back(v);
            ++row_dim;
            p = field_end < end ? field_end + 1 : end;
        }
        if (dim == 0) {
            dim = row_dim;
        } else if (row_dim != dim) {
            throw DataError("ragged CSV in " + path.string() + ": row " + std::to_string(n + 1) +
                            " has " + std::to_string(row_dim) + " fields, expected " +
                            std::to_string(dim));
        }
        ++n;
    }
    if (n == 0) throw DataError("empty point cloud file: " + path.string());
    return PointCloud(std::move(values), n, dim, boundary);
}

void PointCloud::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write point cloud file: " + path.string());
    char buf[32];
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", rows_[i * dim_ + j]);
            out << buf << (j + 1 < dim_ ? "," : "\n");
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

double distance(std::span<const double> a, std::span<const double> b, BoundaryCondition boundary) {
    if (a.size() != b.size()) throw ArgumentError("distance: dimension mismatch");
    double acc = 0.0;
    if (boundary == BoundaryCondition::kHard) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double d = a[j] - b[j];
            acc += d * d;
        }
    } else {
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double t = std::fabs(a[j] - b[j]);
            const double w = 1.0 - t;
            const double m = t < w ? t : w;
            acc += m * m;
        }
    }
    return std::sqrt(acc);
}

std::vector<double> NeighborDistances::normalized_ratios() const {
    std::vector<double> r;
    if (distances.empty()) return r;
    const double rK = distances.back();
    r.reserve(distances.size() - 1);
    for (std::size_t j = 0; j + 1 < distances.size(); ++j) {
        r.push_back(distances[j] / rK);
    }
    return r;
}

namespace {

// Selects the K nearest from a buffer of squared distances; the query entry
// is masked out by index. Ties broken by lower point index.
NeighborDistances select_k(const double* sq, std::size_t n, std::size_t query, std::size_t K,
                           std::vector<std::pair<double, std::size_t>>& work) {
    work.clear();
    if (K <= 24) {
        // Small-K path: one pass with a bounded insertion buffer. Most
        // candidates fail the worst-so-far check, so this stays close to one
        // comparison per point.
        work.resize(K, {std::numeric_limits<double>::infinity(), n});
        for (std::size_t i = 0; i < n; ++i) {
            if (i == query) continue;
            const double d = sq[i];
            if (d > work[K - 1].first || (d == work[K - 1].first && work[K - 1].second < i)) {
                continue;
            }
            std::size_t pos = K - 1;
            while (pos > 0 &&
                   (d < work[pos - 1].first || (d == work[pos - 1].first && i < work[pos - 1].second))) {
                work[pos] = work[pos - 1];
                --pos;
            }
            work[pos] = {d, i};
        }
    } else {
        work.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == query) continue;
            work.emplace_back(sq[i], i);
        }
        std::nth_element(work.begin(), work.begin() + (K - 1), work.end());
        std::sort(work.begin(), work.begin() + K);
    }

    NeighborDistances out;
    out.query_index = query;
    out.distances.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
        out.distances[j] = std::sqrt(work[j].first);
        if (work[j].first == 0.0) out.has_zero_distance = true;
    }
    return out;
}

} // namespace

NeighborDistances knn(const PointCloud& cloud, std::size_t query_index, std::size_t K) {
    const std::size_t n = cloud.size();
    if (query_index >= n) throw ArgumentError("knn: query index out of range");
    if (K < 1 || K > n - 1) {
        throw ArgumentError("insufficient sample: K=" + std::to_string(K) + " needs n >= K+1, n=" +
                            std::to_string(n));
    }
    const auto kernel = cloud.boundary() == BoundaryCondition::kHard
                            ? kernels::select_hard()
                            : kernels::select_periodic();
    std::vector<double> sq(n);
    std::vector<double> q(cloud.point(query_index).begin(), cloud.point(query_index).end());
    kernel(cloud.soa(), n, cloud.dim(), q.data(), sq.data());
    std::vector<std::pair<double, std::size_t>> work;
    return select_k(sq.data(), n, query_index, K, work);
}

std::vector<NeighborDistances> knn_all(const PointCloud& cloud, std::size_t K, int threads) {
    const std::size_t n = cloud.size();
    if (K < 1 || K > n - 1) {
        throw ArgumentError("insufficient sample: K=" + std::to_string(K) + " needs n >= K+1, n=" +
                            std::to_string(n));
    }
    const auto kernel = cloud.boundary() == BoundaryCondition::kHard
                            ? kernels::select_hard()
                            : kernels::select_periodic();
    std::vector<NeighborDistances> out(n);

    struct Workspace {
        std::vector<double> sq;
        std::vector<double> q;
        std::vector<std::pair<double, std::size_t>> pairs;
    };
    thread_local Workspace ws;

    parallel_for(n, threads, [&](std::size_t i) {
        ws.sq.resize(n);
        ws.q.assign(cloud.point(i).begin(), cloud.point(i).end());
        kernel(cloud.soa(), n, cloud.dim(), ws.q.data(), ws.sq.data());
        out[i] = select_k(ws.sq.data(), n, i, K, ws.pairs);
    });
    return out;
}

} // namespace idim
