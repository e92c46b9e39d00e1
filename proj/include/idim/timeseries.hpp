#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idim/estimators.hpp"
#include "idim/geometry.hpp"

namespace idim {

// Undirected channel adjacency (electrode topology). Grids use the von
// Neumann 4-neighborhood, strips a chain.
struct ChannelLayout {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    static ChannelLayout grid(std::size_t rows, std::size_t cols);
    static ChannelLayout chain(std::size_t n);
    // JSON: {"schema":"idim.layout/1","nodes":C,"edges":[[a,b],...]}
    static ChannelLayout read_json(const std::filesystem::path& path);

    std::vector<std::size_t> degrees() const;
    void validate() const;  // in-range, no self loops, no duplicate edges
};

struct MultiChannelSeries {
    std::vector<std::vector<double>> channels;  // C rows of T samples each
    double rate = 0.0;                          // samples per second
    std::optional<ChannelLayout> layout;

    std::size_t n_channels() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    void validate() const;

    // CSV: one row per time sample, one column per channel.
    static MultiChannelSeries read_csv(const std::filesystem::path& path, double rate);
    void write_csv(const std::filesystem::path& path) const;
};

// Per-channel zero mean, unit variance (population sd). A constant channel
// is an error naming the channel.
MultiChannelSeries standardize(const MultiChannelSeries& series);

// Current source density: applies the graph Laplacian L = degree - adjacency
// to every time sample. Isolated nodes get identically zero output; their
// indices are reported through *isolated when given.
MultiChannelSeries csd(const MultiChannelSeries& series,
                       std::vector<std::size_t>* isolated = nullptr);

struct SosSection {
    double b0, b1, b2;  // numerator, z^-1 form
    double a1, a2;      // denominator (a0 = 1)
};

// Butterworth bandpass of prototype order N (even), realized as N cascaded
// biquads via the bilinear transform with prewarped edges.
class ButterworthBandpass {
public:
    static ButterworthBandpass design(int order, double low_hz, double high_hz, double rate);

    int order() const { return order_; }
    const std::vector<SosSection>& sections() const { return sections_; }

    // Single-pass amplitude response of the analog prototype at the warped
    // frequency; exact for this design. The zero-phase (forward-backward)
    // amplitude gain is the square of this.
    double magnitude(double hz) const;
    // Same quantity evaluated from the realized sections (cross-check path).
    double section_magnitude(double hz) const;

    std::vector<double> filter(std::span<const double> x) const;    // single pass
    std::vector<double> filtfilt(std::span<const double> x) const;  // zero phase

private:
    int order_ = 0;
    double low_ = 0.0, high_ = 0.0, rate_ = 0.0;
    std::vector<SosSection> sections_;
};

// Zero-phase Butterworth bandpass applied per channel.
MultiChannelSeries bandpass(const MultiChannelSeries& series, double low_hz, double high_hz,
                            int order);

// Drops `seconds` from both ends of every channel (filter transient trim).
MultiChannelSeries trim(const MultiChannelSeries& series, double seconds);

struct EmbeddingConfig {
    int m = 1;               // embedding dimension
    int tau = 1;             // delay in samples
    int stride = 1;          // subsample factor
    int offset = 0;          // subsample phase, 0 <= offset < stride
    void validate() const;
};

// Delay-coordinate embedding of one channel: vectors (x_t, x_{t+tau}, ...,
// x_{t+(m-1)tau}), keeping every stride-th vector starting at offset.
PointCloud delay_embed(std::span<const double> channel, const EmbeddingConfig& config);

// Number of points delay_embed produces (ceil((V - offset) / stride) with
// V = T - (m-1) tau).
std::size_t delay_embed_count(std::size_t T, const EmbeddingConfig& config);

struct SpaceTimeSeparation {
    std::vector<int> dt;                       // 1..dt_max
    std::vector<double> percentiles;           // as given, e.g. {1, 25, 50}
    std::vector<std::vector<double>> contours; // [dt][percentile], NaN = missing
    int suggested_stride = 1;                  // first local max of the 50% contour
};

// Percentile contours of the distance between embedded vectors exactly dt
// apart, dt = 1..dt_max. Cells with fewer than 8 pairs are marked missing.
SpaceTimeSeparation space_time_separation(std::span<const double> channel,
                                          const EmbeddingConfig& config,
                                          std::span<const double> percentiles, int dt_max);

struct DimensionProfile {
    std::vector<int> m_values;
    // estimates[channel][m index]: estimator value averaged over the k range
    // and the stride subsets.
    std::vector<std::vector<double>> estimates;
    // First m whose increase over the previous one falls below the
    // saturation threshold; 0 when the profile never saturates.
    std::vector<int> saturation_m;
};

// Estimator value per channel per embedding dimension m, averaged over
// k in [k_lo, k_hi] and over the stride subsets of the embedding.
DimensionProfile dimension_profile(const MultiChannelSeries& series, std::span<const int> m_values,
                                   int k_lo, int k_hi, const EmbeddingConfig& config,
                                   Method method = Method::kMedianFsa,
                                   double saturation_threshold = 0.25, int threads = 1);

// Default embedding delay: a quarter period of the fastest band component.
int default_delay(double rate, double f_max_hz);

} // namespace idim
