#include "idim/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "idim/errors.hpp"
#include "idim/parallel.hpp"

namespace idim {

ChannelLayout ChannelLayout::grid(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1) throw ArgumentError("grid layout needs rows, cols >= 1");
    ChannelLayout layout;
    layout.n_nodes = rows * cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t id = r * cols + c;
            if (c + 1 < cols) layout.edges.emplace_back(id, id + 1);
            if (r + 1 < rows) layout.edges.emplace_back(id, id + cols);
        }
    }
    return layout;
}

ChannelLayout ChannelLayout::chain(std::size_t n) {
    if (n < 1) throw ArgumentError("chain layout needs n >= 1");
    ChannelLayout layout;
    layout.n_nodes = n;
    for (std::size_t i = 0; i + 1 < n; ++i) layout.edges.emplace_back(i, i + 1);
    return layout;
}

ChannelLayout ChannelLayout::read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open layout file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("layout file " + path.string() + ": invalid JSON: " + e.what());
    }
    if (j.value("schema", "") != "idim.layout/1") {
        throw DataError("layout file " + path.string() + ": unknown schema");
    }
    ChannelLayout layout;
    try {
        layout.n_nodes = j.at("nodes").get<std::size_t>();
        for (const auto& e : j.at("edges")) {
            layout.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("layout file " + path.string() + ": malformed field: " + e.what());
    }
    layout.validate();
    return layout;
}

void ChannelLayout::validate() const {
    std::vector<std::pair<std::size_t, std::size_t>> normalized;
    normalized.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a >= n_nodes || b >= n_nodes) throw ArgumentError("layout edge endpoint out of range");
        if (a == b) throw ArgumentError("layout contains a self loop");
        normalized.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(normalized.begin(), normalized.end());
    if (std::adjacent_find(normalized.begin(), normalized.end()) != normalized.end()) {
        throw ArgumentError("layout contains a duplicate edge");
    }
}

std::vector<std::size_t> ChannelLayout::degrees() const {
    std::vector<std::size_t> deg(n_nodes, 0);
    for (const auto& [a, b] : edges) {
        ++deg[a];
        ++deg[b];
    }
    return deg;
}

void MultiChannelSeries::validate() const {
    if (!(rate > 0.0)) throw ArgumentError("series rate must be > 0");
    if (channels.empty()) throw ArgumentError("series has no channels");
    const std::size_t T = channels.front().size();
    if (T == 0) throw ArgumentError("series has no samples");
    for (const auto& ch : channels) {
        if (ch.size() != T) throw ArgumentError("series channels have unequal lengths");
    }
    if (layout) {
        layout->validate();
        if (layout->n_nodes != channels.size()) {
            throw ArgumentError("layout node count does not match channel count");
        }
    }
}

MultiChannelSeries MultiChannelSeries::read_csv(const std::filesystem::path& path, double rate) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            const char* field_end = std::find(p, end, ',');
            double v;
            auto [ptr, ec] = std::from_chars(p, field_end, v);
            if (ec != std::errc()) {
                throw DataError("malformed number in " + path.string() + " row " +
                                std::to_string(rows.size() + 1));
            }
            (void)ptr;
            row.push_back(v);
            p = field_end < end ? field_end + 1 : end;
        }
        if (width == 0) {
            width = row.size();
        } else if (row.size() != width) {
            throw DataError("ragged CSV in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("empty series file: " + path.string());
    MultiChannelSeries series;
    series.rate = rate;
    series.channels.assign(width, std::vector<double>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < width; ++c) series.channels[c][t] = rows[t][c];
    }
    series.validate();
    return series;
}

void MultiChannelSeries::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write series file: " + path.string());
    char buf[32];
    const std::size_t T = length(), C = n_channels();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", channels[c][t]);
            out << buf << (c + 1 < C ? "," : "\n");
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

MultiChannelSeries standardize(const MultiChannelSeries& series) {
    series.validate();
    MultiChannelSeries out = series;
    const double T = static_cast<double>(series.length());
    for (std::size_t c = 0; c < out.channels.size(); ++c) {
        auto& ch = out.channels[c];
        double mean = 0.0;
        for (double v : ch) mean += v;
        mean /= T;
        double var = 0.0;
        for (double v : ch) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / T);
        if (sd < 1e-13 * std::max(1.0, std::fabs(mean))) {
            throw ArgumentError("zero variance in channel " + std::to_string(c));
        }
        for (double& v : ch) v = (v - mean) / sd;
    }
    return out;
}

MultiChannelSeries csd(const MultiChannelSeries& series, std::vector<std::size_t>* isolated) {
    series.validate();
    if (!series.layout) throw ArgumentError("csd requires a channel layout");
    const ChannelLayout& layout = *series.layout;
    const auto deg = layout.degrees();
    if (isolated) {
        isolated->clear();
        for (std::size_t c = 0; c < deg.size(); ++c) {
            if (deg[c] == 0) isolated->push_back(c);
        }
    }
    MultiChannelSeries out = series;
    const std::size_t T = series.length();
    for (std::size_t c = 0; c < series.n_channels(); ++c) {
        auto& dst = out.channels[c];
        const auto& src = series.channels[c];
        const double d = static_cast<double>(deg[c]);
        for (std::size_t t = 0; t < T; ++t) dst[t] = d * src[t];
    }
    for (const auto& [a, b] : layout.edges) {
        const auto& xa = series.channels[a];
        const auto& xb = series.channels[b];
        auto& ya = out.channels[a];
        auto& yb = out.channels[b];
        for (std::size_t t = 0; t < T; ++t) {
            ya[t] -= xb[t];
            yb[t] -= xa[t];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Butterworth bandpass design: analog lowpass prototype -> bandpass transform
// -> bilinear z-transform, assembled as conjugate-paired biquads.

ButterworthBandpass ButterworthBandpass::design(int order, double low_hz, double high_hz,
                                                double rate) {
    if (order < 2 || order % 2 != 0) {
        throw ArgumentError("butterworth order must be even and >= 2");
    }
    if (!(rate > 0.0) || !(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < rate / 2.0)) {
        throw ArgumentError("butterworth band must satisfy 0 < low < high < rate/2");
    }
    using cplx = std::complex<double>;
    const double wl = std::tan(std::numbers::pi * low_hz / rate);
    const double wh = std::tan(std::numbers::pi * high_hz / rate);
    const double w0_sq = wl * wh;
    const double bw = wh - wl;

    // Bandpass poles in s, then mapped through z = (1+s)/(1-s).
    std::vector<cplx> zpoles;
    zpoles.reserve(2 * order);
    for (int m = 0; m < order; ++m) {
        const double theta = std::numbers::pi * (2 * m + order + 1) / (2.0 * order);
        const cplx proto{std::cos(theta), std::sin(theta)};
        const cplx pb = proto * bw;
        const cplx disc = std::sqrt(pb * pb - 4.0 * w0_sq);
        for (const cplx s : {(pb + disc) * 0.5, (pb - disc) * 0.5}) {
            zpoles.push_back((1.0 + s) / (1.0 - s));
        }
    }

    // Conjugate pairing into biquad sections.
    std::vector<cplx> upper, real_poles;
    for (const cplx& z : zpoles) {
        if (std::fabs(z.imag()) < 1e-12 * std::max(1.0, std::fabs(z.real()))) {
            real_poles.push_back(z);
        } else if (z.imag() > 0.0) {
            upper.push_back(z);
        }
    }
    std::sort(upper.begin(), upper.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    std::sort(real_poles.begin(), real_poles.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    if (real_poles.size() % 2 != 0 ||
        upper.size() + real_poles.size() / 2 != static_cast<std::size_t>(order)) {
        throw EstimationError("butterworth design: pole pairing failed");
    }

    ButterworthBandpass filt;
    filt.order_ = order;
    filt.low_ = low_hz;
    filt.high_ = high_hz;
    filt.rate_ = rate;
    for (const cplx& z : upper) {
        SosSection s{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)};
        filt.sections_.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
        const double r1 = real_poles[i].real(), r2 = real_poles[i + 1].real();
        SosSection s{1.0, 0.0, -1.0, -(r1 + r2), r1 * r2};
        filt.sections_.push_back(s);
    }

    // Normalize to unit gain at the band center (geometric mean of the
    // prewarped edges), splitting the gain evenly across sections.
    const double wc = 2.0 * std::atan(std::sqrt(w0_sq));
    const cplx zi = std::exp(cplx{0.0, -wc});  // z^-1 on the unit circle
    double raw = 1.0;
    for (const auto& s : filt.sections_) {
        const cplx num = s.b0 + s.b1 * zi + s.b2 * zi * zi;
        const cplx den = 1.0 + s.a1 * zi + s.a2 * zi * zi;
        raw *= std::abs(num / den);
    }
    const double per_section = std::pow(1.0 / raw, 1.0 / filt.sections_.size());
    for (auto& s : filt.sections_) {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    return filt;
}

double ButterworthBandpass::magnitude(double hz) const {
    if (hz <= 0.0 || hz >= rate_ / 2.0) return 0.0;
    const double w = std::tan(std::numbers::pi * hz / rate_);
    const double wl = std::tan(std::numbers::pi * low_ / rate_);
    const double wh = std::tan(std::numbers::pi * high_ / rate_);
    const double x = (w * w - wl * wh) / (w * (wh - wl));
    const double x2n = std::pow(x * x, order_);
    if (!std::isfinite(x2n)) return 0.0;
    return 1.0 / std::sqrt(1.0 + x2n);
}

double ButterworthBandpass::section_magnitude(double hz) const {
    using cplx = std::complex<double>;
    const double w = 2.0 * std::numbers::pi * hz / rate_;
    const cplx zi = std::exp(cplx{0.0, -w});
    double mag = 1.0;
    for (const auto& s : sections_) {
        const cplx num = s.b0 + s.b1 * zi + s.b2 * zi * zi;
        const cplx den = 1.0 + s.a1 * zi + s.a2 * zi * zi;
        mag *= std::abs(num / den);
    }
    return mag;
}

std::vector<double> ButterworthBandpass::filter(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    for (const auto& s : sections_) {
        double w1 = 0.0, w2 = 0.0;  // transposed direct form II state
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + w1;
            w1 = s.b1 * in + w2 - s.a1 * out;
            w2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> ButterworthBandpass::filtfilt(std::span<const double> x) const {
    std::vector<double> y = filter(x);
    std::reverse(y.begin(), y.end());
    y = filter(y);
    std::reverse(y.begin(), y.end());
    return y;
}

MultiChannelSeries bandpass(const MultiChannelSeries& series, double low_hz, double high_hz,
                            int order) {
    series.validate();
    const auto filt = ButterworthBandpass::design(order, low_hz, high_hz, series.rate);
    MultiChannelSeries out = series;
    for (auto& ch : out.channels) ch = filt.filtfilt(ch);
    return out;
}

MultiChannelSeries trim(const MultiChannelSeries& series, double seconds) {
    series.validate();
    if (seconds < 0.0) throw ArgumentError("trim: seconds must be >= 0");
    const auto cut = static_cast<std::size_t>(std::llround(seconds * series.rate));
    if (2 * cut >= series.length()) {
        throw ArgumentError("trim: nothing left after removing " + std::to_string(cut) +
                            " samples from each end");
    }
    MultiChannelSeries out = series;
    for (auto& ch : out.channels) {
        ch.assign(ch.begin() + cut, ch.end() - cut);
    }
    return out;
}

void EmbeddingConfig::validate() const {
    if (m < 1) throw ArgumentError("embedding dimension m must be >= 1");
    if (tau < 1) throw ArgumentError("embedding delay tau must be >= 1");
    if (stride < 1) throw ArgumentError("subsample stride must be >= 1");
    if (offset < 0 || offset >= stride) throw ArgumentError("offset must satisfy 0 <= offset < stride");
}

std::size_t delay_embed_count(std::size_t T, const EmbeddingConfig& config) {
    config.validate();
    const std::size_t span = static_cast<std::size_t>(config.m - 1) * config.tau;
    if (T < span + 1) return 0;
    const std::size_t V = T - span;
    if (static_cast<std::size_t>(config.offset) >= V) return 0;
    return (V - config.offset + config.stride - 1) / config.stride;
}

PointCloud delay_embed(std::span<const double> channel, const EmbeddingConfig& config) {
    config.validate();
    const std::size_t T = channel.size();
    const std::size_t span = static_cast<std::size_t>(config.m - 1) * config.tau;
    if (T < span + 1) {
        throw ArgumentError("insufficient length: need T >= (m-1)*tau + 1, got T=" +
                            std::to_string(T));
    }
    const std::size_t count = delay_embed_count(T, config);
    if (count == 0) throw ArgumentError("insufficient length: no vectors at this offset");
    std::vector<double> rows(count * config.m);
    std::size_t row = 0;
    const std::size_t V = T - span;
    for (std::size_t t = config.offset; t < V; t += config.stride, ++row) {
        for (int j = 0; j < config.m; ++j) {
            rows[row * config.m + j] = channel[t + static_cast<std::size_t>(j) * config.tau];
        }
    }
    return PointCloud(std::move(rows), count, config.m, BoundaryCondition::kHard);
}

namespace {

double percentile_interp(std::vector<double>& sorted_values, double p) {
    const std::size_t n = sorted_values.size();
    const double idx = p / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(idx));
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

} // namespace

SpaceTimeSeparation space_time_separation(std::span<const double> channel,
                                          const EmbeddingConfig& config,
                                          std::span<const double> percentiles, int dt_max) {
    if (dt_max < 1) throw ArgumentError("space_time_separation: dt_max must be >= 1");
    if (percentiles.empty()) throw ArgumentError("space_time_separation: no percentiles");
    for (double p : percentiles) {
        if (!(p >= 0.0) || !(p <= 100.0)) {
            throw ArgumentError("space_time_separation: percentiles must lie in [0,100]");
        }
    }
    EmbeddingConfig full = config;
    full.stride = 1;
    full.offset = 0;
    full.validate();
    const std::size_t span = static_cast<std::size_t>(full.m - 1) * full.tau;
    if (channel.size() < span + 1 + static_cast<std::size_t>(dt_max)) {
        throw ArgumentError("space_time_separation: series too short for dt_max");
    }
    const std::size_t V = channel.size() - span;

    SpaceTimeSeparation out;
    out.percentiles.assign(percentiles.begin(), percentiles.end());
    std::vector<double> dist;
    for (int dt = 1; dt <= dt_max; ++dt) {
        out.dt.push_back(dt);
        std::vector<double> row(percentiles.size(), std::numeric_limits<double>::quiet_NaN());
        const std::size_t pairs = V > static_cast<std::size_t>(dt) ? V - dt : 0;
        if (pairs >= 8) {
            dist.resize(pairs);
            for (std::size_t t = 0; t < pairs; ++t) {
                double acc = 0.0;
                for (int j = 0; j < full.m; ++j) {
                    const double d = channel[t + static_cast<std::size_t>(j) * full.tau + dt] -
                                     channel[t + static_cast<std::size_t>(j) * full.tau];
                    acc += d * d;
                }
                dist[t] = std::sqrt(acc);
            }
            std::sort(dist.begin(), dist.end());
            for (std::size_t p = 0; p < percentiles.size(); ++p) {
                row[p] = percentile_interp(dist, percentiles[p]);
            }
        }
        out.contours.push_back(std::move(row));
    }

    // First local maximum of the contour closest to the 50% percentile,
    // three-point rule; flat contours fall back to stride 1.
    std::size_t p50 = 0;
    for (std::size_t p = 1; p < out.percentiles.size(); ++p) {
        if (std::fabs(out.percentiles[p] - 50.0) < std::fabs(out.percentiles[p50] - 50.0)) p50 = p;
    }
    out.suggested_stride = 1;
    for (std::size_t i = 1; i + 1 < out.contours.size(); ++i) {
        const double prev = out.contours[i - 1][p50];
        const double cur = out.contours[i][p50];
        const double next = out.contours[i + 1][p50];
        if (std::isnan(prev) || std::isnan(cur) || std::isnan(next)) continue;
        if (cur > prev && cur > next) {
            out.suggested_stride = out.dt[i];
            break;
        }
    }
    return out;
}

DimensionProfile dimension_profile(const MultiChannelSeries& series, std::span<const int> m_values,
                                   int k_lo, int k_hi, const EmbeddingConfig& config,
                                   Method method, double saturation_threshold, int threads) {
    series.validate();
    if (m_values.empty()) throw ArgumentError("dimension_profile: empty m range");
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (m_values[i] < 1 || (i > 0 && m_values[i] <= m_values[i - 1])) {
            throw ArgumentError("dimension_profile: m values must be positive and increasing");
        }
    }
    if (k_lo < 1 || k_hi < k_lo) throw ArgumentError("dimension_profile: bad k range");
    if (method != Method::kMedianFsa && method != Method::kMeanFsa &&
        method != Method::kModeFsa) {
        throw ArgumentError("dimension_profile: estimator must be an FSA aggregation");
    }

    const std::size_t C = series.n_channels();
    DimensionProfile profile;
    profile.m_values.assign(m_values.begin(), m_values.end());
    profile.estimates.assign(C, std::vector<double>(m_values.size(), 0.0));
    profile.saturation_m.assign(C, 0);

    const std::size_t cells = C * m_values.size();
    parallel_for(cells, threads, [&](std::size_t cell) {
        const std::size_t c = cell / m_values.size();
        const std::size_t mi = cell % m_values.size();
        EmbeddingConfig cfg = config;
        cfg.m = m_values[mi];
        double acc = 0.0;
        std::size_t n_vals = 0;
        for (int off = 0; off < cfg.stride; ++off) {
            cfg.offset = off;
            const PointCloud cloud = delay_embed(series.channels[c], cfg);
            if (cloud.size() < static_cast<std::size_t>(2 * k_hi + 1)) {
                throw ArgumentError("dimension_profile: subset too small for k=" +
                                    std::to_string(k_hi));
            }
            const auto neighbors = knn_all(cloud, static_cast<std::size_t>(2 * k_hi));
            for (int k = k_lo; k <= k_hi; ++k) {
                const auto locals = local_estimates_from_knn(neighbors, k);
                const GlobalEstimate est = method == Method::kMedianFsa ? aggregate_median(locals)
                                           : method == Method::kMeanFsa ? aggregate_mean(locals)
                                                                        : aggregate_mode(locals);
                acc += est.value;
                ++n_vals;
            }
        }
        profile.estimates[c][mi] = acc / static_cast<double>(n_vals);
    });

    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t mi = 1; mi < m_values.size(); ++mi) {
            const double slope = (profile.estimates[c][mi] - profile.estimates[c][mi - 1]) /
                                 static_cast<double>(m_values[mi] - m_values[mi - 1]);
            if (slope < saturation_threshold) {
                profile.saturation_m[c] = m_values[mi];
                break;
            }
        }
    }
    return profile;
}

int default_delay(double rate, double f_max_hz) {
    if (!(rate > 0.0) || !(f_max_hz > 0.0)) throw ArgumentError("default_delay: bad arguments");
    const int tau = static_cast<int>(std::llround(rate / (4.0 * f_max_hz)));
    return tau < 1 ? 1 : tau;
}

} // namespace idim
