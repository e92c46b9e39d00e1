#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "idim/errors.hpp"
#include "idim/rng.hpp"
#include "idim/timeseries.hpp"

using namespace idim;

namespace {

std::vector<double> sine(double hz, double rate, std::size_t n, double amp = 1.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(t) / rate);
    }
    return x;
}

// Amplitude of a sinusoid at a known frequency via quadrature projection
// over the central half of the signal.
double measure_amplitude(std::span<const double> y, double hz, double rate) {
    const std::size_t lo = y.size() / 4, hi = 3 * y.size() / 4;
    double c = 0.0, s = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
        const double phase = 2.0 * std::numbers::pi * hz * static_cast<double>(t) / rate;
        c += y[t] * std::sin(phase);
        s += y[t] * std::cos(phase);
    }
    const double norm = 2.0 / static_cast<double>(hi - lo);
    return std::hypot(c * norm, s * norm);
}

// Classic chaotic flow with an attractor dimension just above two; RK4 at a
// fixed step, transient discarded. Deterministic ground truth for the
// saturation checks.
std::vector<double> lorenz_x(std::size_t n, std::size_t discard) {
    std::array<double, 3> y{1.0, 1.0, 1.0};
    auto deriv = [](const std::array<double, 3>& v) {
        return std::array<double, 3>{10.0 * (v[1] - v[0]), v[0] * (28.0 - v[2]) - v[1],
                                     v[0] * v[1] - 8.0 / 3.0 * v[2]};
    };
    const double h = 0.01;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n + discard; ++i) {
        const auto k1 = deriv(y);
        std::array<double, 3> t2;
        for (int j = 0; j < 3; ++j) t2[j] = y[j] + 0.5 * h * k1[j];
        const auto k2 = deriv(t2);
        for (int j = 0; j < 3; ++j) t2[j] = y[j] + 0.5 * h * k2[j];
        const auto k3 = deriv(t2);
        for (int j = 0; j < 3; ++j) t2[j] = y[j] + h * k3[j];
        const auto k4 = deriv(t2);
        for (int j = 0; j < 3; ++j) {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (i >= discard) out.push_back(y[0]);
    }
    return out;
}

MultiChannelSeries one_channel(std::vector<double> x, double rate) {
    MultiChannelSeries s;
    s.rate = rate;
    s.channels.push_back(std::move(x));
    return s;
}

} // namespace

TEST_CASE("standardize: closed form, idempotence, zero-variance error") {
    MultiChannelSeries s;
    s.rate = 1.0;
    s.channels = {{1.0, 2.0, 3.0}};
    const auto z = standardize(s);
    const double e = std::sqrt(1.5);  // population sd of {1,2,3} is sqrt(2/3)
    CHECK(z.channels[0][0] == doctest::Approx(-e).epsilon(1e-12));
    CHECK(z.channels[0][1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z.channels[0][2] == doctest::Approx(e).epsilon(1e-12));
    CHECK(z.channels[0][2] == doctest::Approx(1.22474487).epsilon(1e-8));

    const auto zz = standardize(z);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(zz.channels[0][t] == doctest::Approx(z.channels[0][t]).epsilon(1e-12));
    }

    SplitMix64 rng(3);
    MultiChannelSeries r;
    r.rate = 100.0;
    r.channels.assign(3, std::vector<double>(512));
    for (auto& ch : r.channels) {
        for (auto& v : ch) v = 5.0 * rng.next_double() - 1.0;
    }
    const auto zr = standardize(r);
    for (const auto& ch : zr.channels) {
        double mean = 0.0, var = 0.0;
        for (double v : ch) mean += v;
        mean /= ch.size();
        for (double v : ch) var += (v - mean) * (v - mean);
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(std::fabs(std::sqrt(var / ch.size()) - 1.0) < 1e-12);
    }

    MultiChannelSeries flat;
    flat.rate = 1.0;
    flat.channels = {{1.0, 1.0, 1.0}, {0.1, 0.1, 0.1}};
    CHECK_THROWS_WITH_AS(standardize(flat), "zero variance in channel 0", ArgumentError);
}

TEST_CASE("layouts: construction and validation") {
    const auto grid = ChannelLayout::grid(2, 3);
    CHECK(grid.n_nodes == 6);
    const auto deg = grid.degrees();
    CHECK(deg[0] == 2);  // corner of the 4-neighborhood
    CHECK(deg[1] == 3);
    CHECK(deg[4] == 3);
    // Row sums of L = degree - adjacency vanish by construction: the total
    // degree equals twice the edge count.
    std::size_t total = 0;
    for (auto d : deg) total += d;
    CHECK(total == 2 * grid.edges.size());

    const auto chain = ChannelLayout::chain(4);
    CHECK(chain.edges.size() == 3);

    ChannelLayout bad;
    bad.n_nodes = 2;
    bad.edges = {{0, 0}};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.edges = {{0, 1}, {1, 0}};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.edges = {{0, 5}};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("csd applies the graph laplacian") {
    MultiChannelSeries s;
    s.rate = 10.0;
    s.layout = ChannelLayout::chain(4);
    // Constant across channels: the Laplacian must vanish.
    s.channels.assign(4, std::vector<double>{2.5, -1.0, 0.5});
    auto out = csd(s);
    for (const auto& ch : out.channels) {
        for (double v : ch) CHECK(v == 0.0);
    }

    // Interior chain node: 2 x_i - x_{i-1} - x_{i+1}.
    s.channels = {{1.0}, {5.0}, {2.0}, {0.0}};
    out = csd(s);
    CHECK(out.channels[1][0] == 2.0 * 5.0 - 1.0 - 2.0);
    CHECK(out.channels[2][0] == 2.0 * 2.0 - 5.0 - 0.0);
    CHECK(out.channels[0][0] == 1.0 - 5.0);

    // Isolated node: zero output plus a warning entry.
    ChannelLayout iso;
    iso.n_nodes = 3;
    iso.edges = {{0, 1}};
    s.layout = iso;
    s.channels = {{1.0}, {2.0}, {9.0}};
    std::vector<std::size_t> isolated;
    out = csd(s, &isolated);
    REQUIRE(isolated.size() == 1);
    CHECK(isolated[0] == 2);
    CHECK(out.channels[2][0] == 0.0);

    s.layout.reset();
    CHECK_THROWS_AS(csd(s), ArgumentError);
}

TEST_CASE("butterworth design matches an independent filter-design oracle") {
    const auto filt = ButterworthBandpass::design(4, 1.0, 30.0, 2048.0);
    CHECK(filt.sections().size() == 4);

    // |H| at probe frequencies, frozen from an independent design tool.
    const std::array<std::pair<double, double>, 5> reference{{{0.5, 0.056346185922458},
                                                              {10.0, 0.999994278877749},
                                                              {29.0, 0.756461658623438},
                                                              {100.0, 0.006954897362404},
                                                              {200.0, 0.000391049204387}}};
    for (const auto& [hz, mag] : reference) {
        CHECK(filt.magnitude(hz) == doctest::Approx(mag).epsilon(1e-6));
        CHECK(filt.section_magnitude(hz) == doctest::Approx(mag).epsilon(1e-6));
    }
    // The analytic response and the realized sections agree on a dense grid.
    for (double hz = 0.25; hz < 1000.0; hz *= 1.4) {
        CHECK(filt.section_magnitude(hz) == doctest::Approx(filt.magnitude(hz)).epsilon(1e-9));
    }

    CHECK_THROWS_AS(ButterworthBandpass::design(3, 1.0, 30.0, 2048.0), ArgumentError);
    CHECK_THROWS_AS(ButterworthBandpass::design(4, 30.0, 1.0, 2048.0), ArgumentError);
    CHECK_THROWS_AS(ButterworthBandpass::design(4, 1.0, 2000.0, 2048.0), ArgumentError);
}

TEST_CASE("zero-phase bandpass: DC rejection and passband gain") {
    const double rate = 2048.0;
    const auto filt = ButterworthBandpass::design(4, 1.0, 30.0, rate);

    // DC input dies once the edge transient has decayed; the slowest pole
    // sits at the 1 Hz edge, so give it a few seconds.
    std::vector<double> dc(static_cast<std::size_t>(rate) * 16, 1.0);
    const auto dc_out = filt.filtfilt(dc);
    double worst = 0.0;
    for (std::size_t t = dc_out.size() / 4; t < 3 * dc_out.size() / 4; ++t) {
        worst = std::max(worst, std::fabs(dc_out[t]));
    }
    CHECK(worst < 1e-3);

    // Passband and stopband sinusoids against the analytic zero-phase gain.
    for (double hz : {0.5, 10.0, 29.0, 100.0, 200.0}) {
        const auto y = filt.filtfilt(sine(hz, rate, static_cast<std::size_t>(rate) * 16));
        const double measured = measure_amplitude(y, hz, rate);
        const double expected = filt.magnitude(hz) * filt.magnitude(hz);
        CHECK(std::fabs(measured - expected) < 0.02);
    }
    {
        const auto y = filt.filtfilt(sine(10.0, rate, static_cast<std::size_t>(rate) * 16));
        const double measured = measure_amplitude(y, 10.0, rate);
        CHECK(measured >= 0.95);
        CHECK(measured <= 1.0 + 1e-6);
    }
    {
        const auto y = filt.filtfilt(sine(200.0, rate, static_cast<std::size_t>(rate) * 16));
        CHECK(measure_amplitude(y, 200.0, rate) < 0.02);
    }
}

TEST_CASE("bandpass filtering is linear") {
    const double rate = 256.0;
    SplitMix64 rng(11);
    std::vector<double> x(2048), y(2048), mix(2048);
    for (std::size_t t = 0; t < x.size(); ++t) {
        x[t] = rng.next_gauss();
        y[t] = rng.next_gauss();
        mix[t] = 2.0 * x[t] - 0.5 * y[t];
    }
    const auto filt = ButterworthBandpass::design(4, 1.0, 30.0, rate);
    const auto fx = filt.filtfilt(x);
    const auto fy = filt.filtfilt(y);
    const auto fmix = filt.filtfilt(mix);
    for (std::size_t t = 0; t < x.size(); ++t) {
        CHECK(fmix[t] == doctest::Approx(2.0 * fx[t] - 0.5 * fy[t]).epsilon(1e-9));
    }
}

TEST_CASE("delay embedding: examples and the partition property") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6};
    EmbeddingConfig cfg;
    cfg.m = 3;
    cfg.tau = 2;
    const auto cloud = delay_embed(x, cfg);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.point(0)[0] == 1.0);
    CHECK(cloud.point(0)[1] == 3.0);
    CHECK(cloud.point(0)[2] == 5.0);
    CHECK(cloud.point(1)[0] == 2.0);
    CHECK(cloud.point(1)[1] == 4.0);
    CHECK(cloud.point(1)[2] == 6.0);

    // m = 1 is the identity embedding.
    EmbeddingConfig ident;
    const auto id_cloud = delay_embed(x, ident);
    REQUIRE(id_cloud.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(id_cloud.point(i)[0] == x[i]);

    EmbeddingConfig too_short;
    too_short.m = 4;
    too_short.tau = 2;
    CHECK_THROWS_AS(delay_embed(x, too_short), ArgumentError);

    // Stride subsets partition the vector set: disjoint, exhaustive, and the
    // count formula holds across a random sweep.
    SplitMix64 rng(417);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t T = 3 + rng.next_u64() % 60;
        EmbeddingConfig c;
        c.m = 1 + static_cast<int>(rng.next_u64() % 4);
        c.tau = 1 + static_cast<int>(rng.next_u64() % 4);
        c.stride = 1 + static_cast<int>(rng.next_u64() % 5);
        const std::size_t span = static_cast<std::size_t>(c.m - 1) * c.tau;
        if (T < span + 1) continue;
        const std::size_t V = T - span;
        std::size_t total = 0;
        for (c.offset = 0; c.offset < c.stride; ++c.offset) {
            const std::size_t count = delay_embed_count(T, c);
            CHECK(count == (V >= static_cast<std::size_t>(c.offset)
                                ? (V - c.offset + c.stride - 1) / c.stride
                                : 0));
            total += count;
        }
        CHECK(total == V);
    }
}

TEST_CASE("space-time separation contours") {
    const double rate = 100.0;
    EmbeddingConfig cfg;
    cfg.m = 2;
    cfg.tau = 5;
    const std::vector<double> pct{1.0, 25.0, 50.0};

    // White noise: flat contours, stride suggestion stays at 1.
    SplitMix64 rng(7);
    std::vector<double> noise(4000);
    for (auto& v : noise) v = rng.next_gauss();
    const auto flat = space_time_separation(noise, cfg, pct, 40);
    REQUIRE(flat.contours.size() == 40);
    double lo = 1e300, hi = 0.0;
    for (const auto& row : flat.contours) {
        REQUIRE(row.size() == 3);
        CHECK(row[0] <= row[1]);
        CHECK(row[1] <= row[2]);
        lo = std::min(lo, row[2]);
        hi = std::max(hi, row[2]);
    }
    CHECK((hi - lo) / hi < 0.1);

    // Pure sinusoid of period P: the 50% contour oscillates with period P,
    // first local maximum near P/2.
    const double period = 20.0;
    const auto wave = sine(rate / period, rate, 4000);
    const auto osc = space_time_separation(wave, cfg, pct, 50);
    CHECK(osc.suggested_stride > period * 0.3);
    CHECK(osc.suggested_stride < period * 0.7);
    // One full period apart the vectors coincide: contour minimum near P.
    const int p_idx = static_cast<int>(period) - 1;
    CHECK(osc.contours[p_idx][2] < 0.1 * osc.contours[p_idx / 2][2]);

    CHECK_THROWS_AS(space_time_separation(noise, cfg, pct, 0), ArgumentError);
    CHECK_THROWS_AS(space_time_separation(noise, cfg, std::vector<double>{}, 10), ArgumentError);
    // Short series: high-dt cells are marked missing rather than fabricated.
    const std::vector<double> shorty(20, 1.0);
    EmbeddingConfig tiny;
    tiny.m = 2;
    tiny.tau = 1;
    const auto sparse = space_time_separation(shorty, tiny, pct, 15);
    CHECK(std::isnan(sparse.contours.back()[0]));
}

TEST_CASE("dimension profile: chaotic flow saturates near two, noise tracks m") {
    const auto lor = lorenz_x(30000, 4000);
    auto series = one_channel(lor, 100.0);
    EmbeddingConfig cfg;
    cfg.tau = 19;
    cfg.stride = 10;
    const std::vector<int> ms{1, 3, 5};
    const auto profile = dimension_profile(series, ms, 10, 14, cfg);
    REQUIRE(profile.estimates.size() == 1);
    CHECK(profile.estimates[0][0] == doctest::Approx(1.0).epsilon(0.1));
    CHECK(profile.estimates[0][1] == doctest::Approx(2.05).epsilon(0.15));
    CHECK(profile.estimates[0][2] == doctest::Approx(2.05).epsilon(0.15));
    // Still climbing into m=3, flat from there on: saturation reported at 5.
    CHECK(profile.saturation_m[0] == 5);

    SplitMix64 rng(5);
    std::vector<double> noise(30000);
    for (auto& v : noise) v = rng.next_gauss();
    auto noisy = one_channel(noise, 100.0);
    EmbeddingConfig ncfg;
    ncfg.tau = 7;
    ncfg.stride = 10;
    const std::vector<int> nms{1, 3, 5};
    const auto nprof = dimension_profile(noisy, nms, 10, 14, ncfg);
    CHECK(nprof.estimates[0][0] == doctest::Approx(1.0).epsilon(0.1));
    CHECK(nprof.estimates[0][1] > 2.5);
    CHECK(nprof.estimates[0][2] > 4.0);
    CHECK(nprof.saturation_m[0] == 0);  // keeps climbing

    CHECK_THROWS_AS(dimension_profile(noisy, std::vector<int>{}, 10, 14, ncfg), ArgumentError);
    CHECK_THROWS_AS(dimension_profile(noisy, nms, 5, 3, ncfg), ArgumentError);
}

TEST_CASE("series csv io and trim") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "idim_ts_test";
    fs::create_directories(dir);
    MultiChannelSeries s;
    s.rate = 4.0;
    s.channels = {{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0},
                  {8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0}};
    s.write_csv(dir / "series.csv");
    const auto back = MultiChannelSeries::read_csv(dir / "series.csv", 4.0);
    CHECK(back.channels == s.channels);
    CHECK(back.rate == 4.0);

    const auto trimmed = trim(s, 0.5);  // 2 samples off each end
    CHECK(trimmed.length() == 4);
    CHECK(trimmed.channels[0][0] == 3.0);
    CHECK_THROWS_AS(trim(s, 2.0), ArgumentError);
    CHECK_THROWS_AS(MultiChannelSeries::read_csv(dir / "none.csv", 4.0), DataError);
    fs::remove_all(dir);
}

TEST_CASE("default delay follows the quarter-period rule") {
    CHECK(default_delay(2048.0, 30.0) == 17);  // 2048 / 120 rounds to 17
    CHECK(default_delay(100.0, 50.0) == 1);    // floor at one sample
}
