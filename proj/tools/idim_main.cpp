// idim: intrinsic dimension estimation toolkit.
//
// Subcommands: generate, estimate, calibrate, benchmark, pdf, embed, stsep.
// Every run that writes files also writes a manifest (resolved configuration,
// input digests, seeds) next to its outputs so results can be reproduced
// bit for bit.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idim/benchmark.hpp"
#include "idim/calibration.hpp"
#include "idim/distributions.hpp"
#include "idim/errors.hpp"
#include "idim/estimators.hpp"
#include "idim/geometry.hpp"
#include "idim/kernels.hpp"
#include "idim/parallel.hpp"
#include "idim/synthdata.hpp"
#include "idim/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// --------------------------------------------------------------------------
// Run manifest

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw idim::DataError("cannot open input file: " + path.string());
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

struct RunContext {
    std::string subcommand;
    json config;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    int threads = 1;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void add_input(const fs::path& p) { inputs.push_back(p); }
    void add_output(const fs::path& p) { outputs.push_back(p); }

    void write_manifest(const fs::path& manifest_path) const {
        json m;
        m["schema"] = "idim.manifest/1";
        m["tool"] = "idim";
        m["version"] = kVersion;
        m["subcommand"] = subcommand;
        m["config"] = config;
        m["threads"] = threads;
        m["kernel"] = idim::kernels::active_kernel_name();
        for (const auto& p : inputs) {
            char digest[19];
            std::snprintf(digest, sizeof digest, "0x%016" PRIx64, fnv1a64_file(p));
            m["inputs"].push_back({{"path", p.string()}, {"fnv1a64", digest}});
        }
        m["inputs"] = m.value("inputs", json::array());
        for (const auto& p : outputs) m["outputs"].push_back(p.string());
        m["outputs"] = m.value("outputs", json::array());
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
        m["duration_seconds"] = elapsed.count();
        std::ofstream out(manifest_path);
        if (!out) throw idim::DataError("cannot write manifest: " + manifest_path.string());
        out << m.dump(2) << "\n";
    }
};

// --------------------------------------------------------------------------
// Small parsers

// "lo:hi" or "lo:hi:step" over integers.
std::vector<int> parse_int_range(const std::string& text) {
    int lo = 0, hi = 0, step = 1;
    const int got = std::sscanf(text.c_str(), "%d:%d:%d", &lo, &hi, &step);
    if (got < 2 || step < 1 || hi < lo) {
        throw idim::ArgumentError("bad range '" + text + "' (expected lo:hi[:step])");
    }
    std::vector<int> out;
    for (int v = lo; v <= hi; v += step) out.push_back(v);
    return out;
}

struct Grid {
    double lo = 0.0, hi = 0.0;
    int steps = 0;
};

Grid parse_grid(const std::string& text) {
    Grid g;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &g.lo, &g.hi, &g.steps) != 3 || g.steps < 2 ||
        !(g.hi > g.lo)) {
        throw idim::ArgumentError("bad grid '" + text + "' (expected lo:hi:steps with steps >= 2)");
    }
    return g;
}

std::pair<double, double> parse_band(const std::string& text) {
    double lo = 0.0, hi = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf", &lo, &hi) != 2) {
        throw idim::ArgumentError("bad band '" + text + "' (expected low:high in Hz)");
    }
    return {lo, hi};
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string::size_type pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw idim::ArgumentError("empty list '" + text + "'");
    return out;
}

void require_input(const fs::path& p) {
    if (!fs::exists(p)) throw idim::DataError("missing input file: " + p.string());
}

char double_buf[32];
const char* fmt(double v) {
    std::snprintf(double_buf, sizeof double_buf, "%.17g", v);
    return double_buf;
}

// --------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string family = "hypercube";
    int intrinsic = 1;
    int ambient = 0;  // 0: family default
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::string boundary = "hard";
    std::vector<std::string> params;
    std::string out;
};

int run_generate(const GenerateArgs& args, RunContext& ctx) {
    idim::ManifoldSpec spec;
    spec.family = idim::family_from_string(args.family);
    spec.intrinsic_dim = args.intrinsic;
    spec.ambient_dim = args.ambient;
    if (spec.ambient_dim == 0) {
        switch (spec.family) {
            case idim::ManifoldFamily::kHypersphereSurface:
                spec.ambient_dim = args.intrinsic + 1;
                break;
            case idim::ManifoldFamily::kSwissRoll:
            case idim::ManifoldFamily::kHelix1D:
                spec.ambient_dim = 3;
                break;
            case idim::ManifoldFamily::kNonlinearEmbedHypercube:
                spec.ambient_dim = 2 * args.intrinsic;
                break;
            default:
                spec.ambient_dim = args.intrinsic;
        }
    }
    spec.n = args.n;
    spec.seed = args.seed;
    spec.boundary = idim::boundary_from_string(args.boundary);
    for (const auto& kv : args.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw idim::ArgumentError("bad --param '" + kv + "' (expected name=value)");
        }
        spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }

    const auto cloud = idim::generate(spec);
    cloud.write_csv(args.out);
    ctx.add_output(args.out);
    ctx.config = {{"family", args.family},           {"intrinsic_dim", spec.intrinsic_dim},
                  {"ambient_dim", spec.ambient_dim}, {"n", spec.n},
                  {"seed", spec.seed},               {"boundary", args.boundary}};
    for (const auto& [name, value] : spec.params) ctx.config["params"][name] = value;
    ctx.write_manifest(args.out + ".manifest.json");
    return 0;
}

// --------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string input;
    int k = 5;
    std::string method = "mfsa";
    std::string boundary = "hard";
    std::string correction;
    std::string aggregation = "mean";  // for ml
    std::string dump_locals;
    std::string out;  // empty: stdout
};

int run_estimate(const EstimateArgs& args, RunContext& ctx, int threads) {
    require_input(args.input);
    ctx.add_input(args.input);
    std::optional<idim::CalibrationModel> calibration;
    if (!args.correction.empty()) {
        require_input(args.correction);
        ctx.add_input(args.correction);
        calibration = idim::CalibrationModel::load(args.correction);
    }
    idim::Method method = idim::method_from_string(args.method);
    if (calibration && method == idim::Method::kMedianFsa) {
        method = idim::Method::kCorrectedMedianFsa;
    }
    if (method == idim::Method::kCorrectedMedianFsa && !calibration) {
        throw idim::ArgumentError("cmfsa needs --correction <calib.json>");
    }
    if (calibration && method != idim::Method::kCorrectedMedianFsa) {
        throw idim::ArgumentError("--correction applies to the median estimator only");
    }

    const auto cloud =
        idim::PointCloud::read_csv(args.input, idim::boundary_from_string(args.boundary));

    json record;
    record["input"] = args.input;
    record["boundary"] = args.boundary;
    record["k"] = args.k;
    record["n"] = cloud.size();

    auto dump = [&](const idim::LocalEstimateSet& locals) {
        if (args.dump_locals.empty()) return;
        std::ofstream out(args.dump_locals);
        if (!out) throw idim::DataError("cannot write " + args.dump_locals);
        for (double v : locals.values) out << fmt(v) << "\n";
        ctx.add_output(args.dump_locals);
    };

    switch (method) {
        case idim::Method::kMedianFsa:
        case idim::Method::kMeanFsa:
        case idim::Method::kModeFsa: {
            const auto locals = idim::local_estimates(cloud, args.k, threads);
            dump(locals);
            const auto est = method == idim::Method::kMedianFsa ? idim::aggregate_median(locals)
                             : method == idim::Method::kMeanFsa ? idim::aggregate_mean(locals)
                                                                : idim::aggregate_mode(locals);
            record["method"] = idim::to_string(method);
            record["value"] = est.value;
            record["n_invalid"] = est.n_invalid;
            break;
        }
        case idim::Method::kLevinaBickel: {
            const auto locals = idim::levina_bickel_locals(cloud, args.k, threads);
            dump(locals);
            const bool use_median = args.aggregation == "median";
            if (!use_median && args.aggregation != "mean") {
                throw idim::ArgumentError("--aggregation must be mean or median");
            }
            const auto est =
                use_median ? idim::aggregate_median(locals) : idim::aggregate_mean(locals);
            record["method"] = "ml";
            record["aggregation"] = args.aggregation;
            record["value"] = est.value;
            record["n_invalid"] = est.n_invalid;
            break;
        }
        case idim::Method::kFsaMl: {
            const auto locals = idim::local_estimates(cloud, args.k, threads);
            dump(locals);
            const auto valid = locals.valid_values();
            if (valid.empty()) throw idim::EstimationError("no valid estimates");
            record["method"] = "fsaml";
            record["value"] = idim::fsa_ml_solve(valid, args.k);
            record["n_invalid"] = locals.invalid_count();
            break;
        }
        case idim::Method::kCorrectedMedianFsa: {
            const auto locals = idim::local_estimates(cloud, args.k, threads);
            dump(locals);
            const auto median = idim::aggregate_median(locals);
            bool out_of_range = false;
            const double corrected = idim::apply_correction(median.value, *calibration,
                                                            &out_of_range);
            if (out_of_range) {
                std::cerr << "warning: estimate " << median.value
                          << " lies outside the calibrated range [" << calibration->d_min << ", "
                          << calibration->d_max << "]; extrapolating\n";
            }
            if (calibration->k != args.k) {
                std::cerr << "warning: calibration was fitted for k=" << calibration->k
                          << ", estimate uses k=" << args.k << "\n";
            }
            record["method"] = "cmfsa";
            record["value"] = corrected;
            record["uncorrected"] = median.value;
            record["integer_mode"] = idim::integer_mode(corrected);
            record["out_of_range"] = out_of_range;
            record["n_invalid"] = median.n_invalid;
            record["calibration"] = args.correction;
            break;
        }
    }

    const std::string text = record.dump(2);
    if (args.out.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(args.out);
        if (!out) throw idim::DataError("cannot write " + args.out);
        out << text << "\n";
        ctx.add_output(args.out);
    }
    ctx.config = {{"input", args.input},       {"k", args.k},
                  {"method", args.method},     {"boundary", args.boundary},
                  {"correction", args.correction}, {"aggregation", args.aggregation}};
    if (!ctx.outputs.empty()) {
        const fs::path anchor = args.out.empty() ? fs::path(ctx.outputs.front()) : fs::path(args.out);
        ctx.write_manifest(anchor.string() + ".manifest.json");
    }
    return 0;
}

// --------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
    std::size_t n = 2500;
    int k = 5;
    std::string boundary = "hard";
    std::string d_range;
    std::size_t realizations = 0;
    std::string order = "auto";
    bool odr = false;
    std::uint64_t seed = 1;
    std::string out;
};

int run_calibrate(const CalibrateArgs& args, RunContext& ctx, int threads) {
    idim::CalibrateOptions opt;
    const auto preset =
        idim::calibration_preset(args.n, args.k, idim::boundary_from_string(args.boundary));
    if (preset) opt = *preset;
    opt.n = args.n;
    opt.k = args.k;
    opt.boundary = idim::boundary_from_string(args.boundary);
    if (!args.d_range.empty()) opt.dims = parse_int_range(args.d_range);
    if (args.realizations > 0) opt.realizations = args.realizations;
    if (opt.dims.empty()) {
        throw idim::ArgumentError("no calibration preset for n=" + std::to_string(args.n) +
                                  ", k=" + std::to_string(args.k) + "; pass --d lo:hi[:step]");
    }
    opt.order = args.order == "auto" ? -1 : std::stoi(args.order);
    opt.use_odr = args.odr;
    opt.seed = args.seed;
    opt.threads = threads;

    const auto model = idim::calibrate(opt);
    model.save(args.out);
    ctx.add_output(args.out);
    std::cerr << "calibrated order " << model.order << ", residual sd " << model.residual_sd
              << " over " << model.grid_true_dims.size() << " dimensions\n";

    json dims = json::array();
    for (int d : opt.dims) dims.push_back(d);
    ctx.config = {{"n", opt.n},
                  {"k", opt.k},
                  {"boundary", args.boundary},
                  {"dims", dims},
                  {"realizations", opt.realizations},
                  {"order", args.order},
                  {"odr", args.odr},
                  {"seed", opt.seed}};
    ctx.write_manifest(args.out + ".manifest.json");
    return 0;
}

// --------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
    std::string suite;
    std::string estimators = "mfsa";
    int k = 5;
    int lb_k = 11;
    std::string calibration;
    std::size_t realizations = 100;
    std::uint64_t seed = 1;
    std::string out;
};

int run_benchmark(const BenchmarkArgs& args, RunContext& ctx, int threads) {
    require_input(args.suite);
    ctx.add_input(args.suite);
    auto items = idim::read_suite(args.suite);
    for (const auto& item : items) {
        if (item.csv) {
            require_input(*item.csv);
            ctx.add_input(*item.csv);
        }
    }

    std::optional<idim::CalibrationModel> calibration;
    if (!args.calibration.empty()) {
        require_input(args.calibration);
        ctx.add_input(args.calibration);
        calibration = idim::CalibrationModel::load(args.calibration);
    }

    std::vector<idim::EstimatorConfig> estimators;
    std::string::size_type pos = 0;
    while (pos <= args.estimators.size()) {
        const auto comma = args.estimators.find(',', pos);
        const std::string name =
            args.estimators.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!name.empty()) {
            idim::EstimatorConfig cfg;
            cfg.method = idim::method_from_string(name);
            cfg.k = cfg.method == idim::Method::kLevinaBickel ? args.lb_k : args.k;
            if (cfg.method == idim::Method::kCorrectedMedianFsa) {
                if (!calibration) {
                    throw idim::ArgumentError("estimator cmfsa needs --calibration <calib.json>");
                }
                cfg.calibration = calibration;
                cfg.k = calibration->k;
            }
            estimators.push_back(std::move(cfg));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }

    fs::create_directories(args.out);
    const auto result =
        idim::run_suite(std::move(items), std::move(estimators), args.realizations, args.seed,
                        threads);
    result.write_raw_csv(fs::path(args.out) / "raw.csv");
    result.write_table_csv(fs::path(args.out) / "table.csv");
    result.write_metrics_json(fs::path(args.out) / "metrics.json");
    ctx.add_output(fs::path(args.out) / "raw.csv");
    ctx.add_output(fs::path(args.out) / "table.csv");
    ctx.add_output(fs::path(args.out) / "metrics.json");

    for (const auto& s : result.summaries) {
        std::cerr << s.label << ": mpe " << s.mpe << "%, error rate " << s.error_rate;
        if (s.n_failed > 0) std::cerr << " (" << s.n_failed << " failed cells)";
        std::cerr << "\n";
    }

    ctx.config = {{"suite", args.suite},
                  {"estimators", args.estimators},
                  {"k", args.k},
                  {"lb_k", args.lb_k},
                  {"calibration", args.calibration},
                  {"realizations", args.realizations},
                  {"seed", args.seed}};
    ctx.write_manifest(fs::path(args.out) / "manifest.json");
    return 0;
}

// --------------------------------------------------------------------------
// pdf

struct PdfArgs {
    int k = 1;
    double d_intrinsic = 0.0;
    std::string grid;
    int n = 0;
    bool median_sampling = false;
    std::string out;  // empty: stdout
};

int run_pdf(const PdfArgs& args, RunContext& ctx) {
    const Grid grid = parse_grid(args.grid);
    if (args.median_sampling && args.n < 1) {
        throw idim::ArgumentError("--median-sampling needs --n <odd sample size>");
    }
    std::string body;
    for (int i = 0; i < grid.steps; ++i) {
        const double x = grid.lo + (grid.hi - grid.lo) * i / (grid.steps - 1);
        double pdf, cdf;
        if (args.median_sampling) {
            pdf = idim::median_sampling_pdf(x, args.k, args.d_intrinsic, args.n);
            cdf = idim::median_sampling_cdf(x, args.k, args.d_intrinsic, args.n);
        } else {
            pdf = idim::fsa_pdf(x, args.k, args.d_intrinsic);
            cdf = idim::fsa_cdf(x, args.k, args.d_intrinsic);
        }
        body += fmt(x);
        body += ',';
        body += fmt(pdf);
        body += ',';
        body += fmt(cdf);
        body += '\n';
    }
    if (args.out.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(args.out);
        if (!out) throw idim::DataError("cannot write " + args.out);
        out << body;
        ctx.add_output(args.out);
        ctx.config = {{"k", args.k},
                      {"d_intrinsic", args.d_intrinsic},
                      {"grid", args.grid},
                      {"n", args.n},
                      {"median_sampling", args.median_sampling}};
        ctx.write_manifest(args.out + ".manifest.json");
    }
    return 0;
}

// --------------------------------------------------------------------------
// embed / stsep shared preprocessing

struct SeriesArgs {
    std::string input;
    double rate = 0.0;
    bool standardize = true;
    std::string layout;
    std::string band;  // "lo:hi" or empty
    int order = 4;
    double trim_seconds = 2.0;
    std::string tau = "auto";
};

idim::MultiChannelSeries load_and_preprocess(const SeriesArgs& args, RunContext& ctx,
                                             double* f_max) {
    require_input(args.input);
    ctx.add_input(args.input);
    auto series = idim::MultiChannelSeries::read_csv(args.input, args.rate);
    if (!args.layout.empty()) {
        require_input(args.layout);
        ctx.add_input(args.layout);
        series.layout = idim::ChannelLayout::read_json(args.layout);
    }
    if (args.standardize) series = idim::standardize(series);
    if (series.layout) {
        std::vector<std::size_t> isolated;
        series = idim::csd(series, &isolated);
        for (auto c : isolated) {
            std::cerr << "warning: channel " << c << " has no neighbors; its output is zero\n";
        }
    }
    *f_max = 0.0;
    if (!args.band.empty()) {
        const auto [lo, hi] = parse_band(args.band);
        series = idim::bandpass(series, lo, hi, args.order);
        *f_max = hi;
        if (args.trim_seconds > 0.0) series = idim::trim(series, args.trim_seconds);
    }
    return series;
}

int resolve_tau(const SeriesArgs& args, double f_max) {
    if (args.tau == "auto") {
        if (f_max <= 0.0) {
            throw idim::ArgumentError("--tau auto needs --band to derive the fastest period");
        }
        return idim::default_delay(args.rate, f_max);
    }
    return std::stoi(args.tau);
}

struct EmbedArgs {
    SeriesArgs series;
    int m = 7;
    std::string stride = "auto";
    int dtmax = 50;
    std::string out;
};

int run_embed(const EmbedArgs& args, RunContext& ctx, int threads) {
    double f_max = 0.0;
    const auto series = load_and_preprocess(args.series, ctx, &f_max);
    const int tau = resolve_tau(args.series, f_max);

    int stride;
    if (args.stride == "auto") {
        // Average the median contour over channels, then take its first local
        // maximum as the decorrelation stride.
        idim::EmbeddingConfig probe;
        probe.m = 2;
        probe.tau = tau;
        const std::vector<double> pct{50.0};
        std::vector<double> avg(args.dtmax, 0.0);
        std::vector<int> hits(args.dtmax, 0);
        for (const auto& ch : series.channels) {
            const auto st = idim::space_time_separation(ch, probe, pct, args.dtmax);
            for (int i = 0; i < args.dtmax; ++i) {
                if (!std::isnan(st.contours[i][0])) {
                    avg[i] += st.contours[i][0];
                    ++hits[i];
                }
            }
        }
        stride = 1;
        for (int i = 1; i + 1 < args.dtmax; ++i) {
            if (hits[i - 1] == 0 || hits[i] == 0 || hits[i + 1] == 0) continue;
            const double prev = avg[i - 1] / hits[i - 1];
            const double cur = avg[i] / hits[i];
            const double next = avg[i + 1] / hits[i + 1];
            if (cur > prev && cur > next) {
                stride = i + 1;
                break;
            }
        }
    } else {
        stride = std::stoi(args.stride);
    }
    if (stride < 1) throw idim::ArgumentError("stride must be >= 1");

    fs::create_directories(args.out);
    const std::size_t C = series.n_channels();
    std::vector<std::vector<fs::path>> files(C);
    idim::parallel_for(C, threads, [&](std::size_t c) {
        for (int off = 0; off < stride; ++off) {
            idim::EmbeddingConfig cfg;
            cfg.m = args.m;
            cfg.tau = tau;
            cfg.stride = stride;
            cfg.offset = off;
            const auto cloud = idim::delay_embed(series.channels[c], cfg);
            char name[64];
            std::snprintf(name, sizeof name, "ch%03zu_off%02d.csv", c, off);
            const fs::path file = fs::path(args.out) / name;
            cloud.write_csv(file);
            files[c].push_back(file);
        }
    });
    for (const auto& per_channel : files) {
        for (const auto& f : per_channel) ctx.add_output(f);
    }
    std::cerr << "embedded " << C << " channels with m=" << args.m << " tau=" << tau
              << " stride=" << stride << "\n";

    ctx.config = {{"input", args.series.input}, {"rate", args.series.rate},
                  {"standardize", args.series.standardize}, {"layout", args.series.layout},
                  {"band", args.series.band},   {"order", args.series.order},
                  {"trim_seconds", args.series.trim_seconds}, {"m", args.m},
                  {"tau", tau},                 {"stride", stride}};
    ctx.write_manifest(fs::path(args.out) / "manifest.json");
    return 0;
}

struct StsepArgs {
    SeriesArgs series;
    int m = 2;
    std::string percentiles = "1,25,50";
    int dtmax = 50;
    std::string out;  // empty: stdout
};

int run_stsep(const StsepArgs& args, RunContext& ctx) {
    double f_max = 0.0;
    const auto series = load_and_preprocess(args.series, ctx, &f_max);
    const int tau = resolve_tau(args.series, f_max);
    const auto pct = parse_double_list(args.percentiles);

    idim::EmbeddingConfig cfg;
    cfg.m = args.m;
    cfg.tau = tau;

    // Contours averaged across channels, one row per temporal separation.
    std::vector<std::vector<double>> avg(args.dtmax, std::vector<double>(pct.size(), 0.0));
    std::vector<std::vector<int>> hits(args.dtmax, std::vector<int>(pct.size(), 0));
    int suggested = 0;
    for (const auto& ch : series.channels) {
        const auto st = idim::space_time_separation(ch, cfg, pct, args.dtmax);
        suggested = std::max(suggested, st.suggested_stride);
        for (int i = 0; i < args.dtmax; ++i) {
            for (std::size_t p = 0; p < pct.size(); ++p) {
                if (!std::isnan(st.contours[i][p])) {
                    avg[i][p] += st.contours[i][p];
                    ++hits[i][p];
                }
            }
        }
    }
    std::string body;
    for (int i = 0; i < args.dtmax; ++i) {
        body += std::to_string(i + 1);
        for (std::size_t p = 0; p < pct.size(); ++p) {
            body += ',';
            body += hits[i][p] > 0 ? fmt(avg[i][p] / hits[i][p]) : "nan";
        }
        body += '\n';
    }
    std::cerr << "suggested stride: " << suggested << "\n";
    if (args.out.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(args.out);
        if (!out) throw idim::DataError("cannot write " + args.out);
        out << body;
        ctx.add_output(args.out);
        ctx.config = {{"input", args.series.input},
                      {"rate", args.series.rate},
                      {"m", args.m},
                      {"tau", tau},
                      {"percentiles", args.percentiles},
                      {"dtmax", args.dtmax},
                      {"suggested_stride", suggested}};
        ctx.write_manifest(args.out + ".manifest.json");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"idim: intrinsic dimension estimation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    int threads = idim::default_threads();
    app.add_option("--threads", threads, "worker thread count (default: IDIM_THREADS or cores)");

    GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate", "sample a synthetic manifold to CSV");
    cmd_gen->add_option("--family", gen.family,
                        "hypercube|sphere|swissroll|subspace|helix|nonlinear");
    cmd_gen->add_option("--d", gen.intrinsic, "intrinsic dimension")->required();
    cmd_gen->add_option("--ambient", gen.ambient, "ambient dimension (default per family)");
    cmd_gen->add_option("--n", gen.n, "sample size")->required();
    cmd_gen->add_option("--seed", gen.seed, "rng seed");
    cmd_gen->add_option("--boundary", gen.boundary, "hard|periodic tag for the cloud");
    cmd_gen->add_option("--param", gen.params, "family parameter name=value (repeatable)");
    cmd_gen->add_option("--out", gen.out, "output CSV")->required();

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "estimate intrinsic dimension of a cloud");
    cmd_est->add_option("--input", est.input, "point cloud CSV")->required();
    cmd_est->add_option("--k", est.k, "neighborhood order (K for ml)");
    cmd_est->add_option("--method", est.method, "mfsa|mean|mode|ml|fsaml|cmfsa");
    cmd_est->add_option("--boundary", est.boundary, "hard|periodic");
    cmd_est->add_option("--correction", est.correction, "calibration JSON enabling cmfsa");
    cmd_est->add_option("--aggregation", est.aggregation, "ml aggregation: mean|median");
    cmd_est->add_option("--dump-locals", est.dump_locals, "write local estimates to CSV");
    cmd_est->add_option("--out", est.out, "write the JSON record here instead of stdout");

    CalibrateArgs cal;
    auto* cmd_cal = app.add_subcommand("calibrate", "fit the hypercube correction model");
    cmd_cal->add_option("--n", cal.n, "calibration sample size")->required();
    cmd_cal->add_option("--k", cal.k, "neighborhood order")->required();
    cmd_cal->add_option("--boundary", cal.boundary, "hard|periodic");
    cmd_cal->add_option("--d", cal.d_range, "dimension sweep lo:hi[:step] (default: preset)");
    cmd_cal->add_option("--realizations", cal.realizations, "clouds per dimension");
    cmd_cal->add_option("--order", cal.order, "polynomial order, or auto");
    cmd_cal->add_flag("--odr", cal.odr, "fit with orthogonal distances instead of least squares");
    cmd_cal->add_option("--seed", cal.seed, "rng seed");
    cmd_cal->add_option("--out", cal.out, "output model JSON")->required();

    BenchmarkArgs bench;
    auto* cmd_bench = app.add_subcommand("benchmark", "run estimator sweeps over a suite");
    cmd_bench->add_option("--suite", bench.suite, "suite JSON")->required();
    cmd_bench->add_option("--estimators", bench.estimators, "comma list: mfsa,mean,mode,ml,fsaml,cmfsa");
    cmd_bench->add_option("--k", bench.k, "FSA neighborhood order");
    cmd_bench->add_option("--lb-k", bench.lb_k, "Levina-Bickel neighborhood size K");
    cmd_bench->add_option("--calibration", bench.calibration, "calibration JSON for cmfsa");
    cmd_bench->add_option("--realizations", bench.realizations, "realizations per manifold");
    cmd_bench->add_option("--seed", bench.seed, "rng seed");
    cmd_bench->add_option("--out", bench.out, "output directory")->required();

    PdfArgs pdf;
    auto* cmd_pdf = app.add_subcommand("pdf", "tabulate analytic densities to CSV");
    cmd_pdf->add_option("--k", pdf.k, "neighborhood order");
    cmd_pdf->add_option("--d-intrinsic", pdf.d_intrinsic, "intrinsic dimension")->required();
    cmd_pdf->add_option("--grid", pdf.grid, "lo:hi:steps evaluation grid")->required();
    cmd_pdf->add_option("--n", pdf.n, "odd sample size for --median-sampling");
    cmd_pdf->add_flag("--median-sampling", pdf.median_sampling,
                      "tabulate the sampling density of the median");
    cmd_pdf->add_option("--out", pdf.out, "output CSV (default stdout)");

    EmbedArgs embed;
    auto* cmd_embed = app.add_subcommand("embed", "preprocess and delay-embed a recording");
    cmd_embed->add_option("--input", embed.series.input, "series CSV (columns = channels)")
        ->required();
    cmd_embed->add_option("--rate", embed.series.rate, "sampling rate in Hz")->required();
    cmd_embed->add_flag("--standardize,!--no-standardize", embed.series.standardize,
                        "per-channel standardization (default on)");
    cmd_embed->add_option("--layout", embed.series.layout, "layout JSON enabling CSD");
    cmd_embed->add_option("--band", embed.series.band, "bandpass low:high in Hz");
    cmd_embed->add_option("--order", embed.series.order, "Butterworth order (even)");
    cmd_embed->add_option("--trim", embed.series.trim_seconds,
                          "seconds trimmed from each end after filtering");
    cmd_embed->add_option("--m", embed.m, "embedding dimension")->required();
    cmd_embed->add_option("--tau", embed.series.tau, "delay in samples, or auto");
    cmd_embed->add_option("--stride", embed.stride, "subsample stride, or auto");
    cmd_embed->add_option("--dtmax", embed.dtmax, "search horizon for --stride auto");
    cmd_embed->add_option("--out", embed.out, "output directory")->required();

    StsepArgs stsep;
    auto* cmd_stsep = app.add_subcommand("stsep", "space-time separation contours");
    cmd_stsep->add_option("--input", stsep.series.input, "series CSV (columns = channels)")
        ->required();
    cmd_stsep->add_option("--rate", stsep.series.rate, "sampling rate in Hz")->required();
    cmd_stsep->add_flag("--standardize,!--no-standardize", stsep.series.standardize,
                        "per-channel standardization (default on)");
    cmd_stsep->add_option("--layout", stsep.series.layout, "layout JSON enabling CSD");
    cmd_stsep->add_option("--band", stsep.series.band, "bandpass low:high in Hz");
    cmd_stsep->add_option("--order", stsep.series.order, "Butterworth order (even)");
    cmd_stsep->add_option("--trim", stsep.series.trim_seconds, "seconds trimmed from each end");
    cmd_stsep->add_option("--m", stsep.m, "embedding dimension for the contours");
    cmd_stsep->add_option("--tau", stsep.series.tau, "delay in samples, or auto");
    cmd_stsep->add_option("--percentiles", stsep.percentiles, "comma list, e.g. 1,25,50");
    cmd_stsep->add_option("--dtmax", stsep.dtmax, "largest temporal separation");
    cmd_stsep->add_option("--out", stsep.out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    RunContext ctx;
    ctx.threads = threads;
    try {
        if (*cmd_gen) {
            ctx.subcommand = "generate";
            return run_generate(gen, ctx);
        }
        if (*cmd_est) {
            ctx.subcommand = "estimate";
            return run_estimate(est, ctx, threads);
        }
        if (*cmd_cal) {
            ctx.subcommand = "calibrate";
            return run_calibrate(cal, ctx, threads);
        }
        if (*cmd_bench) {
            ctx.subcommand = "benchmark";
            return run_benchmark(bench, ctx, threads);
        }
        if (*cmd_pdf) {
            ctx.subcommand = "pdf";
            return run_pdf(pdf, ctx);
        }
        if (*cmd_embed) {
            ctx.subcommand = "embed";
            return run_embed(embed, ctx, threads);
        }
        if (*cmd_stsep) {
            ctx.subcommand = "stsep";
            return run_stsep(stsep, ctx);
        }
    } catch (const idim::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const idim::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
