#pragma once
// Command orchestration: sample-acr, sample-basin, baseline, mc-ingest, measure.

#include "io.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <functional>
#include <unordered_set>

#include <openssl/evp.h>

namespace ucvol {

inline constexpr const char* kVersion = "1.0.0";

enum class Command : std::uint8_t { SampleAcr, SampleBasin, Baseline, McIngest, Measure };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::SampleAcr: return "sample-acr";
        case Command::SampleBasin: return "sample-basin";
        case Command::Baseline: return "baseline";
        case Command::McIngest: return "mc-ingest";
        case Command::Measure: return "measure";
    }
    return "?";
}

inline std::optional<Command> command_from(const std::string& s) {
    for (Command c : {Command::SampleAcr, Command::SampleBasin, Command::Baseline, Command::McIngest, Command::Measure})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitBudget = 4;

inline int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::Config:
        case ErrorCode::Io: return kExitConfig;
        case ErrorCode::BudgetExceeded: return kExitBudget;
        default: return kExitDomain;
    }
}

inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::Io, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_text(p)); }

struct RunOptions {
    std::filesystem::path baseDir = ".";  // relative config paths resolve here
    bool timing = false;                  // wall times in result summaries (breaks byte identity)
    std::string configSource = "<config>";
    std::ostream* log = nullptr;
};

struct RunOutcome {
    int exitCode = kExitOk;
    std::string message;
    std::vector<std::filesystem::path> artifacts;  // relative to the output directory
    std::filesystem::path manifest;
};

// Files written by one command; removed again unless the command completes.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path root) : root_(std::move(root)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(root_ / p, ec);
        // deepest first; remove() leaves non-empty directories alone
        std::sort(dirs_.begin(), dirs_.end(), [](const auto& x, const auto& y) {
            return std::distance(x.begin(), x.end()) > std::distance(y.begin(), y.end());
        });
        for (const auto& d : dirs_) std::filesystem::remove(d, ec);
    }

    void write(const std::filesystem::path& rel, const std::string& content) {
        const auto full = root_ / rel;
        for (auto d = full.parent_path(); !d.empty() && !std::filesystem::exists(d); d = d.parent_path())
            dirs_.push_back(d);
        std::filesystem::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + full.string());
        out << content;
        if (!out) throw Error(ErrorCode::Io, "write failed for " + full.string());
        if (std::find(written_.begin(), written_.end(), rel) == written_.end()) written_.push_back(rel);
    }
    void write_json(const std::filesystem::path& rel, const Json& j) { write(rel, j.dump(2) + "\n"); }

    void commit() { committed_ = true; }
    [[nodiscard]] const std::vector<std::filesystem::path>& written() const { return written_; }
    [[nodiscard]] const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::vector<std::filesystem::path> written_;
    std::vector<std::filesystem::path> dirs_;
    bool committed_ = false;
};

namespace detail {

inline std::filesystem::path resolve(const RunOptions& opt, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : opt.baseDir / path;
}

struct RunContext {
    const RunConfig& config;
    const RunOptions& options;
    std::filesystem::path outDir;
    OutputSet out;
    Json inputs = Json::array();
    Json counters = Json::object();

    RunContext(const RunConfig& c, const RunOptions& o)
        : config(c), options(o), outDir(resolve(o, c.outputDirectory)), out(outDir) {}

    void note_input(const std::string& role, const std::filesystem::path& p) {
        inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file(p)}});
    }
    void log(const std::string& s) const {
        if (options.log) *options.log << s << "\n";
    }
    [[nodiscard]] std::pair<std::shared_ptr<const PointSet>, std::shared_ptr<const PointSet>> point_sets() {
        if (config.pointSetA.empty() || config.pointSetB.empty())
            throw Error(ErrorCode::Config, "PointSetA.file and PointSetB.file are required");
        const auto a = resolve(options, config.pointSetA), b = resolve(options, config.pointSetB);
        auto A = load_point_set(a, "A");
        auto B = load_point_set(b, "B");
        note_input("pointSetA", a);
        note_input("pointSetB", b);
        return {std::move(A), std::move(B)};
    }
    // Prerequisite artifact produced by an earlier command.
    [[nodiscard]] std::filesystem::path require(const std::filesystem::path& rel, const std::string& producer) {
        const auto p = outDir / rel;
        if (!std::filesystem::exists(p))
            throw Error(ErrorCode::Config, "missing prerequisite " + p.string() + " (run '" + producer + "' first)");
        note_input(producer, p);
        return p;
    }
};

inline std::string to_csv(const std::function<void(std::ostream&)>& f) {
    std::ostringstream o;
    f(o);
    return o.str();
}

inline std::filesystem::path sample_path(Variant v, const ACRDescriptor& acr, const char* ext) {
    return std::filesystem::path("samples") / to_string(v) / (acr_slug(acr) + ext);
}

// Samples one region; failures the basin run tolerates become diagnostics.
inline ACRSampleResult sample_member(const std::shared_ptr<const PointSet>& A, const std::shared_ptr<const PointSet>& B,
                                     const ACRDescriptor& acr, const RunConfig& c) {
    ACRSampleResult r;
    r.acr = acr;
    r.variant = c.variant;
    if (acr.empty()) {
        r.emptyACR = true;
        r.diagnostic = "no contacts: the interior region is not sampled";
        return r;
    }
    try {
        return sample_acr(A, B, acr, c.constraints, c.sampler_options());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BudgetExceeded || e.code() == ErrorCode::Config) throw;
        r.emptyACR = true;
        r.diagnostic = e.what();
        return r;
    }
}

inline void write_sample(RunContext& ctx, const ACRSampleResult& r) {
    ctx.out.write(sample_path(r.variant, r.acr, ".csv"), to_csv([&](std::ostream& o) { write_samples_csv(o, r); }));
    ctx.out.write_json(sample_path(r.variant, r.acr, ".json"), sample_summary(r, ctx.options.timing));
}

// Per-region cube counts of one method.
using CubeCounts = std::map<ACRDescriptor, double>;

inline std::vector<Basin> basins_of(const RunConfig& c) {
    std::vector<Basin> out;
    for (const auto& b : c.basinBottoms) out.push_back(basin_from_bottom(b.pairs()));
    return out;
}

inline Json volume_report(const std::vector<Basin>& basins, const CubeCounts& counts, double factor) {
    Json j;
    j["boltzmannFactor"] = factor;
    std::vector<double> weighted;
    Json rows = Json::array();
    for (std::size_t b = 0; b < basins.size(); ++b) {
        const auto levels = basin_level_volumes(basins[b], counts);
        weighted.push_back(weighted_basin_volume(levels, factor));
        rows.push_back({{"basin", b + 1},
                        {"bottom", basins[b].bottom.to_string()},
                        {"levelVolumes", levels},
                        {"weightedVolume", weighted.back()}});
    }
    const double uni = union_volume(basins, counts, factor);
    j["unionVolume"] = uni;
    std::vector<double> sum, un;
    double total = 0.0;
    for (double w : weighted) total += w;
    if (total > 0.0) sum = relative_volumes(weighted, RelativeMode::Sum);
    if (uni > 0.0) un = relative_volumes(weighted, RelativeMode::Union, uni);
    for (std::size_t b = 0; b < rows.size(); ++b) {
        rows[b]["relativeToSum"] = sum.empty() ? Json(nullptr) : Json(sum[b]);
        rows[b]["relativeToUnion"] = un.empty() ? Json(nullptr) : Json(un[b]);
    }
    j["basins"] = rows;
    return j;
}

inline double resolve_factor(RunContext& ctx) {
    if (ctx.config.boltzmannFactor) return *ctx.config.boltzmannFactor;
    const auto p = ctx.require("mc/summary.json", "mc-ingest");
    const Json j = Json::parse(read_text(p));
    if (!j.contains("boltzmannFactor") || j["boltzmannFactor"].is_null())
        throw Error(ErrorCode::InsufficientData,
                    "Basin.boltzmannFactor = auto, but the MC1 pseudo-atlas has no two adjacent levels");
    return j["boltzmannFactor"].get<double>();
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_sample_acr(RunContext& ctx) {
    const RunConfig& c = ctx.config;
    if (c.contacts.empty()) throw Error(ErrorCode::Config, "sample-acr needs Sampling.initial_Contact_1..");
    auto [A, B] = ctx.point_sets();
    const ACRDescriptor acr(c.contacts);
    const auto r = sample_acr(A, B, acr, c.constraints, c.sampler_options());
    if (r.emptyACR) throw Error(ErrorCode::EmptyACR, acr.to_string() + ": " + r.diagnostic);
    write_sample(ctx, r);
    ctx.counters = sample_summary(r, false);
    ctx.log(acr.to_string() + ": " + std::to_string(r.counted()) + " cubes");
}

inline void cmd_sample_basin(RunContext& ctx) {
    const RunConfig& c = ctx.config;
    if (c.basinBottoms.empty()) throw Error(ErrorCode::Config, "sample-basin needs Basin.bottom_1..");
    const double factor = resolve_factor(ctx);
    auto [A, B] = ctx.point_sets();
    const auto basins = basins_of(c);
    CubeCounts counts;
    std::size_t empty = 0;
    for (const Basin& basin : basins)
        for (const auto& m : basin.members) {
            if (counts.count(m)) continue;
            const auto r = sample_member(A, B, m, c);
            write_sample(ctx, r);
            counts[m] = static_cast<double>(r.counted());
            empty += r.emptyACR;
            ctx.log(m.to_string() + ": " + std::to_string(r.counted()) + " cubes" +
                    (r.diagnostic.empty() ? "" : " (" + r.diagnostic + ")"));
        }
    ctx.out.write_json(std::filesystem::path("basins") / (std::string(to_string(c.variant)) + ".json"),
                       volume_report(basins, counts, factor));
    ctx.counters = {{"regions", counts.size()}, {"emptyRegions", empty}};
}

inline void cmd_baseline(RunContext& ctx) {
    const RunConfig& c = ctx.config;
    auto [A, B] = ctx.point_sets();
    std::optional<ACRDescriptor> filter;
    if (c.baselineContactsOnly) filter = ACRDescriptor(c.contacts);
    const auto g = baseline_enumerate(A, B, c.constraints, filter, c.baseline_grid(), c.baselineMaxPoses,
                                      c.baselineMembership);
    ctx.out.write("baseline/points.csv", to_csv([&](std::ostream& o) { write_baseline_csv(o, g); }));
    ctx.out.write_json("baseline/summary.json", baseline_summary(g));
    ctx.counters = {{"scanned", g.scanned}, {"points", g.size()}, {"regions", g.points.size()}};
}

inline void cmd_mc_ingest(RunContext& ctx) {
    const RunConfig& c = ctx.config;
    if (c.trajectory.empty()) throw Error(ErrorCode::Config, "mc-ingest needs MonteCarlo.trajectory");
    auto [A, B] = ctx.point_sets();
    const auto path = resolve(ctx.options, c.trajectory);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open trajectory " + path.string());
    const auto traj = read_trajectory(in, path.string());
    ctx.note_input("trajectory", path);
    const PoseClassifier classifier(A, B, c.constraints);
    Json summary;
    summary["lines"] = traj.size();
    for (InnerRule rule : {InnerRule::MC1, InnerRule::MC2, InnerRule::MC3}) {
        const auto atlas = ingest_trajectory(traj, classifier, rule, c.grid());
        const std::string name = to_string(rule);
        std::string lower = name;
        for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        ctx.out.write("mc/" + lower + "_atlas.csv", to_csv([&](std::ostream& o) { write_atlas_csv(o, atlas); }));
        ctx.out.write("mc/" + lower + "_poses.csv", to_csv([&](std::ostream& o) { write_atlas_poses_csv(o, atlas); }));
        summary[name] = {{"accepted", atlas.accepted()},
                         {"regions", atlas.entries.size()},
                         {"rejectedCollision", atlas.rejectedCollision},
                         {"rejectedNoContact", atlas.rejectedNoContact},
                         {"rejectedAxis", atlas.rejectedAxis}};
        if (rule == InnerRule::MC1) {
            try {
                summary["boltzmannFactor"] = estimate_boltzmann(atlas);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientData) throw;
                summary["boltzmannFactor"] = nullptr;
            }
        }
    }
    ctx.out.write_json("mc/summary.json", summary);
    ctx.counters = summary;
}

// One sampling method as seen by `measure`.
struct MethodData {
    std::string name;
    CubeCounts cubes;
    std::map<ACRDescriptor, std::vector<Pose>> samples;
    std::vector<Json> summaries;  // sampler summaries, UC methods only
};

inline std::vector<MethodData> load_uc_methods(RunContext& ctx) {
    std::vector<MethodData> out;
    const auto root = ctx.outDir / "samples";
    if (!std::filesystem::exists(root)) return out;
    std::vector<std::filesystem::path> dirs;
    for (const auto& d : std::filesystem::directory_iterator(root))
        if (d.is_directory()) dirs.push_back(d.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        MethodData m;
        m.name = "uc-" + dir.filename().string();
        std::vector<std::filesystem::path> files;
        for (const auto& f : std::filesystem::directory_iterator(dir))
            if (f.path().extension() == ".json") files.push_back(f.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const Json j = Json::parse(read_text(f));
            ctx.note_input("samples", f);
            const auto acr = ACRDescriptor::parse(j.at("acr").get<std::string>());
            auto csvPath = f;
            csvPath.replace_extension(".csv");
            std::ifstream in(csvPath);
            if (!in) throw Error(ErrorCode::Io, "missing sample file " + csvPath.string());
            ctx.note_input("samples", csvPath);
            auto& poses = m.samples[acr];
            for (const auto& s : read_samples_csv(in, csvPath.string())) poses.push_back(s.pose);
            m.cubes[acr] = static_cast<double>(poses.size());
            m.summaries.push_back(j);
        }
        out.push_back(std::move(m));
    }
    return out;
}

inline std::vector<MethodData> load_mc_methods(RunContext& ctx, const GridSpec& grid) {
    std::vector<MethodData> out;
    for (const char* name : {"mc1", "mc2", "mc3"}) {
        const auto p = ctx.outDir / "mc" / (std::string(name) + "_poses.csv");
        if (!std::filesystem::exists(p)) continue;
        ctx.note_input("mc", p);
        std::ifstream in(p);
        MethodData m;
        m.name = name;
        m.samples = read_atlas_poses(in, p.string());
        for (const auto& [acr, poses] : m.samples) {
            std::unordered_set<CubeKey, CubeKeyHash> cubes;
            for (const Pose& pose : poses) cubes.insert(cube_of(pose, grid));
            m.cubes[acr] = static_cast<double>(cubes.size());
        }
        out.push_back(std::move(m));
    }
    return out;
}

inline void cmd_measure(RunContext& ctx) {
    const RunConfig& c = ctx.config;
    const auto pointsPath = ctx.require("baseline/points.csv", "baseline");
    const auto summaryPath = ctx.require("baseline/summary.json", "baseline");
    std::ifstream bin(pointsPath);
    const BaselineGrid baseline = read_baseline(bin, Json::parse(read_text(summaryPath)), pointsPath.string());
    const GridSpec grid = c.grid();

    std::vector<MethodData> methods = load_uc_methods(ctx);
    if (methods.empty())
        throw Error(ErrorCode::Config, "missing prerequisite " + (ctx.outDir / "samples").string() +
                                           " (run 'sample-acr' or 'sample-basin' first)");
    for (auto& m : load_mc_methods(ctx, grid)) methods.push_back(std::move(m));
    {
        MethodData b;
        b.name = "baseline";
        for (const auto& [acr, keys] : baseline.points)
            b.cubes[acr] = static_cast<double>(derive_cubes(keys, baseline.grid, grid).size());
        methods.push_back(std::move(b));
    }

    std::ostringstream acrCsv, volCsv, shapeCsv, covCsv, histCsv, effCsv, plotCsv;
    acrCsv << "method,acr,level,cubes\n";
    volCsv << "method,basin,bottom,weighted_volume,relative_to_sum,relative_to_union\n";
    shapeCsv << "method,basin,variant,level,defined,value,weighted,fraction\n";
    covCsv << "method,acr,gamma,baseline_points,samples,missed,missed_ratio\n";
    histCsv << "method,acr,nu,cubes,fraction\n";
    effCsv << "method,acr,samples,seconds,samples_per_ms,flagged,peak_frontier,frontier_ratio\n";
    plotCsv << "figure,method,group,series,x,value\n";
    auto num = [](const Json& v) { return v.is_null() ? std::string("NA") : fmt_num(v.get<double>()); };

    for (const auto& m : methods)
        for (const auto& [acr, n] : m.cubes)
            acrCsv << m.name << ',' << acr.to_string() << ',' << acr.level() << ',' << fmt_num(n) << "\n";

    // Volumes and shapes need basins and a Boltzmann factor.
    Json report;
    const auto basins = basins_of(c);
    if (!basins.empty()) {
        const double factor = resolve_factor(ctx);
        report["boltzmannFactor"] = factor;
        const MethodData& reference = methods.back();
        const Json refReport = volume_report(basins, reference.cubes, factor);
        Json vols = Json::object();
        for (const auto& m : methods) {
            const Json vr = volume_report(basins, m.cubes, factor);
            vols[m.name] = vr;
            for (std::size_t b = 0; b < basins.size(); ++b) {
                const Json& row = vr["basins"][b];
                volCsv << m.name << ',' << b + 1 << ',' << basins[b].bottom.to_string() << ','
                       << fmt_num(row["weightedVolume"].get<double>()) << ',' << num(row["relativeToSum"]) << ','
                       << num(row["relativeToUnion"]) << "\n";
                const Json& ref = refReport["basins"][b]["relativeToSum"];
                if (!row["relativeToSum"].is_null() && !ref.is_null())
                    plotCsv << "relative-volume-deviation," << m.name << ",basin" << b + 1 << ",sum," << b + 1 << ','
                            << fmt_num(row["relativeToSum"].get<double>() - ref.get<double>()) << "\n";
            }
            for (std::size_t b = 0; b < basins.size(); ++b)
                for (int variant = 1; variant <= 4; ++variant) {
                    ShapeOptions so;
                    so.variant = variant;
                    so.factor = factor;
                    so.unionDenominator = c.shapeUnionDenominator;
                    try {
                        const auto d = shape_distribution(m.cubes, basins[b], basins, so);
                        for (const auto& l : d.levels) {
                            shapeCsv << m.name << ',' << b + 1 << ',' << variant << ',' << l.level << ','
                                     << (l.defined ? "true" : "false") << ',' << fmt_num(l.value) << ','
                                     << fmt_num(l.weighted) << ',' << fmt_num(l.fraction) << "\n";
                            plotCsv << "shape-v" << variant << ',' << m.name << ",basin" << b + 1 << ",level,"
                                    << l.level << ',' << fmt_num(l.fraction) << "\n";
                        }
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::UndefinedLevel) throw;
                        shapeCsv << m.name << ',' << b + 1 << ',' << variant << ",NA,false,NA,NA,NA\n";
                    }
                }
        }
        report["volumes"] = vols;
    }

    // Coverage against the baseline points of each region the method sampled.
    for (const auto& m : methods) {
        if (m.samples.empty()) continue;
        for (const auto& [acr, keys] : baseline.points) {
            auto it = m.samples.find(acr);
            if (it == m.samples.end() || keys.empty()) continue;  // region not sampled by this method
            const std::size_t sigma = it->second.size();
            if (sigma == 0) {
                covCsv << m.name << ',' << acr.to_string() << ",NA," << keys.size() << ",0," << keys.size() << ",1\n";
                continue;
            }
            const double g = gamma(static_cast<double>(keys.size()), static_cast<double>(sigma));
            const auto cov = coverage_error(keys, baseline.grid, it->second, g);
            covCsv << m.name << ',' << acr.to_string() << ',' << fmt_num(g) << ',' << keys.size() << ',' << sigma << ','
                   << cov.missed << ',' << fmt_num(cov.missed_ratio()) << "\n";
            plotCsv << "coverage-error," << m.name << ',' << acr.to_string() << ",missed_ratio," << acr.level() << ','
                    << fmt_num(cov.missed_ratio()) << "\n";
            const auto h = coverage_histogram(keys, baseline.grid, it->second, g);
            for (std::size_t nu = 0; nu < h.counts.size(); ++nu) {
                histCsv << m.name << ',' << acr.to_string() << ',' << nu << ',' << h.counts[nu] << ','
                        << fmt_num(h.fraction(nu)) << "\n";
                plotCsv << "coverage-histogram," << m.name << ',' << acr.to_string() << ",nu," << nu << ','
                        << fmt_num(h.fraction(nu)) << "\n";
            }
        }
    }

    // Efficiency from the sampler summaries; times exist only for timed runs.
    for (const auto& m : methods)
        for (const Json& s : m.summaries) {
            const auto samples = s.at("countedCubes").get<std::size_t>();
            const auto peak = s.at("peakFrontier").get<std::size_t>();
            const bool timed = s.contains("wallTime");
            const double secs = timed ? s["wallTime"].get<double>() : 0.0;
            const bool flagged = samples == 0 || (timed && !(secs > 0.0));
            effCsv << m.name << ',' << s.at("acr").get<std::string>() << ',' << samples << ','
                   << (timed ? fmt_num(secs) : "NA") << ','
                   << (timed && !flagged ? fmt_num(static_cast<double>(samples) / (1000.0 * secs)) : "NA") << ','
                   << (flagged ? "true" : "false") << ',' << peak << ','
                   << (samples ? fmt_num(static_cast<double>(peak) / static_cast<double>(samples)) : "NA") << "\n";
        }

    ctx.out.write("reports/acr_volumes.csv", acrCsv.str());
    if (!basins.empty()) {
        ctx.out.write("reports/volumes.csv", volCsv.str());
        ctx.out.write("reports/shape.csv", shapeCsv.str());
    }
    ctx.out.write("reports/coverage.csv", covCsv.str());
    ctx.out.write("reports/histogram.csv", histCsv.str());
    ctx.out.write("reports/efficiency.csv", effCsv.str());
    ctx.out.write("reports/plot_long.csv", plotCsv.str());
    Json names = Json::array();
    for (const auto& m : methods) names.push_back(m.name);
    report["methods"] = names;
    ctx.out.write_json("reports/summary.json", report);
    ctx.counters = {{"methods", methods.size()}, {"baselinePoints", baseline.size()}};
}

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

}  // namespace detail

// Runs one command. Artifacts go under the configured output directory; a manifest is always written,
// and on failure every other file this command wrote is removed.
inline RunOutcome run(Command cmd, const RunConfig& config, const RunOptions& options = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = detail::utc_now();
    RunOutcome outcome;
    detail::RunContext ctx(config, options);
    try {
        switch (cmd) {
            case Command::SampleAcr: detail::cmd_sample_acr(ctx); break;
            case Command::SampleBasin: detail::cmd_sample_basin(ctx); break;
            case Command::Baseline: detail::cmd_baseline(ctx); break;
            case Command::McIngest: detail::cmd_mc_ingest(ctx); break;
            case Command::Measure: detail::cmd_measure(ctx); break;
        }
        ctx.out.commit();
        outcome.artifacts = ctx.out.written();
    } catch (const Error& e) {
        outcome.exitCode = exit_code_for(e.code());
        outcome.message = e.what();
    } catch (const std::exception& e) {
        outcome.exitCode = kExitDomain;
        outcome.message = std::string("unexpected failure: ") + e.what();
    }

    Json manifest;
    manifest["command"] = to_string(cmd);
    manifest["version"] = kVersion;
    manifest["status"] = outcome.exitCode == kExitOk ? "ok" : "failed";
    manifest["exitCode"] = outcome.exitCode;
    if (!outcome.message.empty()) manifest["message"] = outcome.message;
    manifest["config"] = serialize_config(config);
    manifest["configSource"] = options.configSource;
    manifest["inputs"] = ctx.inputs;
    Json outputs = Json::array();
    for (const auto& p : outcome.artifacts)
        outputs.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(ctx.outDir / p)}});
    manifest["outputs"] = outputs;
    manifest["counters"] = ctx.counters;
    manifest["started"] = started;
    manifest["wallTime"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    outcome.manifest = ctx.outDir / (std::string("manifest-") + to_string(cmd) + ".json");
    std::error_code ec;
    std::filesystem::create_directories(ctx.outDir, ec);
    std::ofstream mf(outcome.manifest, std::ios::trunc);
    if (mf) mf << manifest.dump(2) << "\n";
    if (!mf && outcome.exitCode == kExitOk) {
        outcome.exitCode = kExitConfig;
        outcome.message = "Io: cannot write " + outcome.manifest.string();
    }
    return outcome;
}

}  // namespace ucvol
