#pragma once
// Input readers, run configuration, and result/report serialization.

#include "measurements.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ucvol {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Number formatting

// Shortest text that reads back to the same double; locale independent.
inline std::string fmt_num(double v) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(const std::string& line) {
    const auto h = line.find('#');
    return trim(h == std::string::npos ? line : line.substr(0, h));
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string located(const std::string& source, std::size_t line, const std::string& msg) {
    return source + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace detail

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Point sets

// `id x y z radius` per line; '#' starts a comment.
inline PointSet read_points(std::istream& in, const std::string& label, const std::string& source = "<points>") {
    std::vector<Point> pts;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto fields = detail::split_ws(detail::strip_comment(line));
        if (fields.empty()) continue;
        if (fields.size() != 5)
            throw Error(ErrorCode::InvalidInput, detail::located(source, n, "expected 'id x y z radius'"));
        const auto id = detail::parse_int(fields[0]);
        std::array<double, 4> v{};
        for (std::size_t i = 0; i < 4; ++i) {
            const auto x = detail::parse_double(fields[i + 1]);
            if (!x) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad number '" + fields[i + 1] + "'"));
            v[i] = *x;
        }
        if (!id) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad point id '" + fields[0] + "'"));
        pts.push_back({static_cast<int>(*id), Vec3(v[0], v[1], v[2]), v[3]});
    }
    return PointSet(label, std::move(pts));
}

// Default radii (Å) by element for PDB input.
inline double element_radius(const std::string& element) {
    static const std::map<std::string, double> table{{"H", 1.20}, {"C", 1.70}, {"N", 1.55}, {"O", 1.52},
                                                    {"S", 1.80}, {"P", 1.80}, {"F", 1.47}, {"CL", 1.75},
                                                    {"SE", 1.90}, {"FE", 1.80}};
    auto it = table.find(element);
    return it == table.end() ? 1.70 : it->second;
}

// ATOM records only; the serial number becomes the point id.
inline PointSet read_pdb(std::istream& in, const std::string& label, const std::string& source = "<pdb>") {
    std::vector<Point> pts;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.rfind("ATOM", 0) != 0) continue;
        if (line.size() < 54) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "truncated ATOM record"));
        const auto serial = detail::parse_int(detail::trim(line.substr(6, 5)));
        const auto x = detail::parse_double(detail::trim(line.substr(30, 8)));
        const auto y = detail::parse_double(detail::trim(line.substr(38, 8)));
        const auto z = detail::parse_double(detail::trim(line.substr(46, 8)));
        if (!serial || !x || !y || !z)
            throw Error(ErrorCode::InvalidInput, detail::located(source, n, "malformed ATOM record"));
        std::string element = line.size() >= 78 ? detail::trim(line.substr(76, 2)) : std::string{};
        if (element.empty()) {
            // first letter of the atom name
            const std::string name = detail::trim(line.substr(12, 4));
            for (char c : name)
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    element = std::string(1, c);
                    break;
                }
        }
        for (auto& c : element) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        pts.push_back({static_cast<int>(*serial), Vec3(*x, *y, *z), element_radius(element)});
    }
    return PointSet(label, std::move(pts));
}

inline std::shared_ptr<const PointSet> load_point_set(const std::filesystem::path& path, const std::string& label) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open point set " + path.string());
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".pdb") return std::make_shared<const PointSet>(read_pdb(in, label, path.string()));
    return std::make_shared<const PointSet>(read_points(in, label, path.string()));
}

// ---------------------------------------------------------------------------
// Trajectories

// Six numbers per line: translation then rotation angles.
inline std::vector<Pose> read_trajectory(std::istream& in, const std::string& source = "<trajectory>") {
    std::vector<Pose> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto fields = detail::split_ws(detail::strip_comment(line));
        if (fields.empty()) continue;
        if (fields.size() != 6) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "expected six numbers"));
        Pose p;
        for (std::size_t i = 0; i < 6; ++i) {
            const auto v = detail::parse_double(fields[i]);
            if (!v) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad number '" + fields[i] + "'"));
            p.v[i] = *v;
        }
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string pointSetA;
    std::string pointSetB;
    ConstraintSystem constraints;
    std::vector<PointPair> contacts;
    Variant variant = Variant::Hybrid;
    std::array<double, 3> translationSteps{2.0, 2.0, 2.0};
    std::array<int, 3> rotationCounts{18, 18, 18};
    std::array<double, 6> gridOrigin{};
    double cayleyStep = 0.0;  // 0: a quarter of the smallest translation step
    FrontierOrder frontierOrder = FrontierOrder::MostProcessed;
    bool refineEstimates = true;
    std::size_t maxProcessedCubes = 0;
    std::vector<ACRDescriptor> basinBottoms;
    std::optional<double> boltzmannFactor;  // empty: estimate from the MC1 pseudo-atlas
    std::array<int, 6> baselineRefinement{2, 2, 2, 2, 2, 2};
    std::size_t baselineMaxPoses = 0;
    bool baselineContactsOnly = false;  // scan only the initial-contact region
    BaselineMembership baselineMembership = BaselineMembership::Exact;
    std::string trajectory;
    bool shapeUnionDenominator = false;
    std::string outputDirectory = "out";

    [[nodiscard]] GridSpec grid() const { return GridSpec(translationSteps, rotationCounts, gridOrigin); }
    [[nodiscard]] double effective_cayley_step() const {
        if (cayleyStep > 0.0) return cayleyStep;
        return *std::min_element(translationSteps.begin(), translationSteps.end()) / 4.0;
    }
    [[nodiscard]] SamplerOptions sampler_options() const {
        SamplerOptions o;
        o.variant = variant;
        o.grid = grid();
        o.cayleyStep = effective_cayley_step();
        o.order = frontierOrder;
        o.maxProcessed = maxProcessedCubes;
        o.refineEstimates = refineEstimates;
        return o;
    }
    [[nodiscard]] GridSpec baseline_grid() const { return nested_grid(grid(), baselineRefinement); }

    bool operator==(const RunConfig&) const = default;
};

inline FrontierOrder frontier_order_from(const std::string& s) {
    if (s == "lifo") return FrontierOrder::Lifo;
    if (s == "fifo") return FrontierOrder::Fifo;
    if (s == "most-processed") return FrontierOrder::MostProcessed;
    throw Error(ErrorCode::Config, "unknown frontier order '" + s + "'");
}

namespace detail {

struct IniEntry {
    std::string section, key, value;
    std::size_t line = 0;
};

inline std::vector<IniEntry> parse_ini(const std::string& text, const std::string& source,
                                       std::vector<std::string>& errors) {
    std::vector<IniEntry> out;
    std::istringstream in(text);
    std::string line, section;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                errors.push_back(located(source, n, "unterminated section header"));
                continue;
            }
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            errors.push_back(located(source, n, "expected 'key = value'"));
            continue;
        }
        if (section.empty()) {
            errors.push_back(located(source, n, "key outside any section"));
            continue;
        }
        out.push_back({section, trim(s.substr(0, eq)), strip_comment(s.substr(eq + 1)), n});
    }
    return out;
}

}  // namespace detail

// Parses INI text. Errors are collected with line numbers and thrown together; unknown keys only warn.
// `overrides` ("Section.key=value") are applied after the file, so command-line values win.
inline RunConfig parse_config(const std::string& text, std::vector<std::string>* warnings = nullptr,
                              const std::string& source = "<config>",
                              std::span<const std::string> overrides = {}) {
    std::vector<std::string> errors;
    auto entries = detail::parse_ini(text, source, errors);
    for (const auto& o : overrides) {
        const auto dot = o.find('.');
        const auto eq = o.find('=');
        if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
            errors.push_back("override '" + o + "': expected Section.key=value");
            continue;
        }
        entries.push_back({detail::trim(o.substr(0, dot)), detail::trim(o.substr(dot + 1, eq - dot - 1)),
                           detail::trim(o.substr(eq + 1)), 0});
    }

    RunConfig c;
    std::optional<int> declaredDimension;
    std::size_t dimensionLine = 0, contactLine = 0, modeLine = 0;
    std::map<int, PointPair> contacts;
    std::map<int, ACRDescriptor> bottoms;
    auto where = [&](const detail::IniEntry& e, const std::string& msg) {
        const std::string key = e.section + "." + e.key;
        return e.line ? detail::located(source, e.line, key + ": " + msg) : "override " + key + ": " + msg;
    };
    auto numbers = [&](const detail::IniEntry& e, std::size_t n) -> std::optional<std::vector<double>> {
        const auto f = detail::split_ws(e.value);
        if (f.size() != n) {
            errors.push_back(where(e, "expected " + std::to_string(n) + " number" + (n == 1 ? "" : "s")));
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& t : f) {
            const auto v = detail::parse_double(t);
            if (!v) {
                errors.push_back(where(e, "bad number '" + t + "'"));
                return std::nullopt;
            }
            out.push_back(*v);
        }
        return out;
    };
    auto count = [&](const detail::IniEntry& e) -> std::optional<std::size_t> {
        const auto v = detail::parse_int(e.value);
        if (!v || *v < 0) {
            errors.push_back(where(e, "expected a non-negative integer"));
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    };
    auto flag = [&](const detail::IniEntry& e) -> std::optional<bool> {
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        errors.push_back(where(e, "expected true or false"));
        return std::nullopt;
    };
    auto rule = [&](const detail::IniEntry& e, PairRule& r) {
        if (auto v = numbers(e, 2)) r = {(*v)[0], (*v)[1]};
    };
    auto indexed = [&](const detail::IniEntry& e, const std::string& prefix) -> std::optional<int> {
        if (e.key.rfind(prefix, 0) != 0) return std::nullopt;
        const auto v = detail::parse_int(e.key.substr(prefix.size()));
        if (!v || *v < 0) return std::nullopt;
        return static_cast<int>(*v);
    };

    for (const auto& e : entries) {
        const std::string& s = e.section;
        const std::string& k = e.key;
        if (s == "PointSetA" && k == "file") {
            c.pointSetA = e.value;
        } else if (s == "PointSetB" && k == "file") {
            c.pointSetB = e.value;
        } else if (s == "Constraint" && k == "activeLower") {
            rule(e, c.constraints.activeLower);
        } else if (s == "Constraint" && k == "activeUpper") {
            rule(e, c.constraints.activeUpper);
        } else if (s == "Constraint" && k == "collision") {
            rule(e, c.constraints.collision);
        } else if (s == "Constraint" && k == "targetFraction") {
            if (auto v = numbers(e, 1)) {
                if ((*v)[0] < 0.0 || (*v)[0] > 1.0) errors.push_back(where(e, "must lie in [0, 1]"));
                else c.constraints.targetFraction = (*v)[0];
            }
        } else if (s == "Constraint" && k == "axisRestraint") {
            if (e.value == "none") {
                c.constraints.axisRestraint.reset();
            } else if (auto v = numbers(e, 2)) {
                if ((*v)[0] > (*v)[1]) errors.push_back(where(e, "lower angle exceeds upper angle"));
                else c.constraints.axisRestraint = AngleInterval{(*v)[0], (*v)[1]};
            }
        } else if (s == "RootNodeCreation" && k == "dimension_of_initialContactGraphs") {
            if (auto v = detail::parse_int(e.value); v && *v >= 0 && *v <= 6) {
                declaredDimension = static_cast<int>(*v);
                dimensionLine = e.line;
            } else {
                errors.push_back(where(e, "expected an integer in [0, 6]"));
            }
        } else if (s == "Sampling" && indexed(e, "initial_Contact_")) {
            const auto f = detail::split_ws(e.value);
            const auto a = f.size() == 2 ? detail::parse_int(f[0]) : std::nullopt;
            const auto b = f.size() == 2 ? detail::parse_int(f[1]) : std::nullopt;
            if (!a || !b) {
                errors.push_back(where(e, "expected 'idA idB'"));
            } else {
                contacts[*indexed(e, "initial_Contact_")] = {static_cast<int>(*a), static_cast<int>(*b)};
                contactLine = std::max(contactLine, e.line);
            }
        } else if (s == "Sampling" && k == "cartesianIntersectionMode") {
            const auto v = detail::parse_int(e.value);
            if (!v || *v < 0 || *v > 4) {
                errors.push_back(where(e, "expected a mode in 0..4"));
            } else {
                c.variant = variant_from_mode(static_cast<int>(*v));
                modeLine = e.line;
            }
        } else if (s == "Sampling" && k == "cartesianSteps") {
            if (auto v = numbers(e, 6)) {
                bool ok = true;
                for (std::size_t i = 0; i < 3; ++i) {
                    if (!((*v)[i] > 0.0)) ok = false;
                    const double r = (*v)[i + 3];
                    if (!(r >= 1.0) || r != std::floor(r)) ok = false;
                }
                if (!ok) {
                    errors.push_back(where(e, "steps must be positive, rotation counts positive integers"));
                } else {
                    for (std::size_t i = 0; i < 3; ++i) {
                        c.translationSteps[i] = (*v)[i];
                        c.rotationCounts[i] = static_cast<int>((*v)[i + 3]);
                    }
                }
            }
        } else if (s == "Sampling" && k == "cayleyStep") {
            if (auto v = numbers(e, 1)) {
                if (!((*v)[0] >= 0.0)) errors.push_back(where(e, "must be positive (0 selects the default)"));
                else c.cayleyStep = (*v)[0];
            }
        } else if (s == "Sampling" && k == "gridOrigin") {
            if (auto v = numbers(e, 6)) std::copy(v->begin(), v->end(), c.gridOrigin.begin());
        } else if (s == "Sampling" && k == "frontierOrder") {
            try {
                c.frontierOrder = frontier_order_from(e.value);
            } catch (const Error&) {
                errors.push_back(where(e, "expected lifo, fifo or most-processed"));
            }
        } else if (s == "Sampling" && k == "refineEstimates") {
            if (auto v = flag(e)) c.refineEstimates = *v;
        } else if (s == "Sampling" && k == "maxProcessedCubes") {
            if (auto v = count(e)) c.maxProcessedCubes = *v;
        } else if (s == "Basin" && indexed(e, "bottom_")) {
            try {
                auto d = ACRDescriptor::parse(e.value);
                if (d.size() != 6) errors.push_back(where(e, "a basin bottom has exactly six pairs"));
                else bottoms[*indexed(e, "bottom_")] = std::move(d);
            } catch (const Error& err) {
                errors.push_back(where(e, err.what()));
            }
        } else if (s == "Basin" && k == "boltzmannFactor") {
            if (e.value == "auto") {
                c.boltzmannFactor.reset();
            } else if (auto v = numbers(e, 1)) {
                if (!((*v)[0] > 0.0)) errors.push_back(where(e, "must be positive or 'auto'"));
                else c.boltzmannFactor = (*v)[0];
            }
        } else if (s == "Baseline" && k == "refinement") {
            if (auto v = numbers(e, 6)) {
                bool ok = true;
                for (std::size_t i = 0; i < 6; ++i) {
                    if (!((*v)[i] >= 1.0) || (*v)[i] != std::floor((*v)[i])) ok = false;
                    else c.baselineRefinement[i] = static_cast<int>((*v)[i]);
                }
                if (!ok) errors.push_back(where(e, "expected six positive integers"));
            }
        } else if (s == "Baseline" && k == "maxPoses") {
            if (auto v = count(e)) c.baselineMaxPoses = *v;
        } else if (s == "Baseline" && k == "scope") {
            if (e.value == "all") c.baselineContactsOnly = false;
            else if (e.value == "contacts") c.baselineContactsOnly = true;
            else errors.push_back(where(e, "expected all or contacts"));
        } else if (s == "Baseline" && k == "membership") {
            if (e.value == "exact") c.baselineMembership = BaselineMembership::Exact;
            else if (e.value == "containing") c.baselineMembership = BaselineMembership::Containing;
            else errors.push_back(where(e, "expected exact or containing"));
        } else if (s == "MonteCarlo" && k == "trajectory") {
            c.trajectory = e.value;
        } else if (s == "Measure" && k == "shapeUnionDenominator") {
            if (auto v = flag(e)) c.shapeUnionDenominator = *v;
        } else if (s == "Output" && k == "directory") {
            if (e.value.empty()) errors.push_back(where(e, "must not be empty"));
            else c.outputDirectory = e.value;
        } else if (warnings) {
            warnings->push_back(e.line ? detail::located(source, e.line, "unknown key " + s + "." + k + " ignored")
                                       : "override: unknown key " + s + "." + k + " ignored");
        }
    }
    for (const auto& [i, p] : contacts) c.contacts.push_back(p);
    for (auto& [i, b] : bottoms) c.basinBottoms.push_back(b);

    // cross-key checks
    const auto where_line = [&](std::size_t line, const std::string& msg) {
        return line ? detail::located(source, line, msg) : source + ": " + msg;
    };
    try {
        if (!c.contacts.empty()) (void)ACRDescriptor(c.contacts);
    } catch (const Error& err) {
        errors.push_back(where_line(contactLine, err.what()));
    }
    if (declaredDimension && !c.contacts.empty() && *declaredDimension != 6 - static_cast<int>(c.contacts.size()))
        errors.push_back(where_line(dimensionLine, "dimension " + std::to_string(*declaredDimension) + " does not match " +
                                                       std::to_string(c.contacts.size()) + " initial contacts"));
    if (c.variant == Variant::Thick && !c.contacts.empty() && c.contacts.size() != 1)
        errors.push_back(where_line(modeLine, "mode 2 (thick) needs exactly one initial contact"));
    if (c.baselineContactsOnly && c.contacts.empty())
        errors.push_back(source + ": Baseline.scope = contacts needs initial contacts");
    if (c.baselineMembership == BaselineMembership::Containing && !c.baselineContactsOnly)
        errors.push_back(source + ": Baseline.membership = containing needs Baseline.scope = contacts");
    if (c.variant == Variant::Thick && !c.basinBottoms.empty())
        errors.push_back(where_line(modeLine, "mode 2 (thick) cannot sample basins"));
    for (std::size_t a = 0; a < 2; ++a) {
        const PairRule& lo = c.constraints.activeLower;
        const PairRule& hi = c.constraints.activeUpper;
        const double r = a == 0 ? 0.5 : 5.0;  // bounds are affine in the radius sum, so two probes suffice
        if (lo.bound(r, r) > hi.bound(r, r)) {
            errors.push_back(source + ": Constraint.activeLower exceeds Constraint.activeUpper");
            break;
        }
    }
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
        throw Error(ErrorCode::Config, msg);
    }
    return c;
}

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream o;
    auto nums = [](auto const& arr) {
        std::string s;
        for (const auto& v : arr) {
            if (!s.empty()) s += ' ';
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) s += fmt_num(v);
            else s += std::to_string(v);
        }
        return s;
    };
    auto rule = [](const PairRule& r) { return fmt_num(r.lambda) + " " + fmt_num(r.delta); };
    o << "[PointSetA]\nfile = " << c.pointSetA << "\n\n";
    o << "[PointSetB]\nfile = " << c.pointSetB << "\n\n";
    o << "[Constraint]\n";
    o << "activeLower = " << rule(c.constraints.activeLower) << "\n";
    o << "activeUpper = " << rule(c.constraints.activeUpper) << "\n";
    o << "collision = " << rule(c.constraints.collision) << "\n";
    o << "targetFraction = " << fmt_num(c.constraints.targetFraction) << "\n";
    o << "axisRestraint = "
      << (c.constraints.axisRestraint
              ? fmt_num(c.constraints.axisRestraint->lo) + " " + fmt_num(c.constraints.axisRestraint->hi)
              : std::string("none"))
      << "\n\n";
    o << "[Sampling]\n";
    for (std::size_t i = 0; i < c.contacts.size(); ++i)
        o << "initial_Contact_" << i + 1 << " = " << c.contacts[i].a << " " << c.contacts[i].b << "\n";
    o << "cartesianIntersectionMode = " << static_cast<int>(c.variant) << "\n";
    o << "cartesianSteps = " << nums(c.translationSteps) << " " << nums(c.rotationCounts) << "\n";
    o << "cayleyStep = " << fmt_num(c.cayleyStep) << "\n";
    o << "gridOrigin = " << nums(c.gridOrigin) << "\n";
    o << "frontierOrder = " << to_string(c.frontierOrder) << "\n";
    o << "refineEstimates = " << (c.refineEstimates ? "true" : "false") << "\n";
    o << "maxProcessedCubes = " << c.maxProcessedCubes << "\n\n";
    o << "[Basin]\n";
    for (std::size_t i = 0; i < c.basinBottoms.size(); ++i)
        o << "bottom_" << i + 1 << " = " << c.basinBottoms[i].to_string() << "\n";
    o << "boltzmannFactor = " << (c.boltzmannFactor ? fmt_num(*c.boltzmannFactor) : std::string("auto")) << "\n\n";
    o << "[Baseline]\nrefinement = " << nums(c.baselineRefinement) << "\nmaxPoses = " << c.baselineMaxPoses
      << "\nscope = " << (c.baselineContactsOnly ? "contacts" : "all") << "\nmembership = "
      << (c.baselineMembership == BaselineMembership::Exact ? "exact" : "containing") << "\n\n";
    o << "[MonteCarlo]\ntrajectory = " << c.trajectory << "\n\n";
    o << "[Measure]\nshapeUnionDenominator = " << (c.shapeUnionDenominator ? "true" : "false") << "\n\n";
    o << "[Output]\ndirectory = " << c.outputDirectory << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Sample results

inline FlipSignature parse_flip(const std::string& s) {
    FlipSignature f;
    if (s == "0") return f;
    if (s.size() > 32) throw Error(ErrorCode::InvalidInput, "flip signature too long");
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '+') f.bits |= 1u << k;
        else if (s[k] != '-') throw Error(ErrorCode::InvalidInput, "malformed flip signature '" + s + "'");
    }
    f.count = static_cast<std::uint8_t>(s.size());
    return f;
}

inline constexpr const char* kSampleHeader = "flip,i1,i2,i3,i4,i5,i6,tx,ty,tz,rx,ry,rz";

// One counted cube per line, sorted by cube key.
inline void write_samples_csv(std::ostream& o, const ACRSampleResult& r) {
    std::vector<const CountedSample*> rows;
    for (const auto& s : r.samples) rows.push_back(&s);
    std::sort(rows.begin(), rows.end(), [](const auto* x, const auto* y) { return x->key < y->key; });
    o << kSampleHeader << "\n";
    for (const auto* s : rows) {
        o << s->flip.to_string();
        for (int k : s->key) o << ',' << k;
        for (double v : s->pose.v) o << ',' << fmt_num(v);
        o << "\n";
    }
}

inline std::vector<CountedSample> read_samples_csv(std::istream& in, const std::string& source = "<samples>") {
    std::vector<CountedSample> out;
    std::string line;
    std::size_t n = 0;
    if (!std::getline(in, line) || detail::trim(line) != kSampleHeader)
        throw Error(ErrorCode::InvalidInput, detail::located(source, 1, "missing sample header"));
    ++n;
    while (std::getline(in, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, ',')) f.push_back(detail::trim(t));
        if (f.size() != 13) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "expected 13 fields"));
        CountedSample s;
        s.flip = parse_flip(f[0]);
        for (std::size_t a = 0; a < 6; ++a) {
            const auto k = detail::parse_int(f[1 + a]);
            const auto v = detail::parse_double(f[7 + a]);
            if (!k || !v) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad number"));
            s.key[a] = static_cast<int>(*k);
            s.pose.v[a] = *v;
        }
        out.push_back(s);
    }
    return out;
}

inline Json sample_summary(const ACRSampleResult& r, bool timing) {
    Json j;
    j["acr"] = r.acr.to_string();
    j["variant"] = to_string(r.variant);
    j["countedCubes"] = r.counted();
    j["processed"] = r.counters.processed;
    j["solves"] = r.counters.solves;
    j["peakFrontier"] = r.counters.peakFrontier;
    if (timing) j["wallTime"] = r.seconds;
    j["emptyACR"] = r.emptyACR;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    j["counters"] = {{"basePoints", r.counters.basePoints},
                     {"seeds", r.counters.seeds},
                     {"intersections", r.counters.intersections},
                     {"accepted", r.counters.accepted},
                     {"refined", r.counters.refined},
                     {"discardedPreimage", r.counters.discardedPreimage},
                     {"otherFlip", r.counters.otherFlip},
                     {"discardedCollision", r.counters.discardedCollision},
                     {"discardedAxis", r.counters.discardedAxis},
                     {"hybridRetries", r.counters.hybridRetries}};
    return j;
}

// File-name form of a descriptor.
inline std::string acr_slug(const ACRDescriptor& d) {
    std::string s = d.to_string();
    std::replace(s.begin(), s.end(), ';', '_');
    return s;
}

// ---------------------------------------------------------------------------
// Baseline points

inline constexpr const char* kBaselineHeader = "acr,i1,i2,i3,i4,i5,i6";

inline void write_baseline_csv(std::ostream& o, const BaselineGrid& g) {
    o << kBaselineHeader << "\n";
    for (const auto& [acr, keys] : g.points)
        for (const auto& k : keys) {
            o << acr.to_string();
            for (int v : k) o << ',' << v;
            o << "\n";
        }
}

inline Json baseline_summary(const BaselineGrid& g) {
    Json j;
    Json steps = Json::array(), periods = Json::array(), origin = Json::array();
    for (std::size_t a = 0; a < 6; ++a) {
        steps.push_back(g.grid.step(a));
        periods.push_back(g.grid.period(a));
        origin.push_back(g.grid.origin(a));
    }
    j["grid"] = {{"steps", steps}, {"periods", periods}, {"origin", origin}};
    j["scanned"] = g.scanned;
    j["points"] = g.size();
    Json per = Json::object();
    for (const auto& [acr, keys] : g.points) per[acr.to_string()] = keys.size();
    j["perACR"] = per;
    return j;
}

inline BaselineGrid read_baseline(std::istream& csv, const Json& summary, const std::string& source = "<baseline>") {
    BaselineGrid g;
    try {
        const auto& gs = summary.at("grid");
        std::array<double, 3> steps{};
        std::array<int, 3> periods{};
        std::array<double, 6> origin{};
        for (std::size_t a = 0; a < 6; ++a) origin[a] = gs.at("origin").at(a).get<double>();
        for (std::size_t a = 0; a < 3; ++a) {
            steps[a] = gs.at("steps").at(a).get<double>();
            periods[a] = gs.at("periods").at(a + 3).get<int>();
        }
        g.grid = GridSpec(steps, periods, origin);
        g.scanned = summary.at("scanned").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, source + ": malformed baseline summary: " + e.what());
    }
    std::string line;
    std::size_t n = 1;
    if (!std::getline(csv, line) || detail::trim(line) != kBaselineHeader)
        throw Error(ErrorCode::InvalidInput, detail::located(source, 1, "missing baseline header"));
    while (std::getline(csv, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, ',')) f.push_back(detail::trim(t));
        if (f.size() != 7) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "expected 7 fields"));
        CubeKey k{};
        for (std::size_t a = 0; a < 6; ++a) {
            const auto v = detail::parse_int(f[1 + a]);
            if (!v) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad index"));
            k[a] = static_cast<int>(*v);
        }
        g.points[ACRDescriptor::parse(f[0])].push_back(k);
    }
    for (auto& [acr, keys] : g.points) std::sort(keys.begin(), keys.end());
    return g;
}

// ---------------------------------------------------------------------------
// Pseudo-atlas

inline constexpr const char* kAtlasHeader = "acr,level,samples,cubes";

inline void write_atlas_csv(std::ostream& o, const PseudoAtlas& a) {
    o << kAtlasHeader << "\n";
    for (const auto& [acr, e] : a.entries)
        o << acr.to_string() << ',' << acr.level() << ',' << e.samples << ',' << e.cubes.size() << "\n";
}

inline void write_atlas_poses_csv(std::ostream& o, const PseudoAtlas& a) {
    o << "acr,tx,ty,tz,rx,ry,rz\n";
    for (const auto& [acr, e] : a.entries)
        for (const Pose& p : e.poses) {
            o << acr.to_string();
            for (double v : p.v) o << ',' << fmt_num(v);
            o << "\n";
        }
}

inline std::map<ACRDescriptor, std::vector<Pose>> read_atlas_poses(std::istream& in,
                                                                   const std::string& source = "<atlas>") {
    std::map<ACRDescriptor, std::vector<Pose>> out;
    std::string line;
    std::size_t n = 1;
    if (!std::getline(in, line) || detail::trim(line) != "acr,tx,ty,tz,rx,ry,rz")
        throw Error(ErrorCode::InvalidInput, detail::located(source, 1, "missing pose header"));
    while (std::getline(in, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, ',')) f.push_back(detail::trim(t));
        if (f.size() != 7) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "expected 7 fields"));
        Pose p;
        for (std::size_t a = 0; a < 6; ++a) {
            const auto v = detail::parse_double(f[1 + a]);
            if (!v) throw Error(ErrorCode::InvalidInput, detail::located(source, n, "bad number"));
            p.v[a] = *v;
        }
        out[ACRDescriptor::parse(f[0])].push_back(p);
    }
    return out;
}

}  // namespace ucvol
