#pragma once
// Baseline grid oracle, basin volumes, shape distributions, coverage and efficiency reports.

#include "sampler.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <set>

namespace ucvol {

// ---------------------------------------------------------------------------
// Baseline grid

struct BaselineGrid {
    GridSpec grid;
    std::map<ACRDescriptor, std::vector<CubeKey>> points;  // fine lattice indices, sorted
    std::size_t scanned = 0;

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [acr, keys] : points) n += keys.size();
        return n;
    }
    [[nodiscard]] Pose pose_of(const CubeKey& k) const {
        Pose p;
        for (std::size_t a = 0; a < 6; ++a) p.v[a] = grid.origin(a) + k[a] * grid.step(a);
        return p;
    }
    [[nodiscard]] std::span<const CubeKey> of(const ACRDescriptor& acr) const {
        auto it = points.find(acr);
        if (it == points.end()) return {};
        return it->second;
    }
    [[nodiscard]] std::vector<CubeKey> all() const {
        std::vector<CubeKey> out;
        for (const auto& [acr, keys] : points) out.insert(out.end(), keys.begin(), keys.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

namespace detail {

struct ZInterval {
    double lo = 0.0, hi = -1.0;
};

// Spherical shell lo <= |t - centre| <= hi in translation space.
struct Shell {
    Vec3 centre;
    double lo = 0.0, hi = 0.0;

    [[nodiscard]] bool contains(const Vec3& t) const {
        const double d = (t - centre).norm();
        return d >= lo && d <= hi;
    }
    // z-intervals of the shell on the column through (x, y); padded so rounding never drops a point.
    [[nodiscard]] std::size_t column(double x, double y, std::array<ZInterval, 2>& out) const {
        constexpr double pad = 1e-9;
        const double rr = (x - centre.x()) * (x - centre.x()) + (y - centre.y()) * (y - centre.y());
        const double outer = hi * hi - rr;
        if (outer < -pad) return 0;
        const double zo = std::sqrt(std::max(outer, 0.0)) + pad;
        const double inner = lo * lo - rr;
        if (inner <= pad) {
            out[0] = {centre.z() - zo, centre.z() + zo};
            return 1;
        }
        const double zi = std::sqrt(inner) - pad;
        out[0] = {centre.z() - zo, centre.z() - zi};
        out[1] = {centre.z() + zi, centre.z() + zo};
        return 2;
    }
};

// Intersection of two sorted interval lists.
inline std::vector<ZInterval> intersect(const std::vector<ZInterval>& x, std::span<const ZInterval> y) {
    std::vector<ZInterval> out;
    for (const auto& a : x)
        for (const auto& b : y) {
            const ZInterval c{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
            if (c.lo <= c.hi) out.push_back(c);
        }
    return out;
}

inline int index_ceil(double v, double origin, double step) { return static_cast<int>(std::ceil((v - origin) / step)); }
inline int index_floor(double v, double origin, double step) {
    return static_cast<int>(std::floor((v - origin) / step));
}

}  // namespace detail

// Exact: each pose belongs to the one contact set selected with the active interval as inner interval.
// Containing: with a filter, every collision-free pose meeting the filter's intervals, whatever else is active.
enum class BaselineMembership : std::uint8_t { Exact, Containing };

// Exhaustive scan of the fine grid. Each feasible pose is assigned to its contact set with the active
// interval as the inner interval; with a filter only poses of that contact set are kept.
// Per rotation only lattice points inside some contact shell can be feasible, so only those are visited.
// `budget` caps the projected number of visited poses (0 = no cap). `visit(acr, key)` sees every kept
// pose in scan order; the return value is the number of poses examined.
template <class Visitor>
std::size_t baseline_scan(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B,
                          const ConstraintSystem& sys, const std::optional<ACRDescriptor>& filter,
                          const GridSpec& fine, std::size_t budget, BaselineMembership membership,
                          Visitor&& visit) {
    const PoseClassifier classifier(A, B, sys);
    const BoundTable& bounds = classifier.bounds();
    std::size_t scanned = 0;
    for (std::size_t a = 3; a < 6; ++a)
        if (fine.period(a) <= 0) throw Error(ErrorCode::InvalidInput, "baseline rotation axes must be periodic");
    if (filter && filter->empty()) return scanned;
    const bool containing = filter && membership == BaselineMembership::Containing;

    // Unfiltered: every pair's shell, a point belonging to its first shell. Filtered: all Q shells at once.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (filter) {
        for (const PointPair& p : filter->pairs()) pairs.emplace_back(A->index_of(p.a), B->index_of(p.b));
    } else {
        for (std::size_t i = 0; i < A->size(); ++i)
            for (std::size_t j = 0; j < B->size(); ++j) pairs.emplace_back(i, j);
    }
    std::vector<std::vector<std::size_t>> groups;  // shells required together
    if (filter) {
        groups.emplace_back();
        for (std::size_t s = 0; s < pairs.size(); ++s) groups[0].push_back(s);
    } else {
        for (std::size_t s = 0; s < pairs.size(); ++s) groups.push_back({s});
    }

    const double extent = bounds.max_upper() + A->max_norm() + B->max_norm();
    const double cell = fine.step(0) * fine.step(1) * fine.step(2);
    double perRotation = 0.0;
    for (const auto& g : groups) {
        const auto [i, j] = pairs[g[0]];
        const double hi = bounds.upper(i, j), lo = bounds.lower(i, j);
        perRotation += 4.0 / 3.0 * std::numbers::pi * (hi * hi * hi - lo * lo * lo) / cell;
    }
    const double rotations = static_cast<double>(fine.period(3)) * fine.period(4) * fine.period(5);
    const double projected = rotations * perRotation;
    if (budget && projected > static_cast<double>(budget))
        throw Error(ErrorCode::BudgetExceeded, "baseline scan of about " + std::to_string(std::llround(projected)) +
                                                   " poses exceeds the cap of " + std::to_string(budget));

    std::vector<PairDistance> scratch;
    std::vector<detail::Shell> shells(pairs.size());
    std::vector<detail::ZInterval> zs;
    std::array<detail::ZInterval, 2> col{};
    CubeKey key{};
    for (key[3] = 0; key[3] < fine.period(3); ++key[3])
        for (key[4] = 0; key[4] < fine.period(4); ++key[4])
            for (key[5] = 0; key[5] < fine.period(5); ++key[5]) {
                const Mat3 r = rotation_matrix(fine.origin(3) + key[3] * fine.step(3),
                                               fine.origin(4) + key[4] * fine.step(4),
                                               fine.origin(5) + key[5] * fine.step(5));
                if (!classifier.axis_ok(r)) continue;
                for (std::size_t s = 0; s < pairs.size(); ++s) {
                    const auto [i, j] = pairs[s];
                    shells[s] = {(*A)[i].position - r * (*B)[j].position, bounds.lower(i, j), bounds.upper(i, j)};
                }
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    const auto& group = groups[g];
                    std::array<double, 2> lo{-extent, -extent}, hi{extent, extent};
                    for (std::size_t s : group)
                        for (int a = 0; a < 2; ++a) {
                            lo[a] = std::max(lo[a], shells[s].centre[a] - shells[s].hi);
                            hi[a] = std::min(hi[a], shells[s].centre[a] + shells[s].hi);
                        }
                    const int x0 = detail::index_ceil(lo[0], fine.origin(0), fine.step(0));
                    const int x1 = detail::index_floor(hi[0], fine.origin(0), fine.step(0));
                    const int y0 = detail::index_ceil(lo[1], fine.origin(1), fine.step(1));
                    const int y1 = detail::index_floor(hi[1], fine.origin(1), fine.step(1));
                    for (key[0] = x0; key[0] <= x1; ++key[0])
                        for (key[1] = y0; key[1] <= y1; ++key[1]) {
                            const double x = fine.origin(0) + key[0] * fine.step(0);
                            const double y = fine.origin(1) + key[1] * fine.step(1);
                            zs.assign(1, {-extent, extent});
                            for (std::size_t s : group) {
                                const std::size_t n = shells[s].column(x, y, col);
                                zs = detail::intersect(zs, std::span(col.data(), n));
                                if (zs.empty()) break;
                            }
                            for (const auto& z : zs)
                                for (key[2] = detail::index_ceil(z.lo, fine.origin(2), fine.step(2));
                                     key[2] <= detail::index_floor(z.hi, fine.origin(2), fine.step(2)); ++key[2]) {
                                    const Vec3 t(x, y, fine.origin(2) + key[2] * fine.step(2));
                                    if (!filter) {
                                        // a point is scanned under the first shell holding it
                                        bool earlier = false;
                                        for (std::size_t e = 0; e < g && !earlier; ++e) earlier = shells[e].contains(t);
                                        if (earlier) continue;
                                    }
                                    ++scanned;
                                    if (containing) {
                                        // the column ranges are padded, so recheck the intervals exactly
                                        bool ok = classifier.collision_free(r, t);
                                        for (std::size_t k = 0; k < pairs.size() && ok; ++k) {
                                            const auto [i, j] = pairs[k];
                                            const double d = ((*A)[i].position - (r * (*B)[j].position + t)).norm();
                                            ok = d >= bounds.lower(i, j) && d <= bounds.upper(i, j);
                                        }
                                        if (ok) visit(*filter, std::as_const(key));
                                        continue;
                                    }
                                    const auto cls = classifier.classify(r, t, InnerRule::Active, scratch);
                                    if (cls.rejection != Rejection::None) continue;
                                    if (filter && cls.acr != *filter) continue;
                                    // every contact must sit inside its own interval
                                    bool inside = true;
                                    for (const auto& pd : scratch)
                                        if (cls.acr.contains(pd.pair))
                                            inside = inside && pd.distance >= bounds.lower(pd.i, pd.j) &&
                                                     pd.distance <= bounds.upper(pd.i, pd.j);
                                    if (!inside) continue;
                                    visit(cls.acr, std::as_const(key));
                                }
                        }
                }
            }
    return scanned;
}

inline BaselineGrid baseline_enumerate(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B,
                                       const ConstraintSystem& sys, const std::optional<ACRDescriptor>& filter,
                                       const GridSpec& fine, std::size_t budget = 0,
                                       BaselineMembership membership = BaselineMembership::Exact) {
    BaselineGrid out;
    out.grid = fine;
    out.scanned = baseline_scan(std::move(A), std::move(B), sys, filter, fine, budget, membership,
                                [&](const ACRDescriptor& acr, const CubeKey& k) { out.points[acr].push_back(k); });
    for (auto& [acr, keys] : out.points) std::sort(keys.begin(), keys.end());
    return out;
}

// Maps fine lattice points to the coarse cubes holding them. The fine origin may sit a fraction of a fine
// step above the coarse one; with no offset, a point on a shared face belongs to every cube around it.
class CubeDeriver {
public:
    CubeDeriver(const GridSpec& fine, const GridSpec& coarse) : coarse_(coarse) {
        for (std::size_t a = 0; a < 6; ++a) {
            const double m = coarse.step(a) / fine.step(a);
            const double r = std::round(m);
            if (r < 1 || std::abs(m - r) > 1e-9 * m)
                throw Error(ErrorCode::InvalidInput, "coarse steps must be integer multiples of the fine steps");
            ratio_[a] = static_cast<int>(r);
            const double d = (fine.period(a) ? angle_delta(fine.origin(a), coarse.origin(a))
                                             : fine.origin(a) - coarse.origin(a)) /
                             fine.step(a);
            const double whole = std::floor(d + 1e-9);
            shift_[a] = static_cast<int>(whole);
            onFaces_[a] = std::abs(d - whole) <= 1e-9;
        }
    }

    void add(const CubeKey& fineKey) {
        std::array<std::array<int, 2>, 6> choice{};
        std::array<std::size_t, 6> n{};
        for (std::size_t a = 0; a < 6; ++a) {
            const int m = ratio_[a];
            const int p = fineKey[a] + shift_[a];
            const int c = p >= 0 ? p / m : -((-p + m - 1) / m);
            choice[a][n[a]++] = coarse_.wrap_index(a, c);
            if (onFaces_[a] && p - c * m == 0) choice[a][n[a]++] = coarse_.wrap_index(a, c - 1);
        }
        std::array<std::size_t, 6> idx{};
        while (true) {
            CubeKey k{};
            for (std::size_t a = 0; a < 6; ++a) k[a] = choice[a][idx[a]];
            cubes_.insert(k);
            std::size_t a = 0;
            while (a < 6 && ++idx[a] == n[a]) idx[a++] = 0;
            if (a == 6) break;
        }
    }

    [[nodiscard]] const std::unordered_set<CubeKey, CubeKeyHash>& cubes() const { return cubes_; }
    [[nodiscard]] std::unordered_set<CubeKey, CubeKeyHash> take() { return std::move(cubes_); }

private:
    GridSpec coarse_;
    std::array<int, 6> ratio_{}, shift_{};
    std::array<bool, 6> onFaces_{};
    std::unordered_set<CubeKey, CubeKeyHash> cubes_;
};

inline std::unordered_set<CubeKey, CubeKeyHash> derive_cubes(std::span<const CubeKey> finePoints,
                                                             const GridSpec& fine, const GridSpec& coarse) {
    CubeDeriver d(fine, coarse);
    for (const CubeKey& k : finePoints) d.add(k);
    return d.take();
}

// Cell-centred companion of `coarse`: `ratio` points per coarse step on every axis, none on a coarse face.
inline GridSpec nested_grid(const GridSpec& coarse, std::array<int, 6> ratio) {
    std::array<double, 3> steps{};
    std::array<int, 3> periods{};
    std::array<double, 6> origin{};
    for (std::size_t a = 0; a < 6; ++a) {
        if (ratio[a] < 1) throw Error(ErrorCode::InvalidInput, "refinement ratios must be positive");
        const double h = coarse.step(a) / ratio[a];
        origin[a] = coarse.origin(a) + 0.5 * h;
        if (a < 3) steps[a] = h;
        else periods[a - 3] = coarse.period(a) * ratio[a];
    }
    return GridSpec(steps, periods, origin);
}

template <class Set>
double jaccard(const Set& x, const Set& y) {
    std::size_t common = 0;
    for (const auto& k : x) common += y.count(k);
    const std::size_t u = x.size() + y.size() - common;
    return u == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(u);
}

// ---------------------------------------------------------------------------
// Basin volumes

inline constexpr int kLevels = 5;  // energy levels 1..5 (|Q| = 5..1)

// Sum over levels k = 1..5 of B^(5-k) V_k; perLevel[k-1] holds V_k.
inline double weighted_basin_volume(std::span<const double> perLevel, double factor) {
    if (perLevel.size() != kLevels) throw Error(ErrorCode::InvalidInput, "expected five level volumes");
    double v = 0.0;
    for (int k = 1; k <= kLevels; ++k) {
        if (perLevel[static_cast<std::size_t>(k - 1)] < 0.0)
            throw Error(ErrorCode::InvalidInput, "level volumes must be non-negative");
        v += std::pow(factor, kLevels - k) * perLevel[static_cast<std::size_t>(k - 1)];
    }
    return v;
}

using AcrVolumes = std::map<ACRDescriptor, double>;

inline double volume_of(const AcrVolumes& volumes, const ACRDescriptor& acr) {
    auto it = volumes.find(acr);
    return it == volumes.end() ? 0.0 : it->second;
}

// Per-level volumes V_1..V_5 of a basin's members.
inline std::array<double, kLevels> basin_level_volumes(const Basin& basin, const AcrVolumes& volumes) {
    std::array<double, kLevels> v{};
    for (const auto& m : basin.members) {
        const int k = m.level();
        if (k >= 1 && k <= kLevels) v[static_cast<std::size_t>(k - 1)] += volume_of(volumes, m);
    }
    return v;
}

inline double basin_volume(const Basin& basin, const AcrVolumes& volumes, double factor) {
    const auto v = basin_level_volumes(basin, volumes);
    return weighted_basin_volume(v, factor);
}

// Weighted volume of the union of basins: every shared region counted once.
inline double union_volume(std::span<const Basin> basins, const AcrVolumes& volumes, double factor) {
    std::set<ACRDescriptor> seen;
    std::array<double, kLevels> v{};
    for (const Basin& b : basins)
        for (const auto& m : b.members) {
            const int k = m.level();
            if (k < 1 || k > kLevels || !seen.insert(m).second) continue;
            v[static_cast<std::size_t>(k - 1)] += volume_of(volumes, m);
        }
    return weighted_basin_volume(v, factor);
}

enum class RelativeMode : std::uint8_t { Sum, Union };

inline std::vector<double> relative_volumes(std::span<const double> basinVolumes, RelativeMode mode,
                                            double unionVolume = 0.0) {
    double denom = 0.0;
    if (mode == RelativeMode::Sum) {
        for (double v : basinVolumes) denom += v;
    } else {
        denom = unionVolume;
    }
    if (!(denom > 0.0)) throw Error(ErrorCode::ZeroDenominator, "relative volumes need a positive total");
    std::vector<double> out;
    for (double v : basinVolumes) out.push_back(v / denom);
    return out;
}

// ---------------------------------------------------------------------------
// Shape distributions

struct ShapeLevel {
    int level = 0;
    bool defined = true;
    double value = 0.0;     // the level measure before weighting
    double weighted = 0.0;  // value * B^(5-k)
    double fraction = 0.0;
};

struct ShapeDistribution {
    int variant = 1;
    std::array<ShapeLevel, kLevels> levels{};
    std::vector<int> undefinedLevels;
};

struct ShapeOptions {
    int variant = 1;
    double factor = 1.0;
    bool unionDenominator = false;  // variant 2: count shared regions once in the all-basin total
};

// `samples` maps each region to the method's sample count (or volume). Level k sums the basin's members.
inline ShapeDistribution shape_distribution(const AcrVolumes& samples, const Basin& basin,
                                            std::span<const Basin> allBasins, const ShapeOptions& opt) {
    if (opt.variant < 1 || opt.variant > 4) throw Error(ErrorCode::InvalidInput, "shape variant must be 1..4");
    if (allBasins.empty() && opt.variant > 1) throw Error(ErrorCode::InvalidInput, "basin list is empty");
    ShapeDistribution d;
    d.variant = opt.variant;
    const auto own = basin_level_volumes(basin, samples);

    // Totals over all basins: samples per level (disjoint or once), regions per level.
    std::array<double, kLevels> allSamples{}, onceSamples{}, regions{};
    std::set<ACRDescriptor> seen;
    for (const Basin& b : allBasins)
        for (const auto& m : b.members) {
            const int k = m.level();
            if (k < 1 || k > kLevels) continue;
            const auto i = static_cast<std::size_t>(k - 1);
            allSamples[i] += volume_of(samples, m);
            regions[i] += 1.0;
            if (seen.insert(m).second) onceSamples[i] += volume_of(samples, m);
        }

    double total = 0.0;
    for (int k = 1; k <= kLevels; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        ShapeLevel& l = d.levels[i];
        l.level = k;
        double denom = 1.0;
        switch (opt.variant) {
            case 1: break;
            case 2: denom = opt.unionDenominator ? onceSamples[i] : allSamples[i]; break;
            case 3: denom = regions[i] > 0.0 ? allSamples[i] / regions[i] : 0.0; break;
            case 4: denom = allSamples[i] / static_cast<double>(allBasins.size()); break;
        }
        if (!(denom > 0.0)) {
            l.defined = false;
            d.undefinedLevels.push_back(k);
            continue;
        }
        l.value = own[i] / denom;
        l.weighted = l.value * std::pow(opt.factor, kLevels - k);
        total += l.weighted;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::UndefinedLevel, "basin has no samples at any defined level");
    for (auto& l : d.levels)
        if (l.defined) l.fraction = l.weighted / total;
    return d;
}

// ---------------------------------------------------------------------------
// Coverage

inline double gamma(double baselineCount, double sampleCount) {
    if (!(baselineCount > 0.0) || !(sampleCount > 0.0))
        throw Error(ErrorCode::InvalidInput, "gamma needs positive point and sample counts");
    return std::pow(baselineCount / sampleCount, 1.0 / 6.0);
}

struct CoverageReport {
    double gamma = 0.0;
    std::size_t baselinePoints = 0;
    std::size_t missed = 0;
    [[nodiscard]] double missed_ratio() const {
        return baselinePoints == 0 ? 0.0 : static_cast<double>(missed) / static_cast<double>(baselinePoints);
    }
};

namespace detail {

// Sample coordinates in fine-step units; rotation axes in [0, period).
inline std::array<double, 6> step_coords(const Pose& p, const GridSpec& g) {
    std::array<double, 6> u{};
    for (std::size_t a = 0; a < 6; ++a) {
        u[a] = (p.v[a] - g.origin(a)) / g.step(a);
        if (g.period(a)) {
            u[a] = std::fmod(u[a], g.period(a));
            if (u[a] < 0.0) u[a] += g.period(a);
        }
    }
    return u;
}

inline double axis_gap(double x, double y, int period) {
    double d = std::abs(x - y);
    if (period) {
        d = std::fmod(d, period);
        d = std::min(d, period - d);
    }
    return d;
}

// Samples bucketed on cells at least gamma wide; rotation cells tile the period exactly.
class SampleBuckets {
public:
    SampleBuckets(std::span<const Pose> samples, const GridSpec& g, double gamma) : grid_(g), gamma_(gamma) {
        for (std::size_t a = 0; a < 6; ++a) {
            if (g.period(a)) {
                cells_[a] = std::max(1, static_cast<int>(std::floor(g.period(a) / gamma)));
                width_[a] = static_cast<double>(g.period(a)) / cells_[a];
            } else {
                width_[a] = gamma;
            }
        }
        for (const Pose& p : samples) {
            const auto u = step_coords(p, g);
            coords_.push_back(u);
            buckets_[cell_of(u)].push_back(coords_.size() - 1);
        }
    }

    // Samples within gamma of a lattice point on every axis.
    [[nodiscard]] std::size_t count_near(const CubeKey& point, std::size_t stopAt = 0) const {
        std::array<double, 6> u{};
        for (std::size_t a = 0; a < 6; ++a) u[a] = point[a];
        const CubeKey centre = cell_of(u);
        std::array<std::array<int, 3>, 6> nb{};
        std::array<std::size_t, 6> n{};
        for (std::size_t a = 0; a < 6; ++a) {
            for (int d = -1; d <= 1; ++d) {
                int c = centre[a] + d;
                if (cells_[a]) c = ((c % cells_[a]) + cells_[a]) % cells_[a];
                if (std::find(nb[a].begin(), nb[a].begin() + static_cast<long>(n[a]), c) == nb[a].begin() + static_cast<long>(n[a]))
                    nb[a][n[a]++] = c;
            }
        }
        std::size_t count = 0;
        std::array<std::size_t, 6> idx{};
        while (true) {
            CubeKey k{};
            for (std::size_t a = 0; a < 6; ++a) k[a] = nb[a][idx[a]];
            if (auto it = buckets_.find(k); it != buckets_.end())
                for (std::size_t s : it->second) {
                    bool in = true;
                    for (std::size_t a = 0; a < 6 && in; ++a)
                        in = axis_gap(coords_[s][a], u[a], grid_.period(a)) <= gamma_ + 1e-12;
                    if (in && ++count == stopAt) return count;
                }
            std::size_t a = 0;
            while (a < 6 && ++idx[a] == n[a]) idx[a++] = 0;
            if (a == 6) break;
        }
        return count;
    }

private:
    [[nodiscard]] CubeKey cell_of(const std::array<double, 6>& u) const {
        CubeKey k{};
        for (std::size_t a = 0; a < 6; ++a) {
            k[a] = static_cast<int>(std::floor(u[a] / width_[a]));
            if (cells_[a]) k[a] = std::clamp(k[a], 0, cells_[a] - 1);
        }
        return k;
    }

    GridSpec grid_;
    double gamma_;
    std::array<int, 6> cells_{};
    std::array<double, 6> width_{};
    std::vector<std::array<double, 6>> coords_;
    std::unordered_map<CubeKey, std::vector<std::size_t>, CubeKeyHash> buckets_;
};

}  // namespace detail

// Baseline points with no sample inside their gamma-hypercube (half-width gamma, in fine steps).
inline CoverageReport coverage_error(std::span<const CubeKey> baseline, const GridSpec& fine,
                                     std::span<const Pose> samples, double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidInput, "gamma must be positive");
    CoverageReport r;
    r.gamma = gamma;
    r.baselinePoints = baseline.size();
    const detail::SampleBuckets buckets(samples, fine, gamma);
    for (const CubeKey& p : baseline)
        if (buckets.count_near(p, 1) == 0) ++r.missed;
    return r;
}

struct CoverageHistogram {
    double gamma = 0.0;
    std::size_t cubes = 0;           // gamma-cubes holding baseline points
    std::vector<std::size_t> counts; // counts[nu] = cubes holding nu samples
    [[nodiscard]] double fraction(std::size_t nu) const {
        return nu < counts.size() && cubes ? static_cast<double>(counts[nu]) / static_cast<double>(cubes) : 0.0;
    }
};

// Tiles the fine lattice into gamma-cubes anchored at the grid origin and counts samples per occupied tile.
inline CoverageHistogram coverage_histogram(std::span<const CubeKey> baseline, const GridSpec& fine,
                                            std::span<const Pose> samples, double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidInput, "gamma must be positive");
    auto tile = [&](const std::array<double, 6>& u) {
        CubeKey k{};
        for (std::size_t a = 0; a < 6; ++a) k[a] = static_cast<int>(std::floor(u[a] / gamma + 1e-12));
        return k;
    };
    std::map<CubeKey, std::size_t> occupied;
    for (const CubeKey& p : baseline) {
        std::array<double, 6> u{};
        for (std::size_t a = 0; a < 6; ++a) u[a] = fine.wrap_index(a, p[a]);
        occupied.emplace(tile(u), 0);
    }
    for (const Pose& s : samples)
        if (auto it = occupied.find(tile(detail::step_coords(s, fine))); it != occupied.end()) ++it->second;
    CoverageHistogram h;
    h.gamma = gamma;
    h.cubes = occupied.size();
    for (const auto& [k, n] : occupied) {
        if (h.counts.size() <= n) h.counts.resize(n + 1, 0);
        ++h.counts[n];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Efficiency

struct EfficiencyRow {
    std::string method;
    std::string acr;
    std::size_t samples = 0;
    double seconds = 0.0;
    double samplesPerMs = 0.0;
    bool flagged = false;  // no samples, or no measurable time
    std::size_t peakFrontier = 0;
    double frontierRatio = 0.0;
};

inline EfficiencyRow efficiency_row(const ACRSampleResult& r) {
    EfficiencyRow row;
    row.method = to_string(r.variant);
    row.acr = r.acr.to_string();
    row.samples = r.counted();
    row.seconds = r.seconds;
    row.peakFrontier = r.counters.peakFrontier;
    if (row.samples == 0 || !(r.seconds > 0.0)) {
        row.flagged = true;
    } else {
        row.samplesPerMs = static_cast<double>(row.samples) / (1000.0 * r.seconds);
    }
    if (row.samples) row.frontierRatio = static_cast<double>(row.peakFrontier) / static_cast<double>(row.samples);
    return row;
}

inline std::vector<EfficiencyRow> efficiency_report(std::span<const ACRSampleResult> results) {
    std::vector<EfficiencyRow> rows;
    for (const auto& r : results) rows.push_back(efficiency_row(r));
    return rows;
}

}  // namespace ucvol
