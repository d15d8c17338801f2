#pragma once
// Uniform Cartesian sampling of one active constraint region.

#include "atlas.hpp"
#include "decomposition.hpp"
#include "frontier.hpp"

#include <chrono>
#include <map>
#include <unordered_set>

namespace ucvol {

// Numbered as the settings modes 0..4.
enum class Variant : std::uint8_t { Simplicial = 0, Basis = 1, Thick = 2, FaceCenter = 3, Hybrid = 4 };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::Simplicial: return "simplicial";
        case Variant::Basis: return "basis";
        case Variant::Thick: return "thick";
        case Variant::FaceCenter: return "face-center";
        case Variant::Hybrid: return "hybrid";
    }
    return "?";
}

inline Variant variant_from_mode(int mode) {
    if (mode < 0 || mode > 4) throw Error(ErrorCode::Config, "intersection mode must be 0..4");
    return static_cast<Variant>(mode);
}

struct SamplerOptions {
    Variant variant = Variant::Hybrid;
    GridSpec grid;
    double cayleyStep = 0.5;
    FrontierOrder order = FrontierOrder::MostProcessed;
    std::size_t maxProcessed = 0;     // cubes per run; 0 = unlimited
    double boundaryTolerance = 1e-9;  // closed-cube test, in steps
    bool refineEstimates = true;      // exact slice points in element hulls before the inverse map
};

struct CountedSample {
    CubeKey key{};
    FlipSignature flip;
    Pose pose;
};

struct SamplerCounters {
    std::size_t basePoints = 0;
    std::size_t seeds = 0;
    std::size_t processed = 0;
    std::size_t solves = 0;
    std::size_t intersections = 0;
    std::size_t accepted = 0;
    std::size_t refined = 0;
    std::size_t discardedPreimage = 0;
    std::size_t otherFlip = 0;
    std::size_t discardedCollision = 0;
    std::size_t discardedAxis = 0;
    std::size_t hybridRetries = 0;
    std::size_t peakFrontier = 0;
};

struct ACRSampleResult {
    ACRDescriptor acr;
    Variant variant = Variant::Hybrid;
    std::vector<CountedSample> samples;  // one per counted cube, in counting order
    std::unordered_map<CubeKey, std::size_t, CubeKeyHash> index;
    std::map<FlipSignature, std::unordered_set<CubeKey, CubeKeyHash>> perFlipVisited;
    SamplerCounters counters;
    double seconds = 0.0;
    bool emptyACR = false;
    std::string diagnostic;

    [[nodiscard]] std::size_t counted() const { return samples.size(); }
    [[nodiscard]] bool contains(const CubeKey& k) const { return index.count(k) != 0; }
    [[nodiscard]] std::vector<CubeKey> sorted_keys() const {
        std::vector<CubeKey> keys;
        keys.reserve(samples.size());
        for (const auto& s : samples) keys.push_back(s.key);
        std::sort(keys.begin(), keys.end());
        return keys;
    }
};

struct EasalCayleyResult {
    std::size_t basePoints = 0;
    std::size_t preimages = 0;
    std::unordered_set<CubeKey, CubeKeyHash> cubes;
    std::vector<Pose> samples;  // both angle representatives of every preimage
};

// Basis element of a q-facet: centre image and one half-difference vector per free axis.
struct BasisElement {
    Facet facet;
    CayleyPoint center;
    std::array<std::array<double, 6>, 6> basis{};
    std::array<std::size_t, 6> axes{};
    std::size_t size = 0;
};

template <class Map>
BasisElement make_basis_element(const Facet& facet, const CubeFrame& frame, Map&& image,
                                const std::array<CayleyPoint, kCubeFaces>& faceImages) {
    BasisElement e;
    e.facet = facet;
    e.center = image(frame.facet_center(facet));
    for (std::size_t a = 0; a < 6; ++a) {
        if (!((facet.freeAxes >> a) & 1u)) continue;
        for (std::size_t k = 0; k < 6; ++k)
            e.basis[e.size][k] = 0.5 * (faceImages[2 * a + 1].coords[k] - faceImages[2 * a].coords[k]);
        e.axes[e.size++] = a;
    }
    return e;
}

// All parallelepipeds of a cube for an arbitrary pose -> Cayley map.
template <class Map>
std::vector<BasisElement> decompose_basis(const CubeFrame& frame, int q, Map&& image) {
    std::array<CayleyPoint, kCubeFaces> faces{};
    for (std::size_t f = 0; f < kCubeFaces; ++f) faces[f] = image(frame.point(face_center_point(f)));
    std::vector<BasisElement> out;
    for (const Facet& f : cube_facets(q)) out.push_back(make_basis_element(f, frame, image, faces));
    return out;
}

inline constexpr int kRefineIterations = 12;
inline constexpr double kRefineTol = 1e-10;
inline constexpr double kRefineStep = 1e-7;  // finite-difference step along hull directions

class AcrSampler {
public:
    AcrSampler(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B, ACRDescriptor acr,
               ConstraintSystem sys, SamplerOptions options)
        : acr_(std::move(acr)),
          options_(std::move(options)),
          classifier_(A, B, sys),
          tree_(find_complete_3tree(std::make_shared<const ActiveConstraintGraph>(
              build_acg(A, B, std::vector<PointPair>(acr_.pairs().begin(), acr_.pairs().end()), sys)))) {
        if (!(options_.cayleyStep > 0.0)) throw Error(ErrorCode::InvalidInput, "Cayley step must be positive");
        q_ = tree_.q();
        if (options_.variant == Variant::Thick && q_ != 1)
            throw Error(ErrorCode::InvalidInput, "the thick variant needs exactly one contact");
        for (std::size_t i = 0; i < static_cast<std::size_t>(q_); ++i) {
            targets_[i] = tree_.acg->activeEdges[i].target;
            lowers_[i] = tree_.acg->activeEdges[i].lower;
            uppers_[i] = tree_.acg->activeEdges[i].upper;
        }
        if (q_ < 6) {
            if (options_.variant != Variant::Basis && options_.variant != Variant::FaceCenter &&
                options_.variant != Variant::Thick)
                simplicial_ = decompose_simplicial(q_);
            if (options_.variant == Variant::FaceCenter || options_.variant == Variant::Hybrid ||
                options_.variant == Variant::Thick)
                faceCenter_ = decompose_face_center(q_);
            if (options_.variant == Variant::Basis) facets_ = cube_facets(q_);
        }
    }

    [[nodiscard]] const CompleteThreeTree& tree() const { return tree_; }
    [[nodiscard]] const PoseClassifier& classifier() const { return classifier_; }
    [[nodiscard]] const SamplerOptions& options() const { return options_; }
    [[nodiscard]] std::span<const double> targets() const { return {targets_.data(), static_cast<std::size_t>(q_)}; }

    [[nodiscard]] ACRSampleResult run() const {
        const auto t0 = std::chrono::steady_clock::now();
        ACRSampleResult res;
        res.acr = acr_;
        res.variant = options_.variant;
        auto seeds = seed_cubes(res);
        if (seeds.empty()) {
            res.emptyACR = true;
            if (res.diagnostic.empty())
                res.diagnostic = "no realizable collision-free seed on the Cayley grid (" +
                                 std::to_string(res.counters.basePoints) + " realizable base points at step " +
                                 std::to_string(options_.cayleyStep) + ")";
        }
        if (q_ < 6) {
            for (auto& [flip, keys] : seeds) traverse(flip, keys, res);
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

    // Per-flip seed cubes from every realizable, collision-free base grid point.
    std::map<FlipSignature, std::vector<CubeKey>> seed_cubes(ACRSampleResult& res) const {
        std::map<FlipSignature, std::vector<CubeKey>> seeds;
        std::vector<Interval> box;
        try {
            box = cayley_bounds(tree_);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyBox) throw;
            res.diagnostic = "Cayley parameter box is empty for the contact targets";
            return seeds;
        }
        for_each_base_point(tree_, box, options_.cayleyStep, [&](const BasePoint& bp) {
            ++res.counters.basePoints;
            for (const FlipSignature& f : bp.flips) {
                auto r = try_realize(bp.point, tree_, f);
                if (!r || !classifier_.collision_free(r->rotation, r->translation) || !classifier_.axis_ok(r->rotation))
                    continue;
                for (const Pose& pose : representatives(*r)) {
                    const CubeKey k = cube_of(pose, options_.grid);
                    seeds[f].push_back(k);
                    record(res, k, f, pose);
                }
            }
        });
        for (auto& [f, keys] : seeds) {
            std::sort(keys.begin(), keys.end());
            keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
            res.counters.seeds += keys.size();
        }
        return seeds;
    }

    // Processes one cube for `flip`; returns the feasible-face mask. Faces in `processedFaces` are skipped.
    std::uint32_t process_cube(const CubeKey& key, std::uint32_t processedFaces, FlipSignature flip,
                               ACRSampleResult& res) const {
        CubeContext ctx(*this, key, flip, res);
        switch (options_.variant) {
            case Variant::Simplicial: run_simplices(ctx, simplicial_, processedFaces); break;
            case Variant::FaceCenter: run_simplices(ctx, faceCenter_, processedFaces); break;
            case Variant::Hybrid:
                run_simplices(ctx, simplicial_, processedFaces);
                if (ctx.accepted == 0) {
                    ++res.counters.hybridRetries;
                    run_simplices(ctx, faceCenter_, processedFaces);
                }
                break;
            case Variant::Basis: run_basis(ctx, processedFaces); break;
            case Variant::Thick: run_thick(ctx, processedFaces); break;
        }
        return ctx.feasible;
    }

    // Uniform Cayley grid: every feasible preimage counted, plus the cubes it occupies.
    [[nodiscard]] EasalCayleyResult easal_cayley_volume() const {
        EasalCayleyResult out;
        std::vector<Interval> box;
        try {
            box = cayley_bounds(tree_);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyBox) throw;
            return out;
        }
        for_each_base_point(tree_, box, options_.cayleyStep, [&](const BasePoint& bp) {
            ++out.basePoints;
            for (const FlipSignature& f : bp.flips) {
                auto r = try_realize(bp.point, tree_, f);
                if (!r || !classifier_.collision_free(r->rotation, r->translation) || !classifier_.axis_ok(r->rotation))
                    continue;
                ++out.preimages;
                for (const Pose& pose : representatives(*r)) {
                    out.cubes.insert(cube_of(pose, options_.grid));
                    out.samples.push_back(pose);
                }
            }
        });
        return out;
    }

private:
    // Both Tait-Bryan poses of a realized rotation.
    static std::array<Pose, 2> representatives(const Realization& r) {
        const auto reps = angles_from_rotation(r.rotation);
        return {Pose::from(r.translation, reps[0]), Pose::from(r.translation, reps[1])};
    }

    void record(ACRSampleResult& res, const CubeKey& k, FlipSignature flip, const Pose& pose) const {
        res.perFlipVisited[flip].insert(k);
        if (res.index.emplace(k, res.samples.size()).second) res.samples.push_back({k, flip, pose});
    }

    [[nodiscard]] bool inside_closed(const Pose& pose, const CubeKey& key) const {
        const GridSpec& g = options_.grid;
        for (std::size_t a = 0; a < 6; ++a) {
            const double d = offset(pose, key, a);
            const double tol = options_.boundaryTolerance * g.step(a);
            if (d < -tol || d > g.step(a) + tol) return false;
        }
        return true;
    }

    // Distance of a pose coordinate above the cube's lower end (rotations folded).
    [[nodiscard]] double offset(const Pose& pose, const CubeKey& key, std::size_t a) const {
        const GridSpec& g = options_.grid;
        const double lo = g.origin(a) + key[a] * g.step(a);
        return g.period(a) ? angle_delta(pose.v[a], lo) : pose.v[a] - lo;
    }

    // Every cube whose closed box holds the pose; the originating cube is preferred as the reference.
    void record_closed(ACRSampleResult& res, const CubeKey& origin, FlipSignature flip, const Pose& pose) const {
        const GridSpec& g = options_.grid;
        const CubeKey base = inside_closed(pose, origin) ? origin : cube_of(pose, g);
        std::array<std::array<int, 2>, 6> choices{};
        std::array<std::size_t, 6> counts{};
        for (std::size_t a = 0; a < 6; ++a) {
            const double d = offset(pose, base, a) / g.step(a);
            choices[a][counts[a]++] = base[a];
            if (d <= options_.boundaryTolerance) choices[a][counts[a]++] = g.wrap_index(a, base[a] - 1);
            else if (d >= 1.0 - options_.boundaryTolerance) choices[a][counts[a]++] = g.wrap_index(a, base[a] + 1);
        }
        record(res, base, flip, pose);
        std::array<std::size_t, 6> idx{};
        while (true) {
            std::size_t a = 0;
            while (a < 6 && ++idx[a] == counts[a]) idx[a++] = 0;
            if (a == 6) break;
            CubeKey k{};
            for (std::size_t b = 0; b < 6; ++b) k[b] = choices[b][idx[b]];
            record(res, k, flip, pose);
        }
    }

    struct CubeContext {
        const AcrSampler& s;
        CubeKey key;
        FlipSignature flip;
        ACRSampleResult& res;
        CubeFrame frame;
        std::array<CayleyPoint, kCubePoints> images{};
        std::array<bool, kCubePoints> have{};
        std::uint32_t feasible = 0;
        std::size_t accepted = 0;

        CubeContext(const AcrSampler& sampler, const CubeKey& k, FlipSignature f, ACRSampleResult& r)
            : s(sampler), key(k), flip(f), res(r) {
            frame.lower = cube_lower(k, s.options_.grid);
            frame.step = s.options_.grid.steps();
        }

        const CayleyPoint& image(CubePoint p) {
            if (!have[p]) {
                images[p] = s.image_of(frame.point(p));
                have[p] = true;
            }
            return images[p];
        }
    };

    [[nodiscard]] CayleyPoint image_of(const std::array<double, 6>& x) const { return forward_map(Pose{x}, tree_); }

    // Active distances minus targets at a pose.
    [[nodiscard]] std::array<double, 6> active_residual(const std::array<double, 6>& x) const {
        const Pose p{x};
        const Mat3 r = p.rotation();
        const Vec3 t = p.translation();
        std::array<double, 6> res{};
        for (std::size_t i = 0; i < static_cast<std::size_t>(q_); ++i) {
            const auto& e = tree_.acg->activeEdges[i];
            res[i] = (tree_.acg->point(e.u).position - (r * tree_.acg->point(e.v).position + t)).norm() - targets_[i];
        }
        return res;
    }

    // Newton solve for a slice point x0 + sum_j beta_j dirs[j] in the element's affine hull.
    [[nodiscard]] std::optional<std::array<double, 6>> solve_in_hull(std::array<double, 6> x,
                                                                    std::span<const std::array<double, 6>> dirs) const {
        using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
        using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
        const auto n = static_cast<Eigen::Index>(q_);
        for (int it = 0; it < kRefineIterations; ++it) {
            const auto f = active_residual(x);
            double worst = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(q_); ++i) worst = std::max(worst, std::abs(f[i]));
            if (worst <= kRefineTol) return x;
            Mat J(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                auto xh = x;
                for (std::size_t a = 0; a < 6; ++a) xh[a] += kRefineStep * dirs[static_cast<std::size_t>(j)][a];
                const auto fh = active_residual(xh);
                for (Eigen::Index i = 0; i < n; ++i)
                    J(i, j) = (fh[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i)]) / kRefineStep;
            }
            Vec rhs(n);
            for (Eigen::Index i = 0; i < n; ++i) rhs(i) = f[static_cast<std::size_t>(i)];
            auto beta = detail::solve_small(J, rhs);
            if (!beta) return std::nullopt;
            for (Eigen::Index j = 0; j < n; ++j)
                for (std::size_t a = 0; a < 6; ++a) x[a] -= (*beta)(j) * dirs[static_cast<std::size_t>(j)][a];
        }
        return std::nullopt;
    }

    bool screen(CubeContext& ctx, const Mat3& r, const Vec3& t) const {
        if (!classifier_.collision_free(r, t)) {
            ++ctx.res.counters.discardedCollision;
            return false;
        }
        if (!classifier_.axis_ok(r)) {
            ++ctx.res.counters.discardedAxis;
            return false;
        }
        return true;
    }

    void accept(CubeContext& ctx, const Pose& pose, std::uint32_t faces) const {
        record_closed(ctx.res, ctx.key, ctx.flip, pose);
        ++ctx.res.counters.accepted;
        ++ctx.accepted;
        ctx.feasible |= faces;
    }

    // Count an element intersection. The Cartesian estimate is first refined to an exact slice point in
    // the element's hull; the inverse Cayley map of the Cayley-space intersection is the fallback.
    void try_accept(CubeContext& ctx, const CayleyPoint& c, const std::array<double, 6>& estimate,
                    std::span<const std::array<double, 6>> hull, std::uint32_t faces) const {
        ++ctx.res.counters.intersections;
        if (options_.refineEstimates && !hull.empty()) {
            if (auto x = solve_in_hull(estimate, hull); x && inside_closed(Pose{*x}, ctx.key)) {
                const Pose p{*x};
                const auto f = try_flip_of_positions(acg_positions(*tree_.acg, p), tree_);
                ++ctx.res.counters.refined;
                if (!screen(ctx, p.rotation(), p.translation())) return;
                if (f && *f != ctx.flip) {
                    // a sample of another sheet: counted, but it does not steer this traversal
                    ++ctx.res.counters.otherFlip;
                    record_closed(ctx.res, ctx.key, *f, p);
                    return;
                }
                accept(ctx, p, faces);
                return;
            }
        }
        const Pose est{estimate};
        if (auto f = try_flip_of_positions(acg_positions(*tree_.acg, est), tree_); f && *f != ctx.flip) {
            ++ctx.res.counters.otherFlip;
            return;
        }
        auto r = try_realize(c, tree_, ctx.flip);
        if (!r) {
            ++ctx.res.counters.discardedPreimage;
            return;
        }
        if (screen(ctx, r->rotation, r->translation)) accept(ctx, r->pose_near(est), faces);
    }

    void run_simplices(CubeContext& ctx, const std::vector<SimplexElement>& elements,
                       std::uint32_t processedFaces) const {
        std::array<CayleyPoint, 7> imgs{};
        for (const SimplexElement& e : elements) {
            if (e.faces & processedFaces) continue;
            for (std::size_t i = 0; i < e.size; ++i) imgs[i] = ctx.image(e.points[i]);
            ++ctx.res.counters.solves;
            auto hit = intersect_simplex_slice(std::span<const CayleyPoint>(imgs.data(), e.size), targets());
            if (!hit) continue;
            std::array<double, 6> est{};
            std::array<std::array<double, 6>, 6> hull{};
            const auto x0 = ctx.frame.point(e.points[0]);
            for (std::size_t i = 0; i < e.size; ++i) {
                const auto x = ctx.frame.point(e.points[i]);
                for (std::size_t a = 0; a < 6; ++a) {
                    est[a] += hit->weights[i] * x[a];
                    if (i > 0) hull[i - 1][a] = x[a] - x0[a];
                }
            }
            try_accept(ctx, hit->point, est, std::span(hull.data(), e.size - 1u), e.faces);
        }
    }

    void run_basis(CubeContext& ctx, std::uint32_t processedFaces) const {
        std::array<CayleyPoint, kCubeFaces> faces{};
        for (std::size_t f = 0; f < kCubeFaces; ++f) faces[f] = ctx.image(face_center_point(f));
        auto image = [&](const std::array<double, 6>& x) { return image_of(x); };
        for (const Facet& facet : facets_) {
            if (facet.faces() & processedFaces) continue;
            const BasisElement e = make_basis_element(facet, ctx.frame, image, faces);
            ++ctx.res.counters.solves;
            auto hit = intersect_parallelepiped_slice(
                e.center, std::span<const std::array<double, 6>>(e.basis.data(), e.size), targets());
            if (!hit) continue;
            auto est = ctx.frame.facet_center(facet);
            std::array<std::array<double, 6>, 6> hull{};
            for (std::size_t j = 0; j < e.size; ++j) {
                est[e.axes[j]] += hit->weights[j] * 0.5 * ctx.frame.step[e.axes[j]];
                hull[j][e.axes[j]] = ctx.frame.step[e.axes[j]];
            }
            try_accept(ctx, hit->point, est, std::span(hull.data(), e.size), facet.faces());
        }
    }

    void run_thick(CubeContext& ctx, std::uint32_t processedFaces) const {
        for (const SimplexElement& e : faceCenter_) {
            if (e.faces & processedFaces) continue;
            const CayleyPoint& c0 = ctx.image(e.points[0]);
            const CayleyPoint& c1 = ctx.image(e.points[1]);
            const int s = thick_subdivisions(c0, c1, options_.cayleyStep);
            ++ctx.res.counters.solves;
            const auto x0 = ctx.frame.point(e.points[0]);
            const auto x1 = ctx.frame.point(e.points[1]);
            for (double t : thick_points(c0, c1, s, lowers_[0], uppers_[0])) {
                CayleyPoint c = c0;
                std::array<double, 6> est{};
                for (std::size_t k = 0; k < 6; ++k) {
                    c.coords[k] = (1.0 - t) * c0.coords[k] + t * c1.coords[k];
                    est[k] = (1.0 - t) * x0[k] + t * x1[k];
                }
                // thick points keep their own active value, so no refinement onto the target
                try_accept(ctx, c, est, {}, e.faces);
            }
        }
    }

    void traverse(FlipSignature flip, const std::vector<CubeKey>& seeds, ACRSampleResult& res) const {
        FrontierGraph<6> frontier(options_.grid.periods(), options_.order);
        for (const auto& k : seeds) frontier.add_seed(k);
        while (auto cube = frontier.pop()) {
            if (options_.maxProcessed && res.counters.processed >= options_.maxProcessed)
                throw Error(ErrorCode::BudgetExceeded,
                            "cube budget of " + std::to_string(options_.maxProcessed) + " exceeded");
            ++res.counters.processed;
            const std::uint32_t feasible = process_cube(cube->key, cube->processed_faces(), flip, res);
            frontier.complete(*cube, feasible);
        }
        res.counters.peakFrontier = std::max(res.counters.peakFrontier, frontier.peak());
    }

    ACRDescriptor acr_;
    SamplerOptions options_;
    PoseClassifier classifier_;
    CompleteThreeTree tree_;
    int q_ = 0;
    std::array<double, 6> targets_{}, lowers_{}, uppers_{};
    std::vector<SimplexElement> simplicial_, faceCenter_;
    std::vector<Facet> facets_;
};

inline ACRSampleResult sample_acr(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B,
                                  const ACRDescriptor& acr, const ConstraintSystem& sys,
                                  const SamplerOptions& options) {
    return AcrSampler(std::move(A), std::move(B), acr, sys, options).run();
}

}  // namespace ucvol
