#pragma once
// ACR descriptors, basins, boundary contacts and the Monte Carlo pseudo-atlas.

#include "cayley.hpp"

#include <map>
#include <unordered_set>

namespace ucvol {

// Sorted set of active contact pairs.
class ACRDescriptor {
public:
    ACRDescriptor() = default;
    explicit ACRDescriptor(std::vector<PointPair> pairs) : pairs_(std::move(pairs)) {
        std::sort(pairs_.begin(), pairs_.end());
        if (std::adjacent_find(pairs_.begin(), pairs_.end()) != pairs_.end())
            throw Error(ErrorCode::InvalidInput, "contact pairs must be unique");
        if (pairs_.size() > 6) throw Error(ErrorCode::InvalidInput, "at most six contact pairs");
    }

    [[nodiscard]] std::span<const PointPair> pairs() const { return pairs_; }
    [[nodiscard]] std::size_t size() const { return pairs_.size(); }
    [[nodiscard]] bool empty() const { return pairs_.empty(); }
    // Effective dimension 6 - |Q|.
    [[nodiscard]] int level() const { return 6 - static_cast<int>(pairs_.size()); }
    [[nodiscard]] bool contains(PointPair p) const { return std::binary_search(pairs_.begin(), pairs_.end(), p); }
    [[nodiscard]] bool subset_of(const ACRDescriptor& o) const {
        return std::includes(o.pairs_.begin(), o.pairs_.end(), pairs_.begin(), pairs_.end());
    }

    // "1-2;3-1" style; "none" for the empty set.
    [[nodiscard]] std::string to_string() const {
        if (pairs_.empty()) return "none";
        std::string s;
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            if (i) s += ';';
            s += std::to_string(pairs_[i].a) + "-" + std::to_string(pairs_[i].b);
        }
        return s;
    }
    static ACRDescriptor parse(const std::string& text) {
        std::vector<PointPair> out;
        if (text == "none" || text.empty()) return ACRDescriptor{};
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ';')) {
            const auto dash = item.find('-', item.empty() ? 0 : 1);
            if (dash == std::string::npos) throw Error(ErrorCode::InvalidInput, "malformed contact pair '" + item + "'");
            try {
                out.push_back({std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1))});
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidInput, "malformed contact pair '" + item + "'");
            }
        }
        return ACRDescriptor(std::move(out));
    }

    auto operator<=>(const ACRDescriptor&) const = default;
    bool operator==(const ACRDescriptor&) const = default;

private:
    std::vector<PointPair> pairs_;
};

struct ACRDescriptorHash {
    std::size_t operator()(const ACRDescriptor& d) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ull;
        for (const auto& p : d.pairs())
            h = (h ^ (static_cast<std::size_t>(p.a) * 1000003u + static_cast<std::size_t>(p.b))) * 0x100000001b3ull;
        return h;
    }
};

// ---------------------------------------------------------------------------
// Basins

// All subsets of a six-pair bottom; member i holds the pairs selected by the bits of i.
struct Basin {
    ACRDescriptor bottom;
    std::vector<ACRDescriptor> members;                   // 64, indexed by subset mask
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (mask, mask with one pair removed)

    [[nodiscard]] std::vector<std::size_t> at_level(int level) const {
        std::vector<std::size_t> out;
        for (std::size_t m = 0; m < members.size(); ++m)
            if (members[m].level() == level) out.push_back(m);
        return out;
    }
    [[nodiscard]] bool contains(const ACRDescriptor& d) const { return d.subset_of(bottom); }
};

inline Basin basin_from_bottom(std::span<const PointPair> bottom) {
    if (bottom.size() != 6) throw Error(ErrorCode::InvalidInput, "a basin bottom has exactly six pairs");
    Basin b;
    b.bottom = ACRDescriptor(std::vector<PointPair>(bottom.begin(), bottom.end()));
    const auto pairs = b.bottom.pairs();
    for (std::size_t m = 0; m < 64; ++m) {
        std::vector<PointPair> q;
        for (std::size_t i = 0; i < 6; ++i)
            if ((m >> i) & 1u) q.push_back(pairs[i]);
        b.members.emplace_back(std::move(q));
        for (std::size_t i = 0; i < 6; ++i)
            if ((m >> i) & 1u) b.edges.emplace_back(m, m & ~(std::size_t{1} << i));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Contact selection shared by the baseline and Monte Carlo partitioning

enum class InnerRule : std::uint8_t { MC1, MC2, MC3, Active };

inline const char* to_string(InnerRule r) {
    switch (r) {
        case InnerRule::MC1: return "MC1";
        case InnerRule::MC2: return "MC2";
        case InnerRule::MC3: return "MC3";
        case InnerRule::Active: return "active";
    }
    return "?";
}

// Upper end of the inner interval used to read contacts off a pose.
inline double inner_upper(InnerRule rule, double ra, double rb, const ConstraintSystem& sys) {
    switch (rule) {
        case InnerRule::MC1: return 0.85 * (ra + rb);
        case InnerRule::MC2: return ra + rb;
        case InnerRule::MC3: return ra + rb + 0.8;
        case InnerRule::Active: return sys.upper(ra, rb);
    }
    return 0.0;
}

enum class Rejection : std::uint8_t { None, Collision, NoContact, AxisRestraint };

struct PairDistance {
    PointPair pair;
    double distance = 0.0;
    std::size_t i = 0, j = 0;  // set indices
};

inline bool closer(const PairDistance& x, const PairDistance& y) {
    return std::tie(x.distance, x.pair) < std::tie(y.distance, y.pair);
}

// Contacts inside [activeLower, inner upper]; the six closest if more, the closest pair if none.
inline ACRDescriptor select_contacts(const PointSet& A, const PointSet& B, std::span<const PairDistance> all,
                                     const ConstraintSystem& sys, InnerRule rule) {
    std::vector<PairDistance> inside;
    const PairDistance* nearest = nullptr;
    for (const auto& pd : all) {
        const double ra = A[pd.i].radius, rb = B[pd.j].radius;
        if (pd.distance >= sys.lower(ra, rb) && pd.distance <= inner_upper(rule, ra, rb, sys)) inside.push_back(pd);
        if (!nearest || closer(pd, *nearest)) nearest = &pd;
    }
    if (inside.size() > 6) {
        std::partial_sort(inside.begin(), inside.begin() + 6, inside.end(), closer);
        inside.resize(6);
    }
    std::vector<PointPair> q;
    for (const auto& pd : inside) q.push_back(pd.pair);
    if (q.empty() && nearest) q.push_back(nearest->pair);
    return ACRDescriptor(std::move(q));
}

// Feasibility screen (collision, at least one pair within its active upper bound, axis restraint)
// followed by contact selection.
struct Classification {
    Rejection rejection = Rejection::None;
    ACRDescriptor acr;
};

class PoseClassifier {
public:
    PoseClassifier(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B, ConstraintSystem sys)
        : A_(std::move(A)), B_(std::move(B)), sys_(std::move(sys)), bounds_(*A_, *B_, sys_) {
        if (sys_.axisRestraint) {
            axisA_ = principal_axis(template_positions(*A_));
            axisB_ = principal_axis(template_positions(*B_));
        }
    }

    [[nodiscard]] const ConstraintSystem& system() const { return sys_; }
    [[nodiscard]] const BoundTable& bounds() const { return bounds_; }
    [[nodiscard]] const PointSet& A() const { return *A_; }
    [[nodiscard]] const PointSet& B() const { return *B_; }

    [[nodiscard]] bool axis_ok(const Mat3& r) const {
        if (!sys_.axisRestraint) return true;
        const double c = std::abs(axisA_.dot(r * axisB_));
        return sys_.axisRestraint->contains(std::acos(std::clamp(c, 0.0, 1.0)));
    }

    // Pair distances for B moved by (r, t).
    void distances(const Mat3& r, const Vec3& t, std::vector<PairDistance>& out) const {
        out.clear();
        for (std::size_t j = 0; j < B_->size(); ++j) {
            const Vec3 pb = r * (*B_)[j].position + t;
            for (std::size_t i = 0; i < A_->size(); ++i)
                out.push_back({{(*A_)[i].id, (*B_)[j].id}, ((*A_)[i].position - pb).norm(), i, j});
        }
    }

    [[nodiscard]] bool collision_free(const Mat3& r, const Vec3& t) const {
        for (std::size_t j = 0; j < B_->size(); ++j) {
            const Vec3 pb = r * (*B_)[j].position + t;
            for (std::size_t i = 0; i < A_->size(); ++i)
                if (((*A_)[i].position - pb).squaredNorm() < sq(bounds_.collision(i, j))) return false;
        }
        return true;
    }

    [[nodiscard]] Classification classify(const Mat3& r, const Vec3& t, InnerRule rule,
                                          std::vector<PairDistance>& scratch) const {
        distances(r, t, scratch);
        bool contact = false;
        for (const auto& pd : scratch) {
            if (pd.distance < bounds_.collision(pd.i, pd.j)) return {Rejection::Collision, {}};
            if (pd.distance <= bounds_.upper(pd.i, pd.j)) contact = true;
        }
        if (!contact) return {Rejection::NoContact, {}};
        if (!axis_ok(r)) return {Rejection::AxisRestraint, {}};
        return {Rejection::None, select_contacts(*A_, *B_, scratch, sys_, rule)};
    }

    [[nodiscard]] Classification classify(const Pose& pose, InnerRule rule) const {
        std::vector<PairDistance> scratch;
        return classify(pose.rotation(), pose.translation(), rule, scratch);
    }

private:
    static double sq(double x) { return x * x; }
    std::shared_ptr<const PointSet> A_, B_;
    ConstraintSystem sys_;
    BoundTable bounds_;
    Vec3 axisA_ = Vec3::UnitX(), axisB_ = Vec3::UnitX();
};

// Contact descriptor of a Monte Carlo sample; InfeasibleSample when the pose is screened out.
inline ACRDescriptor partition_mc_sample(const Pose& pose, const PoseClassifier& classifier, InnerRule variant) {
    const auto c = classifier.classify(pose, variant);
    switch (c.rejection) {
        case Rejection::None: return c.acr;
        case Rejection::Collision: throw Error(ErrorCode::InfeasibleSample, "sample violates a collision bound");
        case Rejection::NoContact: throw Error(ErrorCode::InfeasibleSample, "sample has no pair within its upper bound");
        case Rejection::AxisRestraint: throw Error(ErrorCode::InfeasibleSample, "sample violates the axis restraint");
    }
    return c.acr;
}

// ---------------------------------------------------------------------------
// Boundary contacts

struct BoundaryContact {
    CayleyPoint point;     // last feasible point on the segment
    Pose pose;
    PointPair pair;        // newly touching pair
    double distance = 0.0;
    double bound = 0.0;
    ACRDescriptor child;   // Q plus the new pair
    int iterations = 0;
};

inline constexpr double kBoundaryTol = 1e-6;
inline constexpr int kMaxBisections = 60;

// Bisects the Cayley segment prev -> next (same flip) to the first collision contact.
inline std::optional<BoundaryContact> detect_boundary_contact(const CayleyPoint& prev, const CayleyPoint& next,
                                                              FlipSignature flip, const CompleteThreeTree& tree,
                                                              const ConstraintSystem& sys) {
    const ActiveConstraintGraph& g = *tree.acg;
    const BoundTable bounds(*g.setA, *g.setB, sys);
    auto lerp = [&](double t) {
        CayleyPoint c = prev;
        for (std::size_t k = 0; k < 6; ++k) c.coords[k] = (1.0 - t) * prev.coords[k] + t * next.coords[k];
        return c;
    };
    struct Eval {
        bool realized = false;
        bool feasible = false;
        Pose pose;
        std::size_t worstI = 0, worstJ = 0;  // deepest collision
    };
    auto evaluate = [&](double t) {
        Eval e;
        auto r = try_realize(lerp(t), tree, flip);
        if (!r) return e;
        e.realized = true;
        e.pose = r->pose();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < g.setB->size(); ++j) {
            const Vec3 pb = r->rotation * (*g.setB)[j].position + r->translation;
            for (std::size_t i = 0; i < g.setA->size(); ++i) {
                const double gap = bounds.collision(i, j) - ((*g.setA)[i].position - pb).norm();
                if (gap > worst) {
                    worst = gap;
                    e.worstI = i;
                    e.worstJ = j;
                }
            }
        }
        e.feasible = worst <= 0.0;
        return e;
    };
    auto distance = [&](const Eval& e, std::size_t i, std::size_t j) {
        return ((*g.setA)[i].position - apply_pose(e.pose, (*g.setB)[j].position)).norm();
    };

    Eval loEval = evaluate(0.0);
    if (!loEval.realized || !loEval.feasible)
        throw Error(ErrorCode::InvalidInput, "segment start must realize without collisions");
    const Eval end = evaluate(1.0);
    if (!end.realized) throw Error(ErrorCode::NoRealPreimage, "segment end has no real preimage in this flip");
    if (end.feasible) return std::nullopt;

    double lo = 0.0, hi = 1.0;
    std::size_t wi = end.worstI, wj = end.worstJ;
    int it = 0;
    while (it < kMaxBisections && distance(loEval, wi, wj) - bounds.collision(wi, wj) > kBoundaryTol) {
        const double mid = 0.5 * (lo + hi);
        const Eval m = evaluate(mid);
        ++it;
        if (m.realized && m.feasible) {
            lo = mid;
            loEval = m;
        } else {
            hi = mid;
            if (m.realized) {
                wi = m.worstI;
                wj = m.worstJ;
            }
        }
    }
    BoundaryContact bc;
    bc.point = lerp(lo);
    bc.pose = loEval.pose;
    bc.pair = {(*g.setA)[wi].id, (*g.setB)[wj].id};
    bc.bound = bounds.collision(wi, wj);
    bc.distance = distance(loEval, wi, wj);
    std::vector<PointPair> q;
    for (const auto& e : g.activeEdges) q.push_back(e.pair);
    if (std::find(q.begin(), q.end(), bc.pair) == q.end()) q.push_back(bc.pair);
    if (q.size() <= 6) bc.child = ACRDescriptor(std::move(q));
    bc.iterations = it;
    return bc;
}

// ---------------------------------------------------------------------------
// Pseudo-atlas

struct AtlasEntry {
    std::size_t samples = 0;  // including repetitions
    std::unordered_set<CubeKey, CubeKeyHash> cubes;
    std::vector<Pose> poses;
};

struct PseudoAtlas {
    InnerRule variant = InnerRule::MC1;
    std::map<ACRDescriptor, AtlasEntry> entries;
    std::size_t rejectedCollision = 0;
    std::size_t rejectedNoContact = 0;
    std::size_t rejectedAxis = 0;

    [[nodiscard]] std::size_t accepted() const {
        std::size_t n = 0;
        for (const auto& [d, e] : entries) n += e.samples;
        return n;
    }
    [[nodiscard]] std::size_t rejected() const { return rejectedCollision + rejectedNoContact + rejectedAxis; }

    // Commutative merge of another shard.
    void merge(const PseudoAtlas& o) {
        for (const auto& [d, e] : o.entries) {
            auto& mine = entries[d];
            mine.samples += e.samples;
            mine.cubes.insert(e.cubes.begin(), e.cubes.end());
            mine.poses.insert(mine.poses.end(), e.poses.begin(), e.poses.end());
        }
        rejectedCollision += o.rejectedCollision;
        rejectedNoContact += o.rejectedNoContact;
        rejectedAxis += o.rejectedAxis;
    }
};

// Partitions a trajectory; `grid` defines the cubes used for repetition rates.
inline PseudoAtlas ingest_trajectory(std::span<const Pose> trajectory, const PoseClassifier& classifier,
                                     InnerRule variant, const GridSpec& grid) {
    PseudoAtlas atlas;
    atlas.variant = variant;
    std::vector<PairDistance> scratch;
    for (const Pose& raw : trajectory) {
        const Pose pose = raw.wrapped();
        const auto c = classifier.classify(pose.rotation(), pose.translation(), variant, scratch);
        switch (c.rejection) {
            case Rejection::Collision: ++atlas.rejectedCollision; continue;
            case Rejection::NoContact: ++atlas.rejectedNoContact; continue;
            case Rejection::AxisRestraint: ++atlas.rejectedAxis; continue;
            case Rejection::None: break;
        }
        auto& e = atlas.entries[c.acr];
        ++e.samples;
        e.cubes.insert(cube_of(pose, grid));
        e.poses.push_back(pose);
    }
    return atlas;
}

struct LevelRate {
    int level = 0;
    std::size_t samples = 0;
    std::size_t cubes = 0;
    [[nodiscard]] double rate() const { return static_cast<double>(samples) / static_cast<double>(cubes); }
};

inline std::vector<LevelRate> repetition_rates(const PseudoAtlas& atlas) {
    std::map<int, LevelRate> levels;
    for (const auto& [d, e] : atlas.entries) {
        auto& l = levels[d.level()];
        l.level = d.level();
        l.samples += e.samples;
        l.cubes += e.cubes.size();
    }
    std::vector<LevelRate> out;
    for (const auto& [k, l] : levels)
        if (l.cubes > 0) out.push_back(l);
    return out;
}

// Mean ratio of repetition rates between adjacent levels d-1 and d.
inline double estimate_boltzmann(std::span<const LevelRate> rates) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i + 1 < rates.size(); ++i) {
        if (rates[i + 1].level != rates[i].level + 1) continue;
        sum += rates[i].rate() / rates[i + 1].rate();
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::InsufficientData, "Boltzmann factor needs samples at two adjacent levels");
    return sum / n;
}

inline double estimate_boltzmann(const PseudoAtlas& atlas) {
    const auto rates = repetition_rates(atlas);
    return estimate_boltzmann(rates);
}

}  // namespace ucvol
