#pragma once
// Active constraint graphs, complete 3-trees, the distance (Cayley) map and its inverse.

#include "core.hpp"

#include <Eigen/Geometry>

#include <bit>
#include <set>
#include <sstream>
#include <tuple>

namespace ucvol {

enum class Side : std::uint8_t { A, B };

struct AcgVertex {
    Side side = Side::A;
    std::size_t index = 0;  // position inside its point set
    int id = 0;
};

struct IntraEdge {
    std::size_t u = 0, v = 0;
    double length = 0.0;
};

struct ActiveEdge {
    std::size_t u = 0, v = 0;  // u on side A, v on side B
    PointPair pair;
    double lower = 0.0, upper = 0.0, target = 0.0;
};

struct ActiveConstraintGraph {
    std::shared_ptr<const PointSet> setA;
    std::shared_ptr<const PointSet> setB;
    std::vector<AcgVertex> vertices;
    std::vector<IntraEdge> intraEdges;
    std::vector<ActiveEdge> activeEdges;

    [[nodiscard]] std::size_t q() const { return activeEdges.size(); }
    [[nodiscard]] const Point& point(std::size_t v) const {
        const AcgVertex& x = vertices[v];
        return x.side == Side::A ? (*setA)[x.index] : (*setB)[x.index];
    }
    [[nodiscard]] std::vector<double> targets() const {
        std::vector<double> t;
        for (const auto& e : activeEdges) t.push_back(e.target);
        return t;
    }
};

namespace detail {

// Adds points of one set to `chosen` by ascending distance from `anchor` until the
// chosen positions span a plane; points that keep the set collinear are skipped.
inline void augment_side(const PointSet& set, std::vector<std::size_t>& chosen, const std::string& label) {
    auto positions = [&] {
        std::vector<Vec3> p;
        for (auto i : chosen) p.push_back(set[i].position);
        return p;
    };
    Vec3 anchor = Vec3::Zero();
    for (auto i : chosen) anchor += set[i].position;
    if (!chosen.empty()) anchor /= static_cast<double>(chosen.size());

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t x, std::size_t y) {
        return (set[x].position - anchor).squaredNorm() < (set[y].position - anchor).squaredNorm();
    });

    auto rank = [](const std::vector<Vec3>& p) {
        if (p.empty()) return -1;
        if (non_collinear(p)) return 2;
        for (std::size_t i = 1; i < p.size(); ++i)
            if ((p[i] - p[0]).norm() > 1e-9) return 1;
        return 0;
    };
    for (std::size_t i : rest) {
        auto p = positions();
        if (p.size() >= 3 && rank(p) == 2) break;
        const int before = rank(p);
        p.push_back(set[i].position);
        if (rank(p) > before) chosen.push_back(i);
    }
    auto p = positions();
    if (p.size() < 3 || rank(p) < 2)
        throw Error(ErrorCode::InsufficientPoints, "set " + label + " cannot supply three non-collinear points");
}

}  // namespace detail

inline ActiveConstraintGraph build_acg(std::shared_ptr<const PointSet> A, std::shared_ptr<const PointSet> B,
                                       std::span<const PointPair> Q, const ConstraintSystem& sys) {
    if (Q.empty() || Q.size() > 6) throw Error(ErrorCode::InvalidInput, "contact set must have 1 to 6 pairs");
    std::set<PointPair> seen;
    std::vector<std::size_t> ia, ib;
    for (const auto& pr : Q) {
        if (!seen.insert(pr).second) throw Error(ErrorCode::InvalidInput, "duplicate contact pair");
        const std::size_t a = A->index_of(pr.a), b = B->index_of(pr.b);
        if (std::find(ia.begin(), ia.end(), a) == ia.end()) ia.push_back(a);
        if (std::find(ib.begin(), ib.end(), b) == ib.end()) ib.push_back(b);
    }
    std::sort(ia.begin(), ia.end(), [&](auto x, auto y) { return (*A)[x].id < (*A)[y].id; });
    std::sort(ib.begin(), ib.end(), [&](auto x, auto y) { return (*B)[x].id < (*B)[y].id; });
    detail::augment_side(*A, ia, A->label());
    detail::augment_side(*B, ib, B->label());

    ActiveConstraintGraph g;
    g.setA = A;
    g.setB = B;
    for (auto i : ia) g.vertices.push_back({Side::A, i, (*A)[i].id});
    for (auto i : ib) g.vertices.push_back({Side::B, i, (*B)[i].id});
    const std::size_t na = ia.size();
    for (std::size_t u = 0; u < g.vertices.size(); ++u)
        for (std::size_t v = u + 1; v < g.vertices.size(); ++v)
            if (g.vertices[u].side == g.vertices[v].side)
                g.intraEdges.push_back({u, v, (g.point(u).position - g.point(v).position).norm()});
    for (const auto& pr : Q) {
        const std::size_t a = A->index_of(pr.a), b = B->index_of(pr.b);
        const std::size_t u = static_cast<std::size_t>(std::find(ia.begin(), ia.end(), a) - ia.begin());
        const std::size_t v = na + static_cast<std::size_t>(std::find(ib.begin(), ib.end(), b) - ib.begin());
        const double ra = (*A)[a].radius, rb = (*B)[b].radius;
        g.activeEdges.push_back({u, v, pr, sys.lower(ra, rb), sys.upper(ra, rb), sys.target(ra, rb)});
    }
    return g;
}

// ---------------------------------------------------------------------------
// Cayley points and flips

// Six lengths: the first q for the active pairs, the rest for the Cayley parameters.
struct CayleyPoint {
    std::array<double, 6> coords{};
    int q = 0;

    [[nodiscard]] std::span<const double> active() const { return {coords.data(), static_cast<std::size_t>(q)}; }
    [[nodiscard]] std::span<const double> free() const {
        return {coords.data() + q, static_cast<std::size_t>(6 - q)};
    }
    [[nodiscard]] double& active(std::size_t i) { return coords[i]; }
    [[nodiscard]] double& free(std::size_t i) { return coords[static_cast<std::size_t>(q) + i]; }
    bool operator==(const CayleyPoint&) const = default;
};

// One bit per trilaterated vertex; a set bit means positive signed volume.
struct FlipSignature {
    std::uint32_t bits = 0;
    std::uint8_t count = 0;

    [[nodiscard]] int sign(std::size_t k) const { return ((bits >> k) & 1u) ? 1 : -1; }
    [[nodiscard]] FlipSignature mirrored() const {
        const std::uint32_t mask = count == 32 ? ~0u : ((1u << count) - 1u);
        return {(~bits) & mask, count};
    }
    [[nodiscard]] std::string to_string() const {
        std::string s;
        for (std::size_t k = 0; k < count; ++k) s.push_back(sign(k) > 0 ? '+' : '-');
        return s.empty() ? std::string("0") : s;
    }
    auto operator<=>(const FlipSignature&) const = default;
};

// ---------------------------------------------------------------------------
// Complete 3-trees

enum class EdgeKind : std::uint8_t { Intra, Active, Cayley };

struct TreeEdge {
    std::size_t u = 0, v = 0;  // ACG vertex indices
    EdgeKind kind = EdgeKind::Intra;
    std::size_t slot = 0;      // active or Cayley slot; unused for intra
    double fixedLength = 0.0;  // intra edges only
};

struct Attachment {
    std::size_t vertex = 0;                 // ACG vertex index
    std::array<std::size_t, 3> parents{};   // ACG vertex indices, all placed earlier
    std::array<std::size_t, 3> edges{};     // tree edge index vertex-parent[i]
};

class CompleteThreeTree {
public:
    std::shared_ptr<const ActiveConstraintGraph> acg;
    std::vector<std::size_t> order;            // ACG vertices in placement order
    std::array<std::size_t, 3> baseEdges{};    // edges (0,1), (0,2), (1,2) of the base triangle
    std::vector<Attachment> attachments;       // vertices order[3..]
    std::vector<TreeEdge> edges;
    std::vector<std::size_t> cayleyEdges;      // tree edge index per Cayley slot
    std::vector<std::size_t> activeEdgeIndex;  // tree edge index per active slot

    [[nodiscard]] int q() const { return static_cast<int>(acg->q()); }
    [[nodiscard]] std::size_t free_count() const { return cayleyEdges.size(); }
    [[nodiscard]] std::size_t flip_bits() const { return attachments.size(); }
    [[nodiscard]] std::size_t flip_count() const { return std::size_t{1} << attachments.size(); }

    [[nodiscard]] double edge_length(const TreeEdge& e, const CayleyPoint& c) const {
        switch (e.kind) {
            case EdgeKind::Intra: return e.fixedLength;
            case EdgeKind::Active: return c.coords[e.slot];
            case EdgeKind::Cayley: return c.coords[static_cast<std::size_t>(q()) + e.slot];
        }
        return 0.0;
    }

    [[nodiscard]] CayleyPoint target_point() const {
        CayleyPoint c;
        c.q = q();
        for (std::size_t i = 0; i < acg->activeEdges.size(); ++i) c.coords[i] = acg->activeEdges[i].target;
        return c;
    }

    // Debug text: vertex order, parent triples and edge classes.
    [[nodiscard]] std::string to_text() const {
        auto name = [&](std::size_t v) {
            const AcgVertex& x = acg->vertices[v];
            return std::string(x.side == Side::A ? "A" : "B") + std::to_string(x.id);
        };
        auto kind = [](EdgeKind k) { return k == EdgeKind::Intra ? "intra" : k == EdgeKind::Active ? "active" : "cayley"; };
        std::ostringstream os;
        os << "order";
        for (auto v : order) os << ' ' << name(v);
        os << "\nbase " << name(order[0]) << ' ' << name(order[1]) << ' ' << name(order[2]) << '\n';
        for (const auto& at : attachments)
            os << "attach " << name(at.vertex) << " to " << name(at.parents[0]) << ' ' << name(at.parents[1]) << ' '
               << name(at.parents[2]) << '\n';
        for (const auto& e : edges) os << "edge " << name(e.u) << ' ' << name(e.v) << ' ' << kind(e.kind) << '\n';
        return os.str();
    }
};

namespace detail {

struct TreeSearch {
    const ActiveConstraintGraph& g;
    std::size_t n;
    std::vector<int> qIndex;  // n*n, active slot or -1
    std::vector<std::uint8_t> adj;
    std::vector<std::size_t> order;
    std::vector<std::array<std::size_t, 3>> parents;
    std::set<std::tuple<std::uint32_t, std::uint64_t, std::uint64_t>> failed;

    explicit TreeSearch(const ActiveConstraintGraph& graph) : g(graph), n(graph.vertices.size()) {
        qIndex.assign(n * n, -1);
        adj.assign(n * n, 0);
        for (std::size_t i = 0; i < g.activeEdges.size(); ++i) {
            const auto& e = g.activeEdges[i];
            qIndex[e.u * n + e.v] = qIndex[e.v * n + e.u] = static_cast<int>(i);
        }
    }

    [[nodiscard]] bool same_side(std::size_t u, std::size_t v) const { return g.vertices[u].side == g.vertices[v].side; }
    [[nodiscard]] bool is_q(std::size_t u, std::size_t v) const { return qIndex[u * n + v] >= 0; }

    [[nodiscard]] std::tuple<std::uint32_t, std::uint64_t, std::uint64_t> state_key(std::uint32_t mask) const {
        std::uint64_t lo = 0, hi = 0;
        std::size_t bit = 0;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v, ++bit)
                if (adj[u * n + v]) (bit < 64 ? lo : hi) |= std::uint64_t{1} << (bit % 64);
        return {mask, lo, hi};
    }

    [[nodiscard]] std::size_t placed_on_side(std::uint32_t mask, Side s) const {
        std::size_t c = 0;
        for (std::size_t v = 0; v < n; ++v)
            if ((mask >> v & 1u) && g.vertices[v].side == s) ++c;
        return c;
    }

    void link(std::size_t u, std::size_t v, std::uint8_t val) { adj[u * n + v] = adj[v * n + u] = val; }

    bool attach(std::uint32_t mask, std::size_t w, const std::array<std::size_t, 3>& tri) {
        const Side s = g.vertices[w].side;
        std::size_t sameCount = 0;
        for (auto p : tri)
            if (g.vertices[p].side == s) ++sameCount;
        if (sameCount != std::min<std::size_t>(placed_on_side(mask, s), 3)) return false;
        for (std::size_t v = 0; v < n; ++v)
            if ((mask >> v & 1u) && is_q(w, v) && std::find(tri.begin(), tri.end(), v) == tri.end()) return false;
        return true;
    }

    bool recurse(std::uint32_t mask) {
        if (order.size() == n) return true;
        const auto key = state_key(mask);
        if (failed.count(key)) return false;
        for (std::size_t w = 0; w < n; ++w) {
            if (mask >> w & 1u) continue;
            for (std::size_t a = 0; a < n; ++a) {
                if (!(mask >> a & 1u)) continue;
                for (std::size_t b = a + 1; b < n; ++b) {
                    if (!(mask >> b & 1u) || !adj[a * n + b]) continue;
                    for (std::size_t c = b + 1; c < n; ++c) {
                        if (!(mask >> c & 1u) || !adj[a * n + c] || !adj[b * n + c]) continue;
                        const std::array<std::size_t, 3> tri{a, b, c};
                        if (!attach(mask, w, tri)) continue;
                        for (auto p : tri) link(w, p, 1);
                        order.push_back(w);
                        parents.push_back(tri);
                        if (recurse(mask | (1u << w))) return true;
                        order.pop_back();
                        parents.pop_back();
                        for (auto p : tri) link(w, p, 0);
                    }
                }
            }
        }
        failed.insert(key);
        return false;
    }

    bool run() {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                for (std::size_t c = b + 1; c < n; ++c) {
                    order = {a, b, c};
                    parents.clear();
                    link(a, b, 1);
                    link(a, c, 1);
                    link(b, c, 1);
                    if (recurse((1u << a) | (1u << b) | (1u << c))) return true;
                    link(a, b, 0);
                    link(a, c, 0);
                    link(b, c, 0);
                }
        return false;
    }
};

}  // namespace detail

inline CompleteThreeTree find_complete_3tree(std::shared_ptr<const ActiveConstraintGraph> acg) {
    const ActiveConstraintGraph& g = *acg;
    const std::size_t n = g.vertices.size();
    if (n < 4 || n > 24) throw Error(ErrorCode::InvalidInput, "active constraint graph has an unsupported size");
    detail::TreeSearch search(g);
    if (!search.run()) throw Error(ErrorCode::NotNice, "no complete 3-tree contains the active pairs");

    CompleteThreeTree t;
    t.acg = acg;
    t.order = search.order;
    std::vector<int> edgeOf(n * n, -1);
    std::vector<double> intraLen(n * n, 0.0);
    for (const auto& e : g.intraEdges) intraLen[e.u * n + e.v] = intraLen[e.v * n + e.u] = e.length;
    t.activeEdgeIndex.assign(g.activeEdges.size(), 0);

    auto add_edge = [&](std::size_t u, std::size_t v) {
        TreeEdge e{u, v, EdgeKind::Intra, 0, 0.0};
        if (search.same_side(u, v)) {
            e.fixedLength = intraLen[u * n + v];
        } else if (search.is_q(u, v)) {
            e.kind = EdgeKind::Active;
            e.slot = static_cast<std::size_t>(search.qIndex[u * n + v]);
            t.activeEdgeIndex[e.slot] = t.edges.size();
        } else {
            e.kind = EdgeKind::Cayley;
            e.slot = t.cayleyEdges.size();
            t.cayleyEdges.push_back(t.edges.size());
        }
        edgeOf[u * n + v] = edgeOf[v * n + u] = static_cast<int>(t.edges.size());
        t.edges.push_back(e);
        return t.edges.size() - 1;
    };
    t.baseEdges[0] = add_edge(t.order[0], t.order[1]);
    t.baseEdges[1] = add_edge(t.order[0], t.order[2]);
    t.baseEdges[2] = add_edge(t.order[1], t.order[2]);
    for (std::size_t k = 3; k < n; ++k) {
        Attachment at;
        at.vertex = t.order[k];
        at.parents = search.parents[k - 3];
        for (std::size_t i = 0; i < 3; ++i) at.edges[i] = add_edge(at.vertex, at.parents[i]);
        t.attachments.push_back(at);
    }
    if (t.cayleyEdges.size() != 6 - g.q())
        throw Error(ErrorCode::NotNice, "tree has the wrong number of Cayley parameters");
    return t;
}

inline CompleteThreeTree find_complete_3tree(const ActiveConstraintGraph& acg) {
    return find_complete_3tree(std::make_shared<const ActiveConstraintGraph>(acg));
}

// ---------------------------------------------------------------------------
// Forward map

// Positions of every ACG vertex for a pose of set B (A at identity).
inline std::vector<Vec3> acg_positions(const ActiveConstraintGraph& g, const Pose& pose) {
    const Mat3 r = pose.rotation();
    const Vec3 t = pose.translation();
    std::vector<Vec3> out;
    out.reserve(g.vertices.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
        const Vec3& p = g.point(v).position;
        out.push_back(g.vertices[v].side == Side::A ? p : Vec3(r * p + t));
    }
    return out;
}

inline CayleyPoint forward_map_positions(std::span<const Vec3> pos, const CompleteThreeTree& tree) {
    CayleyPoint c;
    c.q = tree.q();
    for (std::size_t i = 0; i < tree.acg->activeEdges.size(); ++i) {
        const auto& e = tree.acg->activeEdges[i];
        c.coords[i] = (pos[e.u] - pos[e.v]).norm();
    }
    for (std::size_t i = 0; i < tree.cayleyEdges.size(); ++i) {
        const TreeEdge& e = tree.edges[tree.cayleyEdges[i]];
        c.free(i) = (pos[e.u] - pos[e.v]).norm();
    }
    return c;
}

inline CayleyPoint forward_map(const Pose& pose, const CompleteThreeTree& tree) {
    return forward_map_positions(acg_positions(*tree.acg, pose), tree);
}

inline CayleyPoint forward_map(const Configuration& config, const CompleteThreeTree& tree) {
    return forward_map(config.pose, tree);
}

// ---------------------------------------------------------------------------
// Inverse map

inline constexpr double kDiscriminantTol = 1e-12;
inline constexpr double kVolumeTol = 1e-12;

struct Trilateration {
    Vec3 point;
    double heightSquared = 0.0;
};

inline std::optional<Trilateration> try_trilaterate(const Vec3& p1, const Vec3& p2, const Vec3& p3, double d1,
                                                    double d2, double d3, int sign) {
    const Vec3 e21 = p2 - p1;
    const double d = e21.norm();
    if (d < 1e-12) return std::nullopt;
    const Vec3 ex = e21 / d;
    const Vec3 e31 = p3 - p1;
    const double i = ex.dot(e31);
    Vec3 eyRaw = e31 - i * ex;
    const double j = eyRaw.norm();
    if (j < 1e-12) return std::nullopt;
    const Vec3 ey = eyRaw / j;
    const Vec3 ez = ex.cross(ey);
    const double x = (d1 * d1 - d2 * d2 + d * d) / (2.0 * d);
    const double y = (d1 * d1 - d3 * d3 + i * i + j * j) / (2.0 * j) - (i / j) * x;
    const double z2 = d1 * d1 - x * x - y * y;
    if (z2 < -kDiscriminantTol) return std::nullopt;
    const double z = (sign >= 0 ? 1.0 : -1.0) * std::sqrt(std::max(z2, 0.0));
    return Trilateration{p1 + x * ex + y * ey + z * ez, z2};
}

inline Vec3 trilaterate(const Vec3& p1, const Vec3& p2, const Vec3& p3, double d1, double d2, double d3, int sign) {
    if ((p2 - p1).cross(p3 - p1).norm() < 1e-12) throw Error(ErrorCode::NoRealSolution, "degenerate anchors");
    auto r = try_trilaterate(p1, p2, p3, d1, d2, d3, sign);
    if (!r) throw Error(ErrorCode::NoRealSolution, "negative height discriminant");
    return r->point;
}

struct RigidFit {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double residual = 0.0;  // max point deviation
};

// Least-squares proper rigid motion taking `from` onto `to`.
inline RigidFit superpose(std::span<const Vec3> from, std::span<const Vec3> to) {
    const auto n = static_cast<Eigen::Index>(from.size());
    Eigen::Matrix3Xd src(3, n), dst(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        src.col(i) = from[static_cast<std::size_t>(i)];
        dst.col(i) = to[static_cast<std::size_t>(i)];
    }
    const Eigen::Matrix4d m = Eigen::umeyama(src, dst, false);
    RigidFit fit;
    fit.rotation = m.topLeftCorner<3, 3>();
    fit.translation = m.topRightCorner<3, 1>();
    for (Eigen::Index i = 0; i < n; ++i)
        fit.residual = std::max(fit.residual, (fit.rotation * src.col(i) + fit.translation - dst.col(i)).norm());
    return fit;
}

struct Realization {
    Mat3 rotation = Mat3::Identity();  // pose of B relative to A
    Vec3 translation = Vec3::Zero();
    std::vector<Vec3> positions;       // per ACG vertex, A frame at identity
    std::uint32_t degenerateBits = 0;  // vertices whose two mirror branches coincide
    double residual = 0.0;

    [[nodiscard]] Pose pose() const { return pose_from_rigid(rotation, translation); }
    // Tait-Bryan representative nearest to `hint` (angles compared on the circle).
    [[nodiscard]] Pose pose_near(const Pose& hint) const {
        const auto reps = angles_from_rotation(rotation);
        auto dist = [&](const Vec3& a) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += std::abs(angle_delta(a[i], hint.v[3 + static_cast<std::size_t>(i)]));
            return s;
        };
        const Vec3& best = dist(reps[1]) < dist(reps[0]) ? reps[1] : reps[0];
        return Pose{{translation.x(), translation.y(), translation.z(), best.x(), best.y(), best.z()}};
    }
};

inline constexpr double kSuperpositionFailTol = 1e-6;

inline std::optional<Realization> try_realize(const CayleyPoint& c, const CompleteThreeTree& tree, FlipSignature flip,
                                              ErrorCode* why = nullptr) {
    auto fail = [&](ErrorCode code) -> std::optional<Realization> {
        if (why) *why = code;
        return std::nullopt;
    };
    const ActiveConstraintGraph& g = *tree.acg;
    const std::size_t n = g.vertices.size();
    for (double x : c.coords)
        if (!(x >= 0.0) || !std::isfinite(x)) return fail(ErrorCode::NoRealPreimage);
    Realization r;
    r.positions.assign(n, Vec3::Zero());
    const double d01 = tree.edge_length(tree.edges[tree.baseEdges[0]], c);
    const double d02 = tree.edge_length(tree.edges[tree.baseEdges[1]], c);
    const double d12 = tree.edge_length(tree.edges[tree.baseEdges[2]], c);
    if (d01 < 1e-12) return fail(ErrorCode::NoRealPreimage);
    const double x = (d01 * d01 + d02 * d02 - d12 * d12) / (2.0 * d01);
    const double y2 = d02 * d02 - x * x;
    if (y2 < -kDiscriminantTol) return fail(ErrorCode::NoRealPreimage);
    r.positions[tree.order[1]] = Vec3(d01, 0.0, 0.0);
    r.positions[tree.order[2]] = Vec3(x, std::sqrt(std::max(y2, 0.0)), 0.0);
    for (std::size_t k = 0; k < tree.attachments.size(); ++k) {
        const Attachment& at = tree.attachments[k];
        const auto t = try_trilaterate(r.positions[at.parents[0]], r.positions[at.parents[1]],
                                       r.positions[at.parents[2]], tree.edge_length(tree.edges[at.edges[0]], c),
                                       tree.edge_length(tree.edges[at.edges[1]], c),
                                       tree.edge_length(tree.edges[at.edges[2]], c), flip.sign(k));
        if (!t) return fail(ErrorCode::NoRealPreimage);
        if (t->heightSquared <= kDiscriminantTol) r.degenerateBits |= 1u << k;
        r.positions[at.vertex] = t->point;
    }
    std::vector<Vec3> tmplA, tmplB, realA, realB;
    for (std::size_t v = 0; v < n; ++v) {
        if (g.vertices[v].side == Side::A) {
            tmplA.push_back(g.point(v).position);
            realA.push_back(r.positions[v]);
        } else {
            tmplB.push_back(g.point(v).position);
            realB.push_back(r.positions[v]);
        }
    }
    const RigidFit fa = superpose(tmplA, realA);
    const RigidFit fb = superpose(tmplB, realB);
    r.residual = std::max(fa.residual, fb.residual);
    if (r.residual > kSuperpositionFailTol) return fail(ErrorCode::SuperpositionFailure);
    r.rotation = fa.rotation.transpose() * fb.rotation;
    r.translation = fa.rotation.transpose() * (fb.translation - fa.translation);
    // re-express the realized vertices with A at identity
    for (auto& p : r.positions) p = fa.rotation.transpose() * (p - fa.translation);
    return r;
}

inline Configuration realize(const CayleyPoint& c, const CompleteThreeTree& tree, FlipSignature flip) {
    ErrorCode why = ErrorCode::NoRealPreimage;
    auto r = try_realize(c, tree, flip, &why);
    if (!r) throw Error(why, why == ErrorCode::SuperpositionFailure ? "inconsistent tree lengths" : "no real preimage");
    return Configuration{tree.acg->setA, tree.acg->setB, r->pose()};
}

inline std::optional<FlipSignature> try_flip_of_positions(std::span<const Vec3> pos, const CompleteThreeTree& tree) {
    FlipSignature f;
    f.count = static_cast<std::uint8_t>(tree.attachments.size());
    for (std::size_t k = 0; k < tree.attachments.size(); ++k) {
        const Attachment& at = tree.attachments[k];
        const Vec3& p1 = pos[at.parents[0]];
        const double vol = (pos[at.parents[1]] - p1).cross(pos[at.parents[2]] - p1).dot(pos[at.vertex] - p1);
        if (std::abs(vol) < kVolumeTol) return std::nullopt;
        if (vol > 0) f.bits |= 1u << k;
    }
    return f;
}

inline FlipSignature flip_of(const Pose& pose, const CompleteThreeTree& tree) {
    auto f = try_flip_of_positions(acg_positions(*tree.acg, pose), tree);
    if (!f) throw Error(ErrorCode::ZeroVolume, "non-generic placement");
    return *f;
}

inline FlipSignature flip_of(const Configuration& config, const CompleteThreeTree& tree) {
    return flip_of(config.pose, tree);
}

// ---------------------------------------------------------------------------
// Base space bounds and grid

struct Interval {
    double lo = 0.0, hi = 0.0;
    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

// Over-approximating box for the Cayley parameters; `active` overrides the tree targets.
inline std::vector<Interval> cayley_bounds(const CompleteThreeTree& tree, std::optional<CayleyPoint> active = {}) {
    const ActiveConstraintGraph& g = *tree.acg;
    const std::size_t n = g.vertices.size();
    const CayleyPoint fixed = active ? *active : tree.target_point();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // fixed-length graph: intra template distances plus active targets
    std::vector<double> lo(n * n, 0.0), hi(n * n, inf);
    for (std::size_t v = 0; v < n; ++v) hi[v * n + v] = 0.0;
    auto fix = [&](std::size_t u, std::size_t v, double d) {
        lo[u * n + v] = lo[v * n + u] = d;
        hi[u * n + v] = hi[v * n + u] = d;
    };
    for (const auto& e : g.intraEdges) fix(e.u, e.v, e.length);
    for (std::size_t i = 0; i < g.activeEdges.size(); ++i) fix(g.activeEdges[i].u, g.activeEdges[i].v, fixed.coords[i]);

    // shortest paths give finite upper bounds for every pair
    std::vector<double> sp = hi;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sp[i * n + j] = std::min(sp[i * n + j], sp[i * n + k] + sp[k * n + j]);
    for (std::size_t i = 0; i < n * n; ++i) hi[i] = std::min(hi[i], sp[i]);

    // 2-path triangle-inequality tightening through common tree neighbours
    std::vector<std::uint8_t> adj(n * n, 0);
    for (const auto& e : tree.edges) adj[e.u * n + e.v] = adj[e.v * n + e.u] = 1;
    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        for (std::size_t s = 0; s < tree.cayleyEdges.size(); ++s) {
            const TreeEdge& e = tree.edges[tree.cayleyEdges[s]];
            const std::size_t u = e.u, v = e.v;
            for (std::size_t w = 0; w < n; ++w) {
                if (w == u || w == v || !adj[u * n + w] || !adj[v * n + w]) continue;
                const double l1 = lo[u * n + w], h1 = hi[u * n + w], l2 = lo[w * n + v], h2 = hi[w * n + v];
                const double newHi = h1 + h2;
                const double newLo = std::max({0.0, l1 - h2, l2 - h1});
                if (newHi < hi[u * n + v] - 1e-15) {
                    hi[u * n + v] = hi[v * n + u] = newHi;
                    changed = true;
                }
                if (newLo > lo[u * n + v] + 1e-15) {
                    lo[u * n + v] = lo[v * n + u] = newLo;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    std::vector<Interval> box;
    for (std::size_t s = 0; s < tree.cayleyEdges.size(); ++s) {
        const TreeEdge& e = tree.edges[tree.cayleyEdges[s]];
        Interval iv{lo[e.u * n + e.v], hi[e.u * n + e.v]};
        if (iv.lo > iv.hi + 1e-12) throw Error(ErrorCode::EmptyBox, "Cayley parameter range is empty");
        iv.hi = std::max(iv.hi, iv.lo);
        box.push_back(iv);
    }
    return box;
}

// Grid values along one axis: exact spacing `step`, centred inside the interval.
inline std::vector<double> axis_samples(Interval iv, double step) {
    const double width = iv.hi - iv.lo;
    const auto count = static_cast<std::size_t>(std::floor(width / step + 1e-12)) + 1;
    const double start = iv.lo + 0.5 * (width - static_cast<double>(count - 1) * step);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
    return out;
}

struct BasePoint {
    CayleyPoint point;
    std::vector<FlipSignature> flips;  // flips with a real preimage, mirror-coincident ones once
};

// Flips of `c` with a real preimage; branches that coincide on a degenerate vertex are reported once.
inline std::vector<FlipSignature> realizable_flips(const CayleyPoint& c, const CompleteThreeTree& tree) {
    std::vector<FlipSignature> out;
    const auto count = static_cast<std::uint8_t>(tree.flip_bits());
    for (std::uint32_t b = 0; b < tree.flip_count(); ++b) {
        const FlipSignature f{b, count};
        auto r = try_realize(c, tree, f);
        if (!r) continue;
        if ((~b) & r->degenerateBits) continue;
        out.push_back(f);
    }
    return out;
}

template <class Visitor>
void for_each_base_point(const CompleteThreeTree& tree, const std::vector<Interval>& box, double step,
                         Visitor&& visit) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidInput, "Cayley step must be positive");
    std::vector<std::vector<double>> axes;
    for (const auto& iv : box) axes.push_back(axis_samples(iv, step));
    CayleyPoint c = tree.target_point();
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        for (std::size_t a = 0; a < axes.size(); ++a) c.free(a) = axes[a][idx[a]];
        auto flips = realizable_flips(c, tree);
        if (!flips.empty()) visit(BasePoint{c, std::move(flips)});
        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
            if (a == 0) return;
        }
        if (axes.empty()) return;
    }
}

inline std::vector<BasePoint> enumerate_base_grid(const CompleteThreeTree& tree, const std::vector<Interval>& box,
                                                  double step) {
    std::vector<BasePoint> out;
    for_each_base_point(tree, box, step, [&](BasePoint p) { out.push_back(std::move(p)); });
    return out;
}

}  // namespace ucvol
