#pragma once
// Cube decompositions into slice-intersection elements, and the element/slice solvers.

#include "cayley.hpp"

#include <Eigen/LU>

namespace ucvol {

// Points of a 6-cube: corners 0..63 (bit a set = upper end of axis a), then 64 + f for face centre f.
using CubePoint = std::uint8_t;
inline constexpr std::size_t kCubeCorners = 64;
inline constexpr std::size_t kCubeFaces = 12;
inline constexpr std::size_t kCubePoints = kCubeCorners + kCubeFaces;

constexpr CubePoint face_center_point(std::size_t face) { return static_cast<CubePoint>(kCubeCorners + face); }

// A q-dimensional facet: the free axes vary, the others sit at the ends given by `base`.
struct Facet {
    std::uint8_t freeAxes = 0;
    std::uint8_t base = 0;  // corner with every free axis at its lower end

    [[nodiscard]] int dimension() const { return std::popcount(freeAxes); }
    // Cube faces containing the facet.
    [[nodiscard]] std::uint32_t faces() const {
        std::uint32_t m = 0;
        for (std::size_t a = 0; a < 6; ++a)
            if (!((freeAxes >> a) & 1u)) m |= 1u << (2 * a + ((base >> a) & 1u));
        return m;
    }
};

inline std::vector<Facet> cube_facets(int q) {
    if (q < 0 || q > 6) throw Error(ErrorCode::InvalidInput, "facet dimension must be in [0, 6]");
    std::vector<Facet> out;
    for (unsigned freeAxes = 0; freeAxes < 64; ++freeAxes) {
        if (std::popcount(freeAxes) != q) continue;
        const unsigned fixedAxes = 63u & ~freeAxes;
        // enumerate every sub-mask of the fixed axes
        unsigned sub = 0;
        do {
            out.push_back({static_cast<std::uint8_t>(freeAxes), static_cast<std::uint8_t>(sub)});
            sub = (sub - fixedAxes) & fixedAxes;
        } while (sub != 0);
    }
    return out;
}

struct SimplexElement {
    std::array<CubePoint, 7> points{};
    std::uint8_t size = 0;
    std::uint32_t faces = 0;  // cube faces the element lies in

    [[nodiscard]] std::span<const CubePoint> vertices() const { return {points.data(), size}; }
};

// Kuhn triangulation of a facet: one simplex per ordering of its free axes.
inline std::vector<std::array<CubePoint, 7>> kuhn_simplices(const Facet& facet) {
    std::vector<std::size_t> axes;
    for (std::size_t a = 0; a < 6; ++a)
        if ((facet.freeAxes >> a) & 1u) axes.push_back(a);
    std::vector<std::array<CubePoint, 7>> out;
    do {
        std::array<CubePoint, 7> s{};
        CubePoint c = facet.base;
        s[0] = c;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            c = static_cast<CubePoint>(c | (1u << axes[i]));
            s[i + 1] = c;
        }
        out.push_back(s);
    } while (std::next_permutation(axes.begin(), axes.end()));
    return out;
}

// Every q-facet, Kuhn-triangulated: C(6,q) 2^(6-q) q! simplices.
inline std::vector<SimplexElement> decompose_simplicial(int q) {
    if (q < 1 || q > 6) throw Error(ErrorCode::InvalidInput, "contact count must be in [1, 6]");
    std::vector<SimplexElement> out;
    for (const Facet& f : cube_facets(q))
        for (const auto& s : kuhn_simplices(f)) out.push_back({s, static_cast<std::uint8_t>(q + 1), f.faces()});
    return out;
}

// Per face: its (q-1)-facets, triangulated and coned over the face centre.
inline std::vector<SimplexElement> decompose_face_center(int q) {
    if (q < 1 || q > 6) throw Error(ErrorCode::InvalidInput, "contact count must be in [1, 6]");
    std::vector<SimplexElement> out;
    const auto facets = cube_facets(q - 1);
    for (std::size_t face = 0; face < kCubeFaces; ++face) {
        const std::size_t axis = face / 2, side = face % 2;
        for (const Facet& f : facets) {
            if ((f.freeAxes >> axis) & 1u) continue;
            if (((f.base >> axis) & 1u) != side) continue;
            for (const auto& s : kuhn_simplices(f)) {
                SimplexElement e{s, static_cast<std::uint8_t>(q + 1), 1u << face};
                e.points[static_cast<std::size_t>(q)] = face_center_point(face);
                out.push_back(e);
            }
        }
    }
    return out;
}

// Coordinates of cube points for a cube with lower corner `lower`.
struct CubeFrame {
    std::array<double, 6> lower{};
    std::array<double, 6> step{};

    [[nodiscard]] std::array<double, 6> point(CubePoint p) const {
        std::array<double, 6> x{};
        if (p < kCubeCorners) {
            for (std::size_t a = 0; a < 6; ++a) x[a] = lower[a] + (((p >> a) & 1u) ? step[a] : 0.0);
        } else {
            const std::size_t face = p - kCubeCorners;
            for (std::size_t a = 0; a < 6; ++a) x[a] = lower[a] + 0.5 * step[a];
            x[face / 2] = lower[face / 2] + ((face % 2) ? step[face / 2] : 0.0);
        }
        return x;
    }
    [[nodiscard]] std::array<double, 6> facet_center(const Facet& f) const {
        std::array<double, 6> x{};
        for (std::size_t a = 0; a < 6; ++a)
            x[a] = lower[a] + (((f.freeAxes >> a) & 1u) ? 0.5 * step[a] : (((f.base >> a) & 1u) ? step[a] : 0.0));
        return x;
    }
};

// ---------------------------------------------------------------------------
// Slice intersections

inline constexpr double kBarycentricTol = 1e-9;
inline constexpr double kSpanTol = 1e-9;
inline constexpr double kPivotTol = 1e-12;

struct SliceHit {
    CayleyPoint point;
    std::array<double, 7> weights{};  // barycentric weights or parallelepiped coefficients
};

namespace detail {
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 7, 7>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 7, 1>;

inline std::optional<SmallVector> solve_small(const SmallMatrix& m, const SmallVector& rhs) {
    Eigen::FullPivLU<SmallMatrix> lu(m);
    const auto diag = lu.matrixLU().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i)
        if (std::abs(diag(i)) < kPivotTol) return std::nullopt;
    return SmallVector(lu.solve(rhs));
}
}  // namespace detail

// Point of the simplex spanned by `images` whose active block equals `targets`.
inline std::optional<SliceHit> intersect_simplex_slice(std::span<const CayleyPoint> images,
                                                       std::span<const double> targets) {
    const std::size_t q = targets.size();
    if (images.size() != q + 1 || q == 0 || q > 6) throw Error(ErrorCode::InvalidInput, "simplex needs q+1 images");
    const auto n = static_cast<Eigen::Index>(q + 1);
    detail::SmallMatrix m(n, n);
    detail::SmallVector rhs(n);
    rhs(0) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) m(0, j) = 1.0;
    for (std::size_t i = 0; i < q; ++i) {
        rhs(static_cast<Eigen::Index>(i + 1)) = targets[i];
        for (std::size_t j = 0; j <= q; ++j)
            m(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(j)) = images[j].coords[i];
    }
    const auto lambda = detail::solve_small(m, rhs);
    if (!lambda) return std::nullopt;
    for (Eigen::Index j = 0; j < n; ++j)
        if (!((*lambda)(j) >= -kBarycentricTol)) return std::nullopt;
    SliceHit hit;
    hit.point.q = static_cast<int>(q);
    for (std::size_t i = 0; i < q; ++i) hit.point.coords[i] = targets[i];
    for (std::size_t k = q; k < 6; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j <= q; ++j) s += (*lambda)(static_cast<Eigen::Index>(j)) * images[j].coords[k];
        hit.point.coords[k] = s;
    }
    for (std::size_t j = 0; j <= q; ++j) hit.weights[j] = (*lambda)(static_cast<Eigen::Index>(j));
    return hit;
}

// Point center + sum_j alpha_j basis_j with the given active block and every |alpha_j| <= 1.
inline std::optional<SliceHit> intersect_parallelepiped_slice(const CayleyPoint& center,
                                                              std::span<const std::array<double, 6>> basis,
                                                              std::span<const double> targets) {
    const std::size_t q = targets.size();
    if (basis.size() != q || q == 0 || q > 6) throw Error(ErrorCode::InvalidInput, "parallelepiped needs q vectors");
    const auto n = static_cast<Eigen::Index>(q);
    detail::SmallMatrix m(n, n);
    detail::SmallVector rhs(n);
    for (std::size_t i = 0; i < q; ++i) {
        rhs(static_cast<Eigen::Index>(i)) = targets[i] - center.coords[i];
        for (std::size_t j = 0; j < q; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = basis[j][i];
    }
    const auto alpha = detail::solve_small(m, rhs);
    if (!alpha) return std::nullopt;
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(std::abs((*alpha)(j)) <= 1.0 + kSpanTol)) return std::nullopt;
    SliceHit hit;
    hit.point.q = static_cast<int>(q);
    for (std::size_t i = 0; i < q; ++i) hit.point.coords[i] = targets[i];
    for (std::size_t k = q; k < 6; ++k) {
        double s = center.coords[k];
        for (std::size_t j = 0; j < q; ++j) s += (*alpha)(static_cast<Eigen::Index>(j)) * basis[j][k];
        hit.point.coords[k] = s;
    }
    for (std::size_t j = 0; j < q; ++j) hit.weights[j] = (*alpha)(static_cast<Eigen::Index>(j));
    return hit;
}

// Dividing points t = i/s of a mapped edge whose first coordinate lies in [lo, hi].
inline std::vector<double> thick_points(const CayleyPoint& from, const CayleyPoint& to, int subdivisions, double lo,
                                        double hi) {
    if (subdivisions < 1) throw Error(ErrorCode::InvalidInput, "subdivision count must be positive");
    std::vector<double> out;
    for (int i = 0; i <= subdivisions; ++i) {
        const double t = static_cast<double>(i) / subdivisions;
        const double x = (1.0 - t) * from.coords[0] + t * to.coords[0];
        if (x >= lo - 1e-12 && x <= hi + 1e-12) out.push_back(t);
    }
    return out;
}

inline int thick_subdivisions(const CayleyPoint& from, const CayleyPoint& to, double cayleyStep) {
    double s = 0.0;
    for (std::size_t k = 0; k < 6; ++k) s += (to.coords[k] - from.coords[k]) * (to.coords[k] - from.coords[k]);
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(s) / cayleyStep)));
}

}  // namespace ucvol
