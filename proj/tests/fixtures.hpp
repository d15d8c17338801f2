#pragma once
// Small synthetic systems shared by the unit and acceptance tests.

#include <ucvol/core.hpp>

#include <memory>
#include <random>

namespace fixtures {

using ucvol::Point;
using ucvol::PointSet;
using ucvol::Vec3;

inline std::shared_ptr<const PointSet> make_set(const std::string& label, std::vector<Vec3> pos, double radius,
                                                int firstId = 1) {
    std::vector<Point> pts;
    int id = firstId;
    for (const auto& p : pos) pts.push_back({id++, p, radius});
    return std::make_shared<const PointSet>(label, std::move(pts));
}

// Scalene triangles so that principal axes are well defined.
inline std::shared_ptr<const PointSet> tri_a(double r = 0.5) {
    return make_set("A", {Vec3(0.0, 0.0, 0.0), Vec3(1.3, 0.0, 0.0), Vec3(0.35, 0.9, 0.0)}, r);
}
inline std::shared_ptr<const PointSet> tri_b(double r = 0.5) {
    return make_set("B", {Vec3(0.0, 0.0, 0.0), Vec3(1.1, 0.25, 0.0), Vec3(0.3, 0.85, 0.2)}, r);
}

// Four non-coplanar points per set, used where more than three vertices are needed.
inline std::shared_ptr<const PointSet> tet_a(double r = 0.5) {
    return make_set("A", {Vec3(0, 0, 0), Vec3(1.4, 0, 0), Vec3(0.3, 1.2, 0), Vec3(0.5, 0.4, 1.1)}, r);
}
inline std::shared_ptr<const PointSet> tet_b(double r = 0.5) {
    return make_set("B", {Vec3(0, 0, 0), Vec3(1.2, 0.3, 0), Vec3(0.2, 1.3, 0.1), Vec3(0.6, 0.5, 1.0)}, r);
}

inline ucvol::Pose random_pose(std::mt19937_64& rng, double span) {
    std::uniform_real_distribution<double> t(-span, span), a(0.0, ucvol::kTwoPi);
    return ucvol::Pose{{t(rng), t(rng), t(rng), a(rng), a(rng), a(rng)}};
}

}  // namespace fixtures
