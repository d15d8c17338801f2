#pragma once
// Geometric foundation: point sets, poses, pair constraints and the 6-D pose grid.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ucvol {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class ErrorCode {
    InvalidInput,
    UnknownPoint,
    DegenerateSet,
    InsufficientPoints,
    NotNice,
    NoRealSolution,
    NoRealPreimage,
    SuperpositionFailure,
    ZeroVolume,
    EmptyBox,
    InfeasibleSample,
    InsufficientData,
    EmptyACR,
    UndefinedLevel,
    ZeroDenominator,
    BudgetExceeded,
    Config,
    Io,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::UnknownPoint: return "UnknownPoint";
        case ErrorCode::DegenerateSet: return "DegenerateSet";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::NotNice: return "NotNice";
        case ErrorCode::NoRealSolution: return "NoRealSolution";
        case ErrorCode::NoRealPreimage: return "NoRealPreimage";
        case ErrorCode::SuperpositionFailure: return "SuperpositionFailure";
        case ErrorCode::ZeroVolume: return "ZeroVolume";
        case ErrorCode::EmptyBox: return "EmptyBox";
        case ErrorCode::InfeasibleSample: return "InfeasibleSample";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::EmptyACR: return "EmptyACR";
        case ErrorCode::UndefinedLevel: return "UndefinedLevel";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::Config: return "Config";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Points

struct Point {
    int id = 0;
    Vec3 position = Vec3::Zero();
    double radius = 1.0;
};

class PointSet {
public:
    PointSet() = default;
    PointSet(std::string label, std::vector<Point> points) : label_(std::move(label)), points_(std::move(points)) {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const Point& p = points_[i];
            if (!(p.radius > 0.0) || !std::isfinite(p.radius))
                throw Error(ErrorCode::InvalidInput, "point " + std::to_string(p.id) + " has non-positive radius");
            if (!p.position.allFinite())
                throw Error(ErrorCode::InvalidInput, "point " + std::to_string(p.id) + " has non-finite position");
            if (!index_.emplace(p.id, i).second)
                throw Error(ErrorCode::InvalidInput, "duplicate point id " + std::to_string(p.id) + " in " + label_);
        }
    }

    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] std::span<const Point> points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Point& operator[](std::size_t i) const { return points_[i]; }

    [[nodiscard]] std::size_t index_of(int id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw Error(ErrorCode::UnknownPoint, "no point with id " + std::to_string(id) + " in " + label_);
        return it->second;
    }
    [[nodiscard]] bool contains(int id) const { return index_.count(id) != 0; }

    [[nodiscard]] double max_norm() const {
        double m = 0.0;
        for (const auto& p : points_) m = std::max(m, p.position.norm());
        return m;
    }

private:
    std::string label_;
    std::vector<Point> points_;
    std::unordered_map<int, std::size_t> index_;
};

// True when the positions span at least a plane.
inline bool non_collinear(std::span<const Vec3> pts, double tol = 1e-9) {
    if (pts.size() < 3) return false;
    for (std::size_t i = 1; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if ((pts[i] - pts[0]).cross(pts[j] - pts[0]).norm() > tol) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Poses

inline double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w -= kTwoPi;
    return w;
}

// Signed difference a - b folded into [-pi, pi).
inline double angle_delta(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d < -std::numbers::pi) d += kTwoPi;
    if (d >= std::numbers::pi) d -= kTwoPi;
    return d;
}

// Rotation for Tait-Bryan angles applied about x, then y, then z (fixed axes).
inline Mat3 rotation_matrix(double rx, double ry, double rz) {
    return (Eigen::AngleAxisd(rz, Vec3::UnitZ()) * Eigen::AngleAxisd(ry, Vec3::UnitY()) *
            Eigen::AngleAxisd(rx, Vec3::UnitX()))
        .toRotationMatrix();
}

// Translation (tx, ty, tz) followed by rotation angles (rx, ry, rz).
struct Pose {
    std::array<double, 6> v{};

    static Pose from(const Vec3& t, const Vec3& angles) {
        return Pose{{t.x(), t.y(), t.z(), wrap_angle(angles.x()), wrap_angle(angles.y()), wrap_angle(angles.z())}};
    }
    [[nodiscard]] Vec3 translation() const { return {v[0], v[1], v[2]}; }
    [[nodiscard]] Vec3 angles() const { return {v[3], v[4], v[5]}; }
    [[nodiscard]] Mat3 rotation() const { return rotation_matrix(v[3], v[4], v[5]); }
    [[nodiscard]] Pose wrapped() const { return from(translation(), angles()); }
    [[nodiscard]] bool finite() const {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    }
    bool operator==(const Pose&) const = default;
};

// Both Tait-Bryan triples that produce R, each wrapped to [0, 2pi).
inline std::array<Vec3, 2> angles_from_rotation(const Mat3& r) {
    const double s = std::clamp(-r(2, 0), -1.0, 1.0);
    double rx = 0.0;
    double ry = std::asin(s);
    double rz = 0.0;
    if (std::abs(s) < 1.0 - 1e-12) {
        rx = std::atan2(r(2, 1), r(2, 2));
        rz = std::atan2(r(1, 0), r(0, 0));
    } else {
        // gimbal lock: only rz - sign(s)*rx is determined
        rz = std::atan2(-r(0, 1), r(1, 1));
    }
    const Vec3 first(wrap_angle(rx), wrap_angle(ry), wrap_angle(rz));
    const Vec3 second(wrap_angle(rx + std::numbers::pi), wrap_angle(std::numbers::pi - ry),
                      wrap_angle(rz + std::numbers::pi));
    return {first, second};
}

inline Pose pose_from_rigid(const Mat3& r, const Vec3& t) { return Pose::from(t, angles_from_rotation(r)[0]); }

inline Vec3 apply_pose(const Pose& pose, const Vec3& p) { return pose.rotation() * p + pose.translation(); }

inline std::vector<Vec3> place(const PointSet& set, const Pose& pose) {
    const Mat3 r = pose.rotation();
    const Vec3 t = pose.translation();
    std::vector<Vec3> out;
    out.reserve(set.size());
    for (const auto& p : set.points()) out.push_back(r * p.position + t);
    return out;
}

inline std::vector<Vec3> template_positions(const PointSet& set) {
    std::vector<Vec3> out;
    out.reserve(set.size());
    for (const auto& p : set.points()) out.push_back(p.position);
    return out;
}

// Set A sits at the identity; set B is moved by `pose`.
struct Configuration {
    std::shared_ptr<const PointSet> setA;
    std::shared_ptr<const PointSet> setB;
    Pose pose;
};

// Cross pair identified by point ids (a in A, b in B).
struct PointPair {
    int a = 0;
    int b = 0;
    auto operator<=>(const PointPair&) const = default;
};

inline double pair_distance(const Configuration& c, int idA, int idB) {
    const Vec3& a = (*c.setA)[c.setA->index_of(idA)].position;
    const Vec3& b = (*c.setB)[c.setB->index_of(idB)].position;
    return (a - apply_pose(c.pose, b)).norm();
}

// ---------------------------------------------------------------------------
// Constraints

struct PairRule {
    double lambda = 1.0;
    double delta = 0.0;
    [[nodiscard]] double bound(double ra, double rb) const { return lambda * (ra + rb) + delta; }
    bool operator==(const PairRule&) const = default;
};

struct AngleInterval {
    double lo = 0.0;
    double hi = std::numbers::pi / 2;
    [[nodiscard]] bool contains(double a) const { return a >= lo && a <= hi; }
    bool operator==(const AngleInterval&) const = default;
};

struct ConstraintSystem {
    PairRule activeLower{0.75, 0.0};
    PairRule activeUpper{1.0, 0.9};
    PairRule collision{0.75, 0.0};
    std::optional<AngleInterval> axisRestraint;
    // Fraction of the way from lower to upper used as the thin-well target length.
    double targetFraction = 0.5;

    [[nodiscard]] double lower(double ra, double rb) const { return activeLower.bound(ra, rb); }
    [[nodiscard]] double upper(double ra, double rb) const { return activeUpper.bound(ra, rb); }
    [[nodiscard]] double collision_bound(double ra, double rb) const { return collision.bound(ra, rb); }
    [[nodiscard]] double target(double ra, double rb) const {
        const double l = lower(ra, rb);
        return l + targetFraction * (upper(ra, rb) - l);
    }
    bool operator==(const ConstraintSystem&) const = default;
};

// Per-index bound tables for a fixed pair of point sets.
class BoundTable {
public:
    BoundTable(const PointSet& a, const PointSet& b, const ConstraintSystem& sys) : na_(a.size()), nb_(b.size()) {
        lower_.resize(na_ * nb_);
        upper_.resize(na_ * nb_);
        collision_.resize(na_ * nb_);
        target_.resize(na_ * nb_);
        for (std::size_t i = 0; i < na_; ++i)
            for (std::size_t j = 0; j < nb_; ++j) {
                const double ra = a[i].radius, rb = b[j].radius;
                lower_[i * nb_ + j] = sys.lower(ra, rb);
                upper_[i * nb_ + j] = sys.upper(ra, rb);
                collision_[i * nb_ + j] = sys.collision_bound(ra, rb);
                target_[i * nb_ + j] = sys.target(ra, rb);
                if (lower_[i * nb_ + j] > upper_[i * nb_ + j])
                    throw Error(ErrorCode::InvalidInput, "active lower bound exceeds upper bound");
            }
    }
    [[nodiscard]] double lower(std::size_t i, std::size_t j) const { return lower_[i * nb_ + j]; }
    [[nodiscard]] double upper(std::size_t i, std::size_t j) const { return upper_[i * nb_ + j]; }
    [[nodiscard]] double collision(std::size_t i, std::size_t j) const { return collision_[i * nb_ + j]; }
    [[nodiscard]] double target(std::size_t i, std::size_t j) const { return target_[i * nb_ + j]; }
    [[nodiscard]] double max_upper() const { return *std::max_element(upper_.begin(), upper_.end()); }
    [[nodiscard]] std::size_t size_a() const { return na_; }
    [[nodiscard]] std::size_t size_b() const { return nb_; }

private:
    std::size_t na_, nb_;
    std::vector<double> lower_, upper_, collision_, target_;
};

struct Violation {
    PointPair pair;
    double distance = 0.0;
    double bound = 0.0;
};

inline std::vector<Violation> check_c1(const Configuration& c, const ConstraintSystem& sys) {
    std::vector<Violation> out;
    const auto pb = place(*c.setB, c.pose);
    for (const auto& a : c.setA->points())
        for (std::size_t j = 0; j < pb.size(); ++j) {
            const Point& b = (*c.setB)[j];
            const double d = (a.position - pb[j]).norm();
            const double bound = sys.collision_bound(a.radius, b.radius);
            if (d < bound) out.push_back({{a.id, b.id}, d, bound});
        }
    return out;
}

inline bool check_active_interval(const Configuration& c, PointPair pair, const ConstraintSystem& sys) {
    const Point& a = (*c.setA)[c.setA->index_of(pair.a)];
    const Point& b = (*c.setB)[c.setB->index_of(pair.b)];
    const double d = (a.position - apply_pose(c.pose, b.position)).norm();
    return d >= sys.lower(a.radius, b.radius) && d <= sys.upper(a.radius, b.radius);
}

// Dominant covariance eigenvector of a point cloud.
inline Vec3 principal_axis(std::span<const Vec3> pts) {
    if (pts.size() < 2) throw Error(ErrorCode::DegenerateSet, "principal axis needs at least two points");
    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    cov /= static_cast<double>(pts.size());
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const auto& ev = es.eigenvalues();  // ascending
    if (ev(2) - ev(1) < 1e-9) throw Error(ErrorCode::DegenerateSet, "no unique principal axis");
    return es.eigenvectors().col(2);
}

inline double axis_angle_between(std::span<const Vec3> a, std::span<const Vec3> b) {
    const double c = std::abs(principal_axis(a).dot(principal_axis(b)));
    return std::acos(std::clamp(c, 0.0, 1.0));
}

inline double principal_axis_angle(const Configuration& c) {
    const auto pa = template_positions(*c.setA);
    const auto pb = place(*c.setB, c.pose);
    return axis_angle_between(pa, pb);
}

// ---------------------------------------------------------------------------
// Lattice keys and the pose grid

template <std::size_t D>
using LatticeKey = std::array<int, D>;

template <std::size_t D>
struct LatticeKeyHash {
    std::size_t operator()(const LatticeKey<D>& k) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (int x : k) {
            h ^= static_cast<std::uint32_t>(x);
            h *= 1099511628211ull;
            h ^= h >> 29;
        }
        return static_cast<std::size_t>(h);
    }
};

inline constexpr std::size_t kPoseDim = 6;
using CubeKey = LatticeKey<kPoseDim>;
using CubeKeyHash = LatticeKeyHash<kPoseDim>;

class GridSpec {
public:
    GridSpec() : GridSpec(2.0, std::numbers::pi / 9.0) {}
    GridSpec(double translationStep, double rotationStep, std::array<double, 6> origin = {})
        : GridSpec(std::array<double, 3>{translationStep, translationStep, translationStep},
                   period_of(rotationStep), origin) {}
    GridSpec(std::array<double, 3> translationSteps, std::array<int, 3> rotationCounts,
             std::array<double, 6> origin = {})
        : origin_(origin) {
        for (int i = 0; i < 3; ++i) {
            if (!(translationSteps[i] > 0.0)) throw Error(ErrorCode::InvalidInput, "translation step must be positive");
            if (rotationCounts[i] <= 0) throw Error(ErrorCode::InvalidInput, "rotation step count must be positive");
            step_[i] = translationSteps[i];
            period_[i] = 0;
            step_[i + 3] = kTwoPi / rotationCounts[i];
            period_[i + 3] = rotationCounts[i];
        }
    }

    // Number of rotation cells per turn; rejects steps that do not divide 2pi.
    static std::array<int, 3> period_of(double rotationStep) {
        if (!(rotationStep > 0.0)) throw Error(ErrorCode::InvalidInput, "rotation step must be positive");
        const double n = kTwoPi / rotationStep;
        const double r = std::round(n);
        if (std::abs(n - r) > 1e-9 * n || r < 1)
            throw Error(ErrorCode::InvalidInput, "rotation step must divide 2*pi");
        const int p = static_cast<int>(r);
        return {p, p, p};
    }

    [[nodiscard]] double step(std::size_t axis) const { return step_[axis]; }
    [[nodiscard]] double origin(std::size_t axis) const { return origin_[axis]; }
    // 0 for unbounded (translation) axes.
    [[nodiscard]] int period(std::size_t axis) const { return period_[axis]; }
    [[nodiscard]] const std::array<double, 6>& steps() const { return step_; }
    [[nodiscard]] const std::array<int, 6>& periods() const { return period_; }
    [[nodiscard]] const std::array<double, 6>& origins() const { return origin_; }
    bool operator==(const GridSpec&) const = default;

    [[nodiscard]] int wrap_index(std::size_t axis, int i) const {
        const int p = period_[axis];
        if (p == 0) return i;
        int r = i % p;
        return r < 0 ? r + p : r;
    }
    [[nodiscard]] CubeKey normalize(CubeKey k) const {
        for (std::size_t a = 0; a < 6; ++a) k[a] = wrap_index(a, k[a]);
        return k;
    }

private:
    std::array<double, 6> step_{};
    std::array<int, 6> period_{};
    std::array<double, 6> origin_{};
};

inline CubeKey cube_of(const Pose& pose, const GridSpec& grid) {
    CubeKey k{};
    for (std::size_t a = 0; a < 6; ++a) {
        const double x = (pose.v[a] - grid.origin(a)) / grid.step(a);
        k[a] = grid.wrap_index(a, static_cast<int>(std::floor(x)));
    }
    return k;
}

inline Pose cube_center(const CubeKey& key, const GridSpec& grid) {
    Pose p;
    for (std::size_t a = 0; a < 6; ++a) p.v[a] = grid.origin(a) + (key[a] + 0.5) * grid.step(a);
    return p;
}

// Lower corner of a cube in unwrapped pose coordinates.
inline std::array<double, 6> cube_lower(const CubeKey& key, const GridSpec& grid) {
    std::array<double, 6> lo{};
    for (std::size_t a = 0; a < 6; ++a) lo[a] = grid.origin(a) + key[a] * grid.step(a);
    return lo;
}

}  // namespace ucvol
