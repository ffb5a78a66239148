#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace toothfuse {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyMeshError : public Error { public: using Error::Error; };
class InvalidMeshError : public Error { public: using Error::Error; };
class CoincidentPointsError : public Error { public: using Error::Error; };
class DegenerateNeighborhoodError : public Error { public: using Error::Error; };
class DegenerateConfigurationError : public Error { public: using Error::Error; };
class NoValidModelError : public Error { public: using Error::Error; };
class EmptyRootError : public Error { public: using Error::Error; };
class NotWatertightError : public Error { public: using Error::Error; };
class DivergedError : public Error { public: using Error::Error; };
class EmptySurfaceError : public Error { public: using Error::Error; };
class ZeroDiagonalError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

// Wraps an error thrown inside a pipeline stage with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// ---------------------------------------------------------------------------
// Rigid transform (rotation + translation, no scale)

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

    RigidTransform inverse() const {
        RigidTransform inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(inv.rotation * translation);
        return inv;
    }

    Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.block<3, 3>(0, 0) = rotation;
        m.block<3, 1>(0, 3) = translation;
        return m;
    }

    static RigidTransform from_matrix(const Mat4& m) {
        RigidTransform t;
        t.rotation = m.block<3, 3>(0, 0);
        t.translation = m.block<3, 1>(0, 3);
        return t;
    }

    bool is_valid(double tol = 1e-9) const {
        if (!rotation.allFinite() || !translation.allFinite()) return false;
        Mat3 rtr = rotation.transpose() * rotation;
        return (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

// Applying the result is equivalent to applying b, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform c;
    c.rotation = a.rotation * b.rotation;
    c.translation = a.rotation * b.translation + a.translation;
    return c;
}

inline double rotation_angle(const Mat3& r) {
    double c = (r.trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

// Rotation about a unit axis by angle (radians), Rodrigues form.
inline Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// ---------------------------------------------------------------------------
// Axis-aligned bounding box

struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    Aabb() = default;
    Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

    bool empty() const { return (min.array() > max.array()).any(); }

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    void expand(const Aabb& b) {
        min = min.cwiseMin(b.min);
        max = max.cwiseMax(b.max);
    }

    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extent() const { return max - min; }
    double diagonal() const { return empty() ? 0.0 : (max - min).norm(); }

    // Squared distance from a point to the box (0 if inside).
    double squared_distance(const Vec3& p) const {
        Vec3 d = (min - p).cwiseMax(0.0).cwiseMax(p - max);
        return d.squaredNorm();
    }
};

// ---------------------------------------------------------------------------
// Mesh and point cloud

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3i> triangles;
    std::vector<Vec3> normals;  // per-vertex, unit length; empty if absent
    std::vector<Vec3> colors;   // per-vertex RGB in [0,1]; empty if absent

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_colors() const { return !colors.empty(); }
    bool empty() const { return vertices.empty(); }

    Aabb bounds() const {
        Aabb b;
        for (const Vec3& v : vertices) b.expand(v);
        return b;
    }

    void validate() const {
        const std::size_t n = vertices.size();
        for (const Vec3& v : vertices)
            if (!v.allFinite()) throw InvalidMeshError("non-finite vertex coordinate");
        for (const Vec3i& t : triangles)
            for (int k = 0; k < 3; ++k)
                if (t[k] < 0 || static_cast<std::size_t>(t[k]) >= n)
                    throw InvalidMeshError("triangle index out of range");
        if (!normals.empty()) {
            if (normals.size() != n) throw InvalidMeshError("normal count != vertex count");
            for (const Vec3& nm : normals)
                if (std::abs(nm.norm() - 1.0) > 1e-6)
                    throw InvalidMeshError("normal not unit length");
        }
        if (!colors.empty() && colors.size() != n)
            throw InvalidMeshError("color count != vertex count");
    }
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // per-point, unit length; empty if absent

    std::size_t size() const { return points.size(); }
    bool has_normals() const { return !normals.empty(); }
    bool empty() const { return points.empty(); }

    Aabb bounds() const {
        Aabb b;
        for (const Vec3& p : points) b.expand(p);
        return b;
    }

    void validate() const {
        for (const Vec3& p : points)
            if (!p.allFinite()) throw InvalidMeshError("non-finite point coordinate");
        if (!normals.empty()) {
            if (normals.size() != points.size())
                throw InvalidMeshError("normal count != point count");
            for (const Vec3& nm : normals)
                if (std::abs(nm.norm() - 1.0) > 1e-6)
                    throw InvalidMeshError("normal not unit length");
        }
    }
};

}  // namespace toothfuse
