#pragma once

// Shared builders for the test suite: small analytic meshes, clouds, and
// rigid-transform helpers with known ground truth.

#include "toothfuse/toothfuse.hpp"

#include <cmath>
#include <vector>

namespace tt {

using namespace toothfuse;

inline RigidTransform axis_angle(const Vec3& axis, double deg, const Vec3& t = Vec3::Zero()) {
    RigidTransform r;
    r.rotation = Eigen::AngleAxisd(deg * M_PI / 180.0, axis.normalized()).toRotationMatrix();
    r.translation = t;
    return r;
}

// quaternion-based extraction: precise down to machine epsilon for tiny
// angles, where the acos-of-trace form bottoms out near sqrt(eps)
inline double rotation_error_deg(const Mat3& a, const Mat3& b) {
    const Eigen::Quaterniond q(Mat3(a.transpose() * b));
    const double angle =
        2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
    return angle * 180.0 / M_PI;
}

inline RigidTransform random_rigid(Rng& rng, double max_deg, double max_trans) {
    Vec3 axis;
    do {
        axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (axis.norm() < 1e-3);
    Vec3 dir;
    do {
        dir = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (dir.norm() < 1e-3);
    return axis_angle(axis, rng.uniform(0.0, max_deg),
                      dir.normalized() * rng.uniform(0.0, max_trans));
}

inline TriMesh tetrahedron(const Vec3& offset = Vec3::Zero(), double scale = 1.0) {
    TriMesh m;
    m.vertices = {offset + scale * Vec3(0, 0, 0), offset + scale * Vec3(1, 0, 0),
                  offset + scale * Vec3(0, 1, 0), offset + scale * Vec3(0, 0, 1)};
    m.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
    return m;
}

inline TriMesh unit_cube() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    m.triangles = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                   {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
    return m;
}

inline TriMesh sphere_mesh(double r, int res = 48, const Vec3& center = Vec3::Zero()) {
    Vec3 lo = center - Vec3::Constant(r + 0.2 * r + 0.05);
    Vec3 hi = center + Vec3::Constant(r + 0.2 * r + 0.05);
    ScalarGrid g = evaluate_field([&](const Vec3& p) { return (p - center).norm() - r; },
                                  Vec3i::Constant(res), Aabb(lo, hi));
    return marching_cubes(g, 0.0);
}

// Regular grid of n x n vertices in the z=0 plane, triangulated.
inline TriMesh plane_mesh(int n, double spacing) {
    TriMesh m;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m.vertices.push_back(Vec3(i * spacing, j * spacing, 0.0));
    auto id = [n](int i, int j) { return j * n + i; };
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

inline PointCloud plane_cloud(int n, double spacing) {
    PointCloud c;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) c.points.push_back(Vec3(i * spacing, j * spacing, 0.0));
    return c;
}

// Closed cylinder along +z from z=0 to z=h, radius r, explicit triangulation.
inline TriMesh cylinder_mesh(double r, double h, int segments = 64, int rings = 20) {
    TriMesh m;
    for (int j = 0; j <= rings; ++j) {
        const double z = h * j / rings;
        for (int i = 0; i < segments; ++i) {
            const double a = 2.0 * M_PI * i / segments;
            m.vertices.push_back(Vec3(r * std::cos(a), r * std::sin(a), z));
        }
    }
    auto id = [segments](int i, int j) { return j * segments + (i % segments); };
    for (int j = 0; j < rings; ++j)
        for (int i = 0; i < segments; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    const int bottom = static_cast<int>(m.vertices.size());
    m.vertices.push_back(Vec3(0, 0, 0));
    const int top = static_cast<int>(m.vertices.size());
    m.vertices.push_back(Vec3(0, 0, h));
    for (int i = 0; i < segments; ++i) {
        m.triangles.push_back({bottom, id(i + 1, 0), id(i, 0)});
        m.triangles.push_back({top, id(i, rings), id(i + 1, rings)});
    }
    return m;
}

inline bool same_vec(const Vec3& a, const Vec3& b) {
    return a.x() == b.x() && a.y() == b.y() && a.z() == b.z();
}

inline bool same_tri(const Vec3i& a, const Vec3i& b) {
    return a[0] == b[0] && a[1] == b[1] && a[2] == b[2];
}

inline double max_vertex_distance(const TriMesh& a, const TriMesh& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        worst = std::max(worst, (a.vertices[i] - b.vertices[i]).norm());
    return worst;
}

}  // namespace tt
