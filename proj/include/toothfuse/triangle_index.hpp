#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/mesh_ops.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace toothfuse {

// Exact closest point on a single triangle (Ericson). Falls back to edge
// distances for degenerate triangles.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double sum = va + vb + vc;
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        // degenerate triangle: closest point over the three edges
        auto seg = [&p](const Vec3& s, const Vec3& e) {
            Vec3 d = e - s;
            double len2 = d.squaredNorm();
            double t = len2 > 0.0 ? std::clamp((p - s).dot(d) / len2, 0.0, 1.0) : 0.0;
            return Vec3(s + t * d);
        };
        Vec3 best = seg(a, b);
        for (const Vec3& cand : {seg(b, c), seg(c, a)})
            if ((cand - p).squaredNorm() < (best - p).squaredNorm()) best = cand;
        return best;
    }
    const double denom = 1.0 / sum;
    return a + (vb * denom) * ab + (vc * denom) * ac;
}

struct ClosestHit {
    Vec3 point = Vec3::Zero();
    double distance = std::numeric_limits<double>::infinity();
    int triangle = -1;
};

// Static BVH over the triangles of a mesh. Supports exact closest-point
// queries (ties broken by lowest triangle id), ray-crossing counts, and
// angle-weighted pseudonormal signed distances.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriMesh& mesh)
        : vertices_(mesh.vertices), triangles_(mesh.triangles) {
        if (triangles_.empty())
            throw EmptyMeshError("TriangleBvh: mesh has no triangles");
        order_.resize(triangles_.size());
        std::iota(order_.begin(), order_.end(), 0);
        centroids_.reserve(triangles_.size());
        for (const Vec3i& t : triangles_)
            centroids_.push_back((vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0);
        nodes_.reserve(triangles_.size() * 2);
        root_ = build(0, static_cast<int>(triangles_.size()));
        build_pseudonormals();
    }

    std::size_t triangle_count() const { return triangles_.size(); }

    ClosestHit closest(const Vec3& q) const {
        ClosestHit best;
        search_closest(root_, q, best);
        best.distance = std::sqrt(best.distance);
        return best;
    }

    // Number of ray-triangle crossings for t > 0.
    int ray_crossings(const Vec3& origin, const Vec3& dir) const {
        int count = 0;
        count_crossings(root_, origin, dir, count);
        return count;
    }

    // Inside test by crossing parity, majority over three fixed directions.
    bool parity_inside(const Vec3& q) const {
        int votes = 0;
        for (const Vec3& d : kParityDirections())
            if (ray_crossings(q, d) % 2 == 1) ++votes;
        return votes >= 2;
    }

    // Signed distance with the angle-weighted pseudonormal sign; negative
    // inside. Works on open and non-manifold meshes.
    double signed_distance_pseudonormal(const Vec3& q) const {
        ClosestHit hit = closest(q);
        Vec3 n = pseudonormal_at(hit);
        double d = (q - hit.point).dot(n);
        return d < 0.0 ? -hit.distance : hit.distance;
    }

    // Pseudonormal of the feature (face, edge, or vertex) the closest point
    // lies on.
    Vec3 pseudonormal_at(const ClosestHit& hit) const {
        const Vec3i& t = triangles_[hit.triangle];
        const Vec3 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
        // barycentric coordinates of the closest point
        Vec3 v0 = b - a, v1 = c - a, v2 = hit.point - a;
        double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
        double d20 = v2.dot(v0), d21 = v2.dot(v1);
        double denom = d00 * d11 - d01 * d01;
        double bv = 0.0, bw = 0.0;
        if (denom > 0.0) {
            bv = (d11 * d20 - d01 * d21) / denom;
            bw = (d00 * d21 - d01 * d20) / denom;
        }
        double bu = 1.0 - bv - bw;
        const double tol = 1e-9;
        int zero_count = (bu <= tol) + (bv <= tol) + (bw <= tol);
        if (zero_count >= 2) {
            int vid = bu > tol ? t[0] : (bv > tol ? t[1] : t[2]);
            return vertex_normals_[vid];
        }
        if (zero_count == 1) {
            int e0, e1;
            if (bu <= tol) {
                e0 = t[1]; e1 = t[2];
            } else if (bv <= tol) {
                e0 = t[0]; e1 = t[2];
            } else {
                e0 = t[0]; e1 = t[1];
            }
            auto it = edge_normals_.find(detail::edge_key(e0, e1));
            if (it != edge_normals_.end()) return it->second;
        }
        return face_normals_[hit.triangle];
    }

private:
    static constexpr int kLeafSize = 4;

    static const std::array<Vec3, 3>& kParityDirections() {
        static const std::array<Vec3, 3> dirs = {
            Vec3(0.267261241912424, 0.534522483824849, 0.801783725737273),
            Vec3(-0.666666666666667, 0.333333333333333, 0.666666666666667),
            Vec3(0.484182432550849, -0.746437891782023, 0.456644846518464)};
        return dirs;
    }

    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end) {
        Node node;
        for (int i = begin; i < end; ++i) {
            const Vec3i& t = triangles_[order_[i]];
            node.box.expand(vertices_[t[0]]);
            node.box.expand(vertices_[t[1]]);
            node.box.expand(vertices_[t[2]]);
        }
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = begin;
            nodes_[id].end = end;
            return id;
        }
        Vec3 ext = node.box.extent();
        int axis = 0;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid,
                         order_.begin() + end, [&](int x, int y) {
                             double cx = centroids_[x][axis], cy = centroids_[y][axis];
                             return cx < cy || (cx == cy && x < y);
                         });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search_closest(int id, const Vec3& q, ClosestHit& best) const {
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int ti = order_[i];
                const Vec3i& t = triangles_[ti];
                Vec3 cp = closest_point_on_triangle(q, vertices_[t[0]], vertices_[t[1]],
                                                    vertices_[t[2]]);
                double d2 = (cp - q).squaredNorm();
                if (d2 < best.distance ||
                    (d2 == best.distance && ti < best.triangle)) {
                    best.distance = d2;  // squared until the end of the search
                    best.point = cp;
                    best.triangle = ti;
                }
            }
            return;
        }
        double dl = nodes_[n.left].box.squared_distance(q);
        double dr = nodes_[n.right].box.squared_distance(q);
        int first = n.left, second = n.right;
        double dfirst = dl, dsecond = dr;
        if (dr < dl) {
            std::swap(first, second);
            std::swap(dfirst, dsecond);
        }
        if (dfirst <= best.distance) search_closest(first, q, best);
        if (dsecond <= best.distance) search_closest(second, q, best);
    }

    static bool ray_hits_box(const Aabb& box, const Vec3& o, const Vec3& inv_dir) {
        double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            double t1 = (box.min[k] - o[k]) * inv_dir[k];
            double t2 = (box.max[k] - o[k]) * inv_dir[k];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
            if (tmin > tmax) return false;
        }
        return true;
    }

    void count_crossings(int id, const Vec3& o, const Vec3& dir, int& count) const {
        Vec3 inv_dir(1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]);
        count_crossings_impl(id, o, dir, inv_dir, count);
    }

    void count_crossings_impl(int id, const Vec3& o, const Vec3& dir,
                              const Vec3& inv_dir, int& count) const {
        const Node& n = nodes_[id];
        if (!ray_hits_box(n.box, o, inv_dir)) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const Vec3i& t = triangles_[order_[i]];
                if (ray_intersects(o, dir, vertices_[t[0]], vertices_[t[1]],
                                   vertices_[t[2]]))
                    ++count;
            }
            return;
        }
        count_crossings_impl(n.left, o, dir, inv_dir, count);
        count_crossings_impl(n.right, o, dir, inv_dir, count);
    }

    // Moller-Trumbore, t > 0 hits only.
    static bool ray_intersects(const Vec3& o, const Vec3& d, const Vec3& a,
                               const Vec3& b, const Vec3& c) {
        const Vec3 e1 = b - a, e2 = c - a;
        const Vec3 pv = d.cross(e2);
        const double det = e1.dot(pv);
        if (std::abs(det) < 1e-14) return false;
        const double inv = 1.0 / det;
        const Vec3 tv = o - a;
        const double u = tv.dot(pv) * inv;
        if (u < 0.0 || u > 1.0) return false;
        const Vec3 qv = tv.cross(e1);
        const double v = d.dot(qv) * inv;
        if (v < 0.0 || u + v > 1.0) return false;
        const double t = e2.dot(qv) * inv;
        return t > 1e-12;
    }

    void build_pseudonormals() {
        face_normals_.resize(triangles_.size());
        vertex_normals_.assign(vertices_.size(), Vec3::Zero());
        for (std::size_t i = 0; i < triangles_.size(); ++i) {
            const Vec3i& t = triangles_[i];
            const Vec3 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
            Vec3 fn = triangle_normal(a, b, c);
            face_normals_[i] = fn;
            if (fn.isZero()) continue;
            auto corner_angle = [](const Vec3& p, const Vec3& q, const Vec3& r) {
                Vec3 u = q - p, v = r - p;
                double nu = u.norm(), nv = v.norm();
                if (nu < 1e-300 || nv < 1e-300) return 0.0;
                return std::acos(std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0));
            };
            vertex_normals_[t[0]] += corner_angle(a, b, c) * fn;
            vertex_normals_[t[1]] += corner_angle(b, c, a) * fn;
            vertex_normals_[t[2]] += corner_angle(c, a, b) * fn;
            for (int k = 0; k < 3; ++k) {
                auto [it, unused] = edge_normals_.try_emplace(
                    detail::edge_key(t[k], t[(k + 1) % 3]), Vec3::Zero());
                it->second += fn;
            }
        }
        for (Vec3& n : vertex_normals_) {
            double len = n.norm();
            if (len > 1e-300) n /= len;
        }
        for (auto& [key, n] : edge_normals_) {
            double len = n.norm();
            if (len > 1e-300) n /= len;
        }
    }

    std::vector<Vec3> vertices_;
    std::vector<Vec3i> triangles_;
    std::vector<Vec3> centroids_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;

    std::vector<Vec3> face_normals_;
    std::vector<Vec3> vertex_normals_;
    std::unordered_map<std::uint64_t, Vec3> edge_normals_;
};

// closest_point over all triangles; exact, ties by lowest triangle id.
inline ClosestHit closest_point(const TriangleBvh& index, const Vec3& x) {
    return index.closest(x);
}

inline ClosestHit closest_point(const TriMesh& m, const Vec3& x) {
    return TriangleBvh(m).closest(x);
}

}  // namespace toothfuse
