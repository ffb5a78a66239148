#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

namespace toothfuse {

inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

// ---------------------------------------------------------------------------
// Rigid transforms on geometry

inline PointCloud apply_transform(const RigidTransform& t, const PointCloud& c) {
    PointCloud out;
    out.points.reserve(c.points.size());
    for (const Vec3& p : c.points) out.points.push_back(t.apply(p));
    out.normals.reserve(c.normals.size());
    for (const Vec3& n : c.normals) out.normals.push_back(t.apply_direction(n));
    return out;
}

inline TriMesh apply_transform(const RigidTransform& t, const TriMesh& m) {
    TriMesh out;
    out.vertices.reserve(m.vertices.size());
    for (const Vec3& p : m.vertices) out.vertices.push_back(t.apply(p));
    out.triangles = m.triangles;
    out.normals.reserve(m.normals.size());
    for (const Vec3& n : m.normals) out.normals.push_back(t.apply_direction(n));
    out.colors = m.colors;
    return out;
}

// ---------------------------------------------------------------------------
// Bounding box diagonal

inline double bbox_diagonal(const TriMesh& m) {
    if (m.vertices.empty()) throw EmptyMeshError("bbox_diagonal: mesh has no vertices");
    return m.bounds().diagonal();
}

// ---------------------------------------------------------------------------
// Area-weighted surface sampling

inline PointCloud sample_surface(const TriMesh& m, std::size_t n, std::uint64_t seed) {
    if (m.triangles.empty()) throw EmptyMeshError("sample_surface: mesh has no triangles");

    // Cumulative areas; degenerate triangles (area < 1e-12 mm^2) are skipped.
    std::vector<double> cumulative(m.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < m.triangles.size(); ++i) {
        const Vec3i& t = m.triangles[i];
        double a = triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        if (a < 1e-12) a = 0.0;
        total += a;
        cumulative[i] = total;
    }
    if (total <= 0.0) throw EmptyMeshError("sample_surface: total surface area is zero");

    Rng rng(seed);
    PointCloud out;
    out.points.reserve(n);
    out.normals.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t ti = std::min<std::size_t>(it - cumulative.begin(),
                                               m.triangles.size() - 1);
        const Vec3i& t = m.triangles[ti];
        const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
        // uniform barycentric
        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
        out.points.push_back(wa * a + wb * b + wc * c);
        out.normals.push_back(triangle_normal(a, b, c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Connectivity

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Extracts the sub-mesh made of the given triangles, compacting vertices.
inline TriMesh submesh(const TriMesh& m, const std::vector<std::size_t>& tri_ids) {
    TriMesh out;
    std::unordered_map<int, int> remap;
    remap.reserve(tri_ids.size() * 3);
    for (std::size_t ti : tri_ids) {
        Vec3i t = m.triangles[ti];
        for (int k = 0; k < 3; ++k) {
            auto [it, inserted] = remap.try_emplace(t[k], static_cast<int>(out.vertices.size()));
            if (inserted) {
                out.vertices.push_back(m.vertices[t[k]]);
                if (m.has_normals()) out.normals.push_back(m.normals[t[k]]);
                if (m.has_colors()) out.colors.push_back(m.colors[t[k]]);
            }
            t[k] = it->second;
        }
        out.triangles.push_back(t);
    }
    return out;
}

}  // namespace detail

// Triangle partition by shared-vertex connectivity, sorted by descending
// triangle count (ties by total area, then by first triangle id).
inline std::vector<TriMesh> connected_components(const TriMesh& m) {
    if (m.triangles.empty()) return {};
    detail::UnionFind uf(m.vertices.size());
    for (const Vec3i& t : m.triangles) {
        uf.unite(t[0], t[1]);
        uf.unite(t[0], t[2]);
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;  // root -> triangle ids
    for (std::size_t i = 0; i < m.triangles.size(); ++i)
        groups[uf.find(m.triangles[i][0])].push_back(i);

    struct Comp {
        std::vector<std::size_t> tris;
        double area;
    };
    std::vector<Comp> comps;
    comps.reserve(groups.size());
    for (auto& [root, tris] : groups) {
        double area = 0.0;
        for (std::size_t ti : tris) {
            const Vec3i& t = m.triangles[ti];
            area += triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        }
        comps.push_back({std::move(tris), area});
    }
    std::stable_sort(comps.begin(), comps.end(), [](const Comp& a, const Comp& b) {
        if (a.tris.size() != b.tris.size()) return a.tris.size() > b.tris.size();
        if (a.area != b.area) return a.area > b.area;
        return a.tris.front() < b.tris.front();
    });

    std::vector<TriMesh> out;
    out.reserve(comps.size());
    for (const Comp& c : comps) out.push_back(detail::submesh(m, c.tris));
    return out;
}

// ---------------------------------------------------------------------------
// Edge incidence

namespace detail {
inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}
}  // namespace detail

// Number of edges incident to exactly one triangle.
inline std::size_t boundary_edge_count(const TriMesh& m) {
    std::unordered_map<std::uint64_t, int> incidence;
    incidence.reserve(m.triangles.size() * 3);
    for (const Vec3i& t : m.triangles)
        for (int k = 0; k < 3; ++k)
            ++incidence[detail::edge_key(t[k], t[(k + 1) % 3])];
    std::size_t n = 0;
    for (auto& [key, c] : incidence)
        if (c == 1) ++n;
    return n;
}

// Every edge incident to exactly two triangles.
inline bool is_watertight(const TriMesh& m) {
    if (m.triangles.empty()) return false;
    std::unordered_map<std::uint64_t, int> incidence;
    incidence.reserve(m.triangles.size() * 3);
    for (const Vec3i& t : m.triangles)
        for (int k = 0; k < 3; ++k)
            ++incidence[detail::edge_key(t[k], t[(k + 1) % 3])];
    for (auto& [key, c] : incidence)
        if (c != 2) return false;
    return true;
}

// Signed volume of a closed surface; positive when oriented outward around
// a bounded interior.
inline double signed_volume(const TriMesh& m) {
    double v = 0.0;
    for (const Vec3i& t : m.triangles) {
        const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
        v += a.dot(b.cross(c));
    }
    return v / 6.0;
}

// Plain concatenation with reindexing; no welding.
inline TriMesh concat_meshes(const TriMesh& a, const TriMesh& b) {
    TriMesh out = a;
    const int offset = static_cast<int>(a.vertices.size());
    out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
    out.triangles.reserve(a.triangles.size() + b.triangles.size());
    for (const Vec3i& t : b.triangles)
        out.triangles.emplace_back(t[0] + offset, t[1] + offset, t[2] + offset);
    // attributes survive only when both parts carry them
    if (a.has_normals() && b.has_normals())
        out.normals.insert(out.normals.end(), b.normals.begin(), b.normals.end());
    else
        out.normals.clear();
    if (a.has_colors() && b.has_colors())
        out.colors.insert(out.colors.end(), b.colors.begin(), b.colors.end());
    else
        out.colors.clear();
    return out;
}

}  // namespace toothfuse
