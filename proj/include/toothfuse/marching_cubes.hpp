#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/mc_tables.hpp"

#include <unordered_map>

namespace toothfuse {

// Dense scalar field on a regular grid, x-fastest storage.
struct ScalarGrid {
    Vec3i res = Vec3i(192, 192, 192);
    Aabb bounds = Aabb(Vec3::Constant(-1.05), Vec3::Constant(1.05));
    std::vector<double> values;

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(res[0]) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(res[1]) * static_cast<std::size_t>(k));
    }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }

    Vec3 position(int i, int j, int k) const {
        Vec3 t(static_cast<double>(i) / (res[0] - 1),
               static_cast<double>(j) / (res[1] - 1),
               static_cast<double>(k) / (res[2] - 1));
        return bounds.min + t.cwiseProduct(bounds.max - bounds.min);
    }

    void validate() const {
        if (res.minCoeff() < 2) throw Error("ScalarGrid: resolution must be >= 2 per axis");
        if ((bounds.min.array() >= bounds.max.array()).any())
            throw Error("ScalarGrid: invalid bounds");
        if (values.size() != static_cast<std::size_t>(res[0]) * res[1] * res[2])
            throw Error("ScalarGrid: value count != resolution product");
    }
};

// Samples an analytic field f(p) -> double over the grid.
template <typename F>
ScalarGrid evaluate_field(F&& f, Vec3i res = Vec3i(192, 192, 192),
                          Aabb bounds = Aabb(Vec3::Constant(-1.05),
                                             Vec3::Constant(1.05))) {
    ScalarGrid g;
    g.res = res;
    g.bounds = bounds;
    g.values.resize(static_cast<std::size_t>(res[0]) * res[1] * res[2]);
    for (int k = 0; k < res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i)
                g.values[g.index(i, j, k)] = f(g.position(i, j, k));
    return g;
}

// Standard 256-case marching cubes with linear edge interpolation. Vertices
// on shared cell edges are welded through canonical grid-edge keys, so the
// result is index-identical across runs. Orientation is outward: triangle
// normals point toward positive field values. Field values exactly equal to
// the isolevel are nudged by +1e-12 to avoid degenerate output triangles.
inline TriMesh marching_cubes(const ScalarGrid& g, double iso = 0.0) {
    g.validate();
    TriMesh mesh;
    const int nx = g.res[0], ny = g.res[1], nz = g.res[2];

    auto value = [&](int i, int j, int k) {
        double v = g.at(i, j, k);
        return v == iso ? iso + 1e-12 : v;
    };

    // canonical key of the grid edge starting at node (i,j,k) along axis
    auto edge_key = [&](int i, int j, int k, int axis) {
        return (static_cast<std::uint64_t>(g.index(i, j, k))) * 3 +
               static_cast<std::uint64_t>(axis);
    };
    std::unordered_map<std::uint64_t, int> edge_vertex;

    // local corner offsets and the (node, axis) form of the 12 cell edges
    static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

    double corner_val[8];
    int edge_vid[12];
    for (int k = 0; k + 1 < nz; ++k)
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    corner_val[c] =
                        value(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
                    if (corner_val[c] < iso) cube |= 1 << c;
                }
                const std::uint16_t edges = detail::kMcEdgeTable[cube];
                if (edges == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    const int c0 = detail::kMcEdgeCorners[e][0];
                    const int c1 = detail::kMcEdgeCorners[e][1];
                    int a0[3] = {i + kCorner[c0][0], j + kCorner[c0][1],
                                 k + kCorner[c0][2]};
                    int a1[3] = {i + kCorner[c1][0], j + kCorner[c1][1],
                                 k + kCorner[c1][2]};
                    // orient the edge from the lexicographically smaller node
                    int axis = a0[0] != a1[0] ? 0 : (a0[1] != a1[1] ? 1 : 2);
                    const bool flip = a0[axis] > a1[axis];
                    const int* lo = flip ? a1 : a0;
                    std::uint64_t key = edge_key(lo[0], lo[1], lo[2], axis);
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        double v0 = corner_val[c0], v1 = corner_val[c1];
                        double t = (iso - v0) / (v1 - v0);
                        Vec3 p0 = g.position(a0[0], a0[1], a0[2]);
                        Vec3 p1 = g.position(a1[0], a1[1], a1[2]);
                        int vid = static_cast<int>(mesh.vertices.size());
                        mesh.vertices.push_back(p0 + t * (p1 - p0));
                        it = edge_vertex.emplace(key, vid).first;
                    }
                    edge_vid[e] = it->second;
                }

                // table rows wind toward the negative side; reverse for
                // outward (positive-field) orientation
                const auto& row = detail::kMcTriTable[cube];
                for (int t = 0; row[t] != -1; t += 3)
                    mesh.triangles.emplace_back(edge_vid[row[t]], edge_vid[row[t + 2]],
                                                edge_vid[row[t + 1]]);
            }
    return mesh;
}

}  // namespace toothfuse
