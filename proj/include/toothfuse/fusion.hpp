#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/triangle_index.hpp"

namespace toothfuse {

struct FusionParams {
    double tau = 0.6;  // mm, root-classification distance threshold
};

// Root isolation: keep vertices of the aligned full mesh farther than tau
// from the crown surface, keep triangles whose three vertices all survive,
// then return the largest connected component.
inline TriMesh isolate_root(const TriMesh& r_aligned, const TriMesh& crown,
                            const FusionParams& p = {}) {
    if (r_aligned.empty() || crown.empty())
        throw EmptyMeshError("isolate_root: empty input mesh");
    if (!(p.tau > 0.0)) throw Error("isolate_root: tau must be positive");

    TriangleBvh crown_index(crown);
    const std::size_t n = r_aligned.vertices.size();
    std::vector<std::uint8_t> keep(n, 0);
    parallel_for(n, [&](std::size_t i) {
        keep[i] = crown_index.closest(r_aligned.vertices[i]).distance > p.tau;
    }, 256);

    if (std::find(keep.begin(), keep.end(), std::uint8_t(1)) == keep.end())
        throw EmptyRootError("isolate_root: no vertex farther than tau from the crown");

    std::vector<std::size_t> kept_tris;
    for (std::size_t t = 0; t < r_aligned.triangles.size(); ++t) {
        const Vec3i& tri = r_aligned.triangles[t];
        if (keep[tri[0]] && keep[tri[1]] && keep[tri[2]]) kept_tris.push_back(t);
    }
    if (kept_tris.empty())
        throw EmptyRootError("isolate_root: no triangle with all vertices beyond tau");

    TriMesh retained = detail::submesh(r_aligned, kept_tris);
    std::vector<TriMesh> components = connected_components(retained);
    return components.front();
}

// Naive union: concatenated vertex and triangle lists, no welding. Input
// positions are preserved bit-exactly.
inline TriMesh make_hybrid_proxy(const TriMesh& crown, const TriMesh& root) {
    if (crown.empty() || root.empty())
        throw EmptyMeshError("make_hybrid_proxy: empty input mesh");
    return concat_meshes(crown, root);
}

}  // namespace toothfuse
