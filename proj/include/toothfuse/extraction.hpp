#pragma once

#include "toothfuse/marching_cubes.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/sdf_network.hpp"
#include "toothfuse/sdf_sample.hpp"

namespace toothfuse {

// Evaluates the network field over a dense grid. Chunk boundaries are fixed
// by the resolution alone, so the result is bitwise independent of thread
// count.
inline ScalarGrid evaluate_grid(const SdfNetwork& net, const Eigen::VectorXd& z,
                                Vec3i res = Vec3i(192, 192, 192),
                                Aabb bounds = Aabb(Vec3::Constant(-1.05),
                                                   Vec3::Constant(1.05))) {
    ScalarGrid g;
    g.res = res;
    g.bounds = bounds;
    if (res.minCoeff() < 2) throw Error("evaluate_grid: resolution must be >= 2 per axis");
    const std::size_t n =
        static_cast<std::size_t>(res[0]) * res[1] * res[2];
    g.values.resize(n);

    const std::size_t plane = static_cast<std::size_t>(res[0]) * res[1];
    parallel_chunks(n, 8192, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<Vec3> pts;
        pts.reserve(end - begin);
        for (std::size_t s = begin; s < end; ++s) {
            const int k = static_cast<int>(s / plane);
            const std::size_t r = s % plane;
            const int j = static_cast<int>(r / res[0]);
            const int i = static_cast<int>(r % res[0]);
            pts.push_back(g.position(i, j, k));
        }
        Eigen::VectorXd y = detail::forward_batch_gemm(net, z, pts.data(), pts.size());
        for (std::size_t t = 0; t < pts.size(); ++t) g.values[begin + t] = y(static_cast<Eigen::Index>(t));
    });
    return g;
}

// Extracts the zero level set of the fitted field and maps it back to mm.
inline TriMesh reconstruct(const SdfNetwork& net, const Eigen::VectorXd& z,
                           const NormalizationInfo& info, int res = 192) {
    ScalarGrid g = evaluate_grid(net, z, Vec3i::Constant(res));
    TriMesh mesh = marching_cubes(g, 0.0);
    if (mesh.triangles.empty())
        throw EmptySurfaceError("reconstruct: field has no zero level set");
    return denormalize_shape(mesh, info);
}

}  // namespace toothfuse
