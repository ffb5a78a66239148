#pragma once

#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/triangle_index.hpp"

#include <algorithm>

namespace toothfuse {

struct MetricReport {
    double cd_l1_one_sided = 0.0;  // mm
    double hd95_one_sided = 0.0;   // mm
    double scale_ratio = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

// Distances from area-weighted samples of the reference surface to the
// reconstruction. One-sided on purpose: gaps present only in the
// reconstruction-to-reference direction are not penalized.
inline std::vector<double> one_sided_distances(const TriMesh& reference,
                                               const TriMesh& recon,
                                               std::size_t n = 100000,
                                               std::uint64_t seed = 0) {
    if (recon.triangles.empty()) throw EmptyMeshError("one_sided_distances: empty reconstruction");
    if (n == 0) throw Error("one_sided_distances: need at least one sample");
    PointCloud samples = sample_surface(reference, n, seed);
    TriangleBvh bvh(recon);
    std::vector<double> d(samples.points.size());
    parallel_for(samples.points.size(),
                 [&](std::size_t i) { d[i] = bvh.closest(samples.points[i]).distance; },
                 256);
    return d;
}

inline double chamfer_l1(const std::vector<double>& distances) {
    if (distances.empty()) throw Error("chamfer_l1: empty distance list");
    double s = 0.0;
    for (double d : distances) s += d;
    return s / static_cast<double>(distances.size());
}

// 95th percentile with linear interpolation between order statistics at
// zero-based rank 0.95*(N-1).
inline double hd95(const std::vector<double>& distances) {
    if (distances.empty()) throw Error("hd95: empty distance list");
    std::vector<double> sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    const double rank = 0.95 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Bounding-box diagonal of the reconstruction over that of the reference.
inline double scale_ratio(const TriMesh& recon, const TriMesh& reference) {
    if (recon.empty()) throw EmptyMeshError("scale_ratio: empty reconstruction");
    if (reference.empty()) throw EmptyMeshError("scale_ratio: empty reference");
    const double ref_diag = reference.bounds().diagonal();
    if (!(ref_diag > 0.0)) throw ZeroDiagonalError("scale_ratio: reference diagonal is zero");
    return recon.bounds().diagonal() / ref_diag;
}

// Copies the reference with per-vertex colors encoding distance to the
// reconstruction: white at zero error, saturating to pure red at d_max.
inline TriMesh error_colormap(const TriMesh& reference, const TriMesh& recon,
                              double d_max = 0.3) {
    if (!(d_max > 0.0)) throw Error("error_colormap: d_max must be positive");
    if (recon.triangles.empty()) throw EmptyMeshError("error_colormap: empty reconstruction");
    TriangleBvh bvh(recon);
    TriMesh out = reference;
    out.colors.resize(out.vertices.size());
    parallel_for(out.vertices.size(), [&](std::size_t i) {
        const double d = bvh.closest(out.vertices[i]).distance;
        const double t = std::min(d / d_max, 1.0);
        out.colors[i] = Vec3(1.0, 1.0 - t, 1.0 - t);
    }, 256);
    return out;
}

inline MetricReport compute_metrics(const TriMesh& reference, const TriMesh& recon,
                                    std::size_t n = 100000, std::uint64_t seed = 0) {
    std::vector<double> d = one_sided_distances(reference, recon, n, seed);
    MetricReport r;
    r.cd_l1_one_sided = chamfer_l1(d);
    r.hd95_one_sided = hd95(d);
    r.scale_ratio = scale_ratio(recon, reference);
    r.sample_count = d.size();
    r.seed = seed;
    return r;
}

}  // namespace toothfuse
