#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/rng.hpp"
#include "toothfuse/triangle_index.hpp"

#include <algorithm>
#include <cstdio>

namespace toothfuse {

// Millimetre <-> normalized unit-sphere coordinates: x_norm = (x - center)/scale.
struct NormalizationInfo {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;  // mm

    Vec3 to_normalized(const Vec3& p) const { return (p - center) / scale; }
    Vec3 to_world(const Vec3& p) const { return p * scale + center; }
};

// Centers the mesh at its bbox center and scales it so the farthest vertex
// sits at radius 1/1.03.
inline std::pair<TriMesh, NormalizationInfo> normalize_shape(const TriMesh& m) {
    if (m.empty()) throw EmptyMeshError("normalize_shape: empty mesh");
    NormalizationInfo info;
    info.center = m.bounds().center();
    double max_norm = 0.0;
    for (const Vec3& v : m.vertices)
        max_norm = std::max(max_norm, (v - info.center).norm());
    if (!(max_norm > 0.0))
        throw Error("normalize_shape: mesh has zero spatial extent");
    info.scale = max_norm * 1.03;
    TriMesh out = m;
    for (Vec3& v : out.vertices) v = info.to_normalized(v);
    return {std::move(out), info};
}

inline TriMesh denormalize_shape(const TriMesh& m, const NormalizationInfo& info) {
    TriMesh out = m;
    for (Vec3& v : out.vertices) v = info.to_world(v);
    return out;
}

enum class SignMode { ray_parity, pseudonormal };

// Signed distance to a mesh surface, negative inside. ray_parity signs by
// crossing parity (majority over 3 fixed rays) and requires a watertight
// mesh; pseudonormal works on open and non-manifold meshes.
class MeshSdf {
public:
    MeshSdf(const TriMesh& m, SignMode mode) : index_(m), mode_(mode) {
        if (mode == SignMode::ray_parity && !is_watertight(m))
            throw NotWatertightError("MeshSdf: ray_parity requires a watertight mesh");
    }

    double operator()(const Vec3& x) const {
        if (mode_ == SignMode::pseudonormal)
            return index_.signed_distance_pseudonormal(x);
        ClosestHit hit = index_.closest(x);
        return index_.parity_inside(x) ? -hit.distance : hit.distance;
    }

    const TriangleBvh& index() const { return index_; }

private:
    TriangleBvh index_;
    SignMode mode_;
};

inline double signed_distance(const TriMesh& m, const Vec3& x, SignMode mode) {
    return MeshSdf(m, mode)(x);
}

struct SdfSample {
    Vec3 position = Vec3::Zero();  // normalized coordinates, norm <= 1.1
    double s = 0.0;                // normalized signed distance, negative inside
};

struct SdfSampleParams {
    std::size_t n_surface = 8000;
    std::size_t n_free = 2000;
    double sigma1 = 0.005;  // normalized units
    double sigma2 = 0.05;
    SignMode sign_mode = SignMode::ray_parity;
};

// DeepSDF-style supervision samples from a normalized mesh: surface samples
// perturbed by Gaussian noise (half sigma1, half sigma2) plus uniform
// samples in the unit ball, each labeled with its signed distance.
// Non-finite labels are dropped with a warning.
inline std::vector<SdfSample> sample_sdf(const TriMesh& m, const SdfSampleParams& p,
                                         std::uint64_t seed) {
    if (m.empty()) throw EmptyMeshError("sample_sdf: empty mesh");
    double max_norm = 0.0;
    for (const Vec3& v : m.vertices) max_norm = std::max(max_norm, v.norm());
    if (max_norm > 1.0)
        throw Error("sample_sdf: mesh not normalized (vertex norm > 1)");

    MeshSdf sdf(m, p.sign_mode);
    Rng rng(seed);

    std::vector<Vec3> positions;
    positions.reserve(p.n_surface + p.n_free);
    PointCloud surface = sample_surface(m, p.n_surface, rng.next_u64());
    const std::size_t n_half = p.n_surface / 2 + p.n_surface % 2;
    for (std::size_t i = 0; i < surface.points.size(); ++i) {
        const double sigma = i < n_half ? p.sigma1 : p.sigma2;
        Vec3 q;
        do {
            q = surface.points[i] + sigma * rng.gaussian_vec3();
        } while (q.norm() > 1.1);
        positions.push_back(q);
    }
    for (std::size_t i = 0; i < p.n_free; ++i) positions.push_back(rng.in_unit_ball());

    std::vector<double> labels(positions.size());
    parallel_for(positions.size(),
                 [&](std::size_t i) { labels[i] = sdf(positions[i]); }, 256);

    std::vector<SdfSample> out;
    out.reserve(positions.size());
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(labels[i]) || !positions[i].allFinite()) {
            ++dropped;
            continue;
        }
        out.push_back({positions[i], labels[i]});
    }
    if (dropped > 0)
        std::fprintf(stderr, "sample_sdf: dropped %zu non-finite samples\n", dropped);
    return out;
}

// Non-finite samples are dropped with a warning rather than failing the run.
inline std::vector<SdfSample> sanitize_samples(std::vector<SdfSample> samples,
                                               const char* who) {
    auto bad = [](const SdfSample& s) {
        return !std::isfinite(s.s) || !s.position.allFinite();
    };
    const std::size_t before = samples.size();
    samples.erase(std::remove_if(samples.begin(), samples.end(), bad), samples.end());
    if (samples.size() != before)
        std::fprintf(stderr, "%s: dropped %zu non-finite samples\n", who,
                     before - samples.size());
    return samples;
}

}  // namespace toothfuse
