#pragma once

#include "toothfuse/marching_cubes.hpp"
#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/rng.hpp"

#include <map>

namespace toothfuse {

// Procedural tooth family. The crown is a superellipsoid with seeded cusp
// bumps; one or two tapered cone roots hang below the gingival plane (z=0)
// and are blended in with a smooth union. Per-seed jitter of the base
// dimensions makes seeds a shape family rather than one shape.
struct SyntheticToothSpec {
    Vec3 crown_semi_axes = Vec3(5.0, 4.2, 3.4);  // mm
    double crown_e1 = 0.9;                       // vertical exponent
    double crown_e2 = 0.8;                       // equatorial exponent
    int n_cusps = 4;
    double cusp_amp = 0.7;    // mm
    double cusp_sigma = 1.5;  // mm

    int root_count = 2;  // 1 or 2
    double root_length = 11.0;
    double root_base_radius = 2.1;
    double root_taper = 0.3;  // tip radius / base radius
    double blend_k = 0.8;     // smooth-union softness, mm

    int grid_res = 144;       // ground-truth extraction resolution
    double gingival_z = 0.8;  // crown cut plane, mm

    double decimation_ratio = 0.35;  // kept triangle fraction target, 1 = off
    double noise_sigma = 0.1;        // vertex noise, mm

    double max_rotation_deg = 25.0;
    double max_translation_mm = 8.0;

    double jitter = 0.12;  // relative size jitter across seeds
    std::uint64_t seed = 0;

    void validate() const {
        if (crown_semi_axes.minCoeff() <= 0.0 || crown_e1 <= 0.0 || crown_e2 <= 0.0 ||
            root_length <= 0.0 || root_base_radius <= 0.0 || root_taper <= 0.0 ||
            blend_k <= 0.0 || cusp_sigma <= 0.0)
            throw Error("SyntheticToothSpec: dimensions must be positive");
        if (root_count < 1 || root_count > 2)
            throw Error("SyntheticToothSpec: root_count must be 1 or 2");
        if (noise_sigma < 0.0 || decimation_ratio <= 0.0 || jitter < 0.0 ||
            max_rotation_deg < 0.0 || max_translation_mm < 0.0)
            throw Error("SyntheticToothSpec: invalid degradation parameters");
        if (grid_res < 16) throw Error("SyntheticToothSpec: grid_res too small");
    }
};

struct SyntheticTooth {
    TriMesh ground_truth;   // watertight, gingival plane at z=0
    TriMesh crown;          // triangles fully above the gingival cut plane
    TriMesh degraded_full;  // decimated + noised ground truth, moved by true_T^-1
    RigidTransform true_T;  // the transform the pipeline must recover
};

namespace detail {

struct ToothBump {
    Vec3 center;
    double amp = 0.0;
    double inv_2s2 = 0.0;
};

// Sphere-swept cone between sphere (a, ra) and sphere (b, rb); exact SDF.
struct ToothRoot {
    Vec3 a;
    double ra = 0.0;
    Vec3 b;
    double rb = 0.0;

    double sdf(const Vec3& p) const {
        const Vec3 ba = b - a;
        const double l2 = ba.squaredNorm();
        const double rr = ra - rb;
        const double a2 = l2 - rr * rr;
        const double il2 = 1.0 / l2;
        const Vec3 pa = p - a;
        const double y = pa.dot(ba);
        const double z = y - l2;
        const double x2 = (pa * l2 - ba * y).squaredNorm();
        const double y2 = y * y * l2;
        const double z2 = z * z * l2;
        const double k = (rr >= 0.0 ? 1.0 : -1.0) * rr * rr * x2;
        if ((z >= 0.0 ? 1.0 : -1.0) * a2 * z2 > k)
            return std::sqrt(x2 + z2) * il2 - rb;
        if ((y >= 0.0 ? 1.0 : -1.0) * a2 * y2 < k)
            return std::sqrt(x2 + y2) * il2 - ra;
        return (std::sqrt(x2 * a2 * il2) + y * rr) * il2 - ra;
    }
};

struct ToothField {
    Vec3 axes;
    double e1 = 1.0, e2 = 1.0;
    double crown_z = 0.0;    // crown center height
    double dist_scale = 1.0; // converts the superellipsoid level to ~mm
    double blend_k = 0.5;
    std::vector<ToothRoot> roots;
    std::vector<ToothBump> bumps;

    double crown_sdf(const Vec3& p) const {
        const double xa = std::abs(p.x()) / axes.x();
        const double yb = std::abs(p.y()) / axes.y();
        const double zc = std::abs(p.z() - crown_z) / axes.z();
        const double eq = std::pow(std::pow(xa, 2.0 / e2) + std::pow(yb, 2.0 / e2),
                                   e2 / e1);
        const double r = std::pow(eq + std::pow(zc, 2.0 / e1), e1 / 2.0);
        return (r - 1.0) * dist_scale;
    }

    double operator()(const Vec3& p) const {
        // smooth union: shifted log-sum-exp minimum of the parts
        double fmin = crown_sdf(p);
        double parts[3] = {fmin, 0.0, 0.0};
        int n = 1;
        for (const ToothRoot& r : roots) {
            parts[n] = r.sdf(p);
            fmin = std::min(fmin, parts[n]);
            ++n;
        }
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += std::exp(-(parts[i] - fmin) / blend_k);
        double f = fmin - blend_k * std::log(acc);
        for (const ToothBump& bmp : bumps)
            f -= bmp.amp * std::exp(-(p - bmp.center).squaredNorm() * bmp.inv_2s2);
        return f;
    }
};

inline ToothField make_tooth_field(const SyntheticToothSpec& spec, Rng& rng) {
    ToothField field;
    auto jittered = [&](double v) { return v * (1.0 + rng.uniform(-spec.jitter, spec.jitter)); };
    field.axes = Vec3(jittered(spec.crown_semi_axes.x()), jittered(spec.crown_semi_axes.y()),
                      jittered(spec.crown_semi_axes.z()));
    field.e1 = spec.crown_e1 + rng.uniform(-0.1, 0.1);
    field.e2 = spec.crown_e2 + rng.uniform(-0.1, 0.1);
    field.crown_z = field.axes.z() * 0.72;  // crown body sits mostly above z=0
    field.dist_scale = field.axes.minCoeff();
    field.blend_k = spec.blend_k;

    const double root_len = jittered(spec.root_length);
    const double root_r = jittered(spec.root_base_radius);
    const double tip_r = std::max(0.3, root_r * spec.root_taper);
    if (spec.root_count == 1) {
        const Vec3 tip_off(rng.uniform(-1.5, 1.5), rng.uniform(-1.2, 1.2), 0.0);
        field.roots.push_back({Vec3(0.0, 0.0, 1.0), root_r,
                               Vec3(tip_off.x(), tip_off.y(), -root_len), tip_r});
    } else {
        const double sep = field.axes.x() * rng.uniform(0.38, 0.5);
        const double flare = rng.uniform(0.5, 1.8);
        field.roots.push_back({Vec3(sep, 0.0, 1.0), root_r,
                               Vec3(sep + flare, rng.uniform(-1.0, 1.0), -root_len), tip_r});
        field.roots.push_back(
            {Vec3(-sep, rng.uniform(-0.8, 0.8), 1.0), root_r * rng.uniform(0.8, 1.0),
             Vec3(-sep - flare, rng.uniform(-1.0, 1.0), -root_len * rng.uniform(0.8, 0.95)),
             tip_r});
    }

    // occlusal cusps plus two lateral bumps; placement is what breaks the
    // crown's mirror symmetries
    for (int i = 0; i < spec.n_cusps; ++i) {
        ToothBump b;
        b.center = Vec3(rng.uniform(-0.55, 0.55) * field.axes.x(),
                        rng.uniform(-0.55, 0.55) * field.axes.y(),
                        field.crown_z + field.axes.z() * rng.uniform(0.75, 0.95));
        b.amp = spec.cusp_amp * rng.uniform(0.6, 1.3);
        const double s = spec.cusp_sigma * rng.uniform(0.8, 1.2);
        b.inv_2s2 = 1.0 / (2.0 * s * s);
        field.bumps.push_back(b);
    }
    for (int i = 0; i < 2; ++i) {
        const double az = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        ToothBump b;
        b.center = Vec3(std::cos(az) * field.axes.x(), std::sin(az) * field.axes.y(),
                        field.crown_z + field.axes.z() * rng.uniform(-0.3, 0.3));
        b.amp = spec.cusp_amp * rng.uniform(0.4, 0.9);
        const double s = spec.cusp_sigma * rng.uniform(1.0, 1.5);
        b.inv_2s2 = 1.0 / (2.0 * s * s);
        field.bumps.push_back(b);
    }
    return field;
}

// Vertex-clustering decimation: vertices merged per grid cell, triangles
// remapped, collapsed triangles dropped. ratio >= 1 is the identity.
inline TriMesh decimate_cluster(const TriMesh& m, double ratio) {
    if (ratio >= 1.0 || m.triangles.empty()) return m;
    std::vector<double> edges;
    edges.reserve(m.triangles.size() * 3);
    for (const Vec3i& t : m.triangles)
        for (int k = 0; k < 3; ++k)
            edges.push_back((m.vertices[t[k]] - m.vertices[t[(k + 1) % 3]]).norm());
    std::nth_element(edges.begin(), edges.begin() + edges.size() / 2, edges.end());
    const double voxel = edges[edges.size() / 2] / std::sqrt(ratio);

    const Vec3 origin = m.bounds().min;
    std::map<std::array<std::int64_t, 3>, int> cell_ids;
    std::vector<int> vmap(m.vertices.size());
    std::vector<Vec3> sums;
    std::vector<int> counts;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const Vec3 g = (m.vertices[i] - origin) / voxel;
        std::array<std::int64_t, 3> key = {static_cast<std::int64_t>(std::floor(g.x())),
                                           static_cast<std::int64_t>(std::floor(g.y())),
                                           static_cast<std::int64_t>(std::floor(g.z()))};
        auto [it, inserted] = cell_ids.try_emplace(key, static_cast<int>(sums.size()));
        if (inserted) {
            sums.push_back(Vec3::Zero());
            counts.push_back(0);
        }
        vmap[i] = it->second;
        sums[it->second] += m.vertices[i];
        ++counts[it->second];
    }
    TriMesh out;
    out.vertices.resize(sums.size());
    for (std::size_t c = 0; c < sums.size(); ++c) out.vertices[c] = sums[c] / counts[c];
    for (const Vec3i& t : m.triangles) {
        const Vec3i r(vmap[t[0]], vmap[t[1]], vmap[t[2]]);
        if (r[0] != r[1] && r[1] != r[2] && r[2] != r[0]) out.triangles.push_back(r);
    }
    return out;
}

}  // namespace detail

// Generates one synthetic case: watertight ground truth, the crown cut
// (clean, in the ground-truth frame), and the degraded full mesh displaced
// by true_T^-1 so registration must recover true_T.
inline SyntheticTooth synth_tooth(const SyntheticToothSpec& spec) {
    spec.validate();
    Rng rng(spec.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    const detail::ToothField field = detail::make_tooth_field(spec, rng);

    Aabb box;
    box.expand(Vec3(field.axes.x(), field.axes.y(), field.crown_z + field.axes.z()));
    box.expand(Vec3(-field.axes.x(), -field.axes.y(), field.crown_z - field.axes.z()));
    for (const detail::ToothRoot& r : field.roots) {
        box.expand(r.a + Vec3::Constant(r.ra));
        box.expand(r.a - Vec3::Constant(r.ra));
        box.expand(r.b + Vec3::Constant(r.rb));
        box.expand(r.b - Vec3::Constant(r.rb));
    }
    const double margin = 2.0 + spec.cusp_amp;
    Aabb bounds(box.min - Vec3::Constant(margin), box.max + Vec3::Constant(margin));

    ScalarGrid g;
    g.res = Vec3i::Constant(spec.grid_res);
    g.bounds = bounds;
    g.values.resize(static_cast<std::size_t>(spec.grid_res) * spec.grid_res * spec.grid_res);
    const std::size_t plane = static_cast<std::size_t>(spec.grid_res) * spec.grid_res;
    parallel_for(g.values.size(), [&](std::size_t s) {
        const int k = static_cast<int>(s / plane);
        const std::size_t r = s % plane;
        g.values[s] = field(g.position(static_cast<int>(r % spec.grid_res),
                                       static_cast<int>(r / spec.grid_res), k));
    }, 4096);

    SyntheticTooth out;
    out.ground_truth = marching_cubes(g, 0.0);
    if (out.ground_truth.triangles.empty())
        throw Error("synth_tooth: empty ground-truth surface");

    std::vector<std::size_t> crown_tris;
    for (std::size_t t = 0; t < out.ground_truth.triangles.size(); ++t) {
        const Vec3i& tri = out.ground_truth.triangles[t];
        if (out.ground_truth.vertices[tri[0]].z() > spec.gingival_z &&
            out.ground_truth.vertices[tri[1]].z() > spec.gingival_z &&
            out.ground_truth.vertices[tri[2]].z() > spec.gingival_z)
            crown_tris.push_back(t);
    }
    if (crown_tris.empty()) throw Error("synth_tooth: gingival plane misses the crown");
    out.crown = detail::submesh(out.ground_truth, crown_tris);

    // true_T: the perturbation the registration stage has to undo
    Vec3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
    if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
    axis.normalize();
    const double angle = rng.uniform(0.0, spec.max_rotation_deg * 3.14159265358979323846 / 180.0);
    Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
    if (dir.norm() < 1e-12) dir = Vec3::UnitX();
    dir.normalize();
    out.true_T.rotation = axis_angle_rotation(axis, angle);
    out.true_T.translation = dir * rng.uniform(0.0, spec.max_translation_mm);

    TriMesh degraded = detail::decimate_cluster(out.ground_truth, spec.decimation_ratio);
    if (spec.noise_sigma > 0.0)
        for (Vec3& v : degraded.vertices)
            v += spec.noise_sigma * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const RigidTransform inv = out.true_T.inverse();
    for (Vec3& v : degraded.vertices) v = inv.apply(v);
    out.degraded_full = std::move(degraded);
    return out;
}

}  // namespace toothfuse
