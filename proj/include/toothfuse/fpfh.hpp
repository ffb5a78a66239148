#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/kdtree.hpp"
#include "toothfuse/parallel.hpp"

#include <array>

namespace toothfuse {

// Three consecutive 11-bin histograms over (alpha, phi, theta). Each block
// sums to 100 (percentage normalization) or to 0 for points with no
// neighbors.
using FpfhSignature = std::array<double, 33>;

inline constexpr int kFpfhBins = 11;

struct PairFeatures {
    double alpha = 0.0;  // v . n_t, in [-1, 1]
    double phi = 0.0;    // u . d_hat, in [-1, 1]
    double theta = 0.0;  // atan2(w . n_t, u . n_t), in (-pi, pi]
    double distance = 0.0;
};

// Darboux-frame pair features. Roles are fixed so the source normal makes
// the smaller angle with the source-to-target displacement. When the
// displacement is parallel to n_s the frame is completed with a fixed
// arbitrary perpendicular.
inline PairFeatures pair_features(Vec3 p_s, Vec3 n_s, Vec3 p_t, Vec3 n_t) {
    Vec3 d = p_t - p_s;
    const double dist = d.norm();
    if (dist < 1e-12) throw CoincidentPointsError("pair_features: coincident points");
    Vec3 d_hat = d / dist;
    if (n_s.dot(d_hat) < n_t.dot(-d_hat)) {
        std::swap(p_s, p_t);
        std::swap(n_s, n_t);
        d_hat = -d_hat;
    }
    const Vec3 u = n_s;
    Vec3 v = u.cross(d_hat);
    const double vlen = v.norm();
    v = vlen > 1e-12 ? Vec3(v / vlen) : Vec3(u.unitOrthogonal());
    const Vec3 w = u.cross(v);

    PairFeatures f;
    f.alpha = std::clamp(v.dot(n_t), -1.0, 1.0);
    f.phi = std::clamp(u.dot(d_hat), -1.0, 1.0);
    f.theta = std::atan2(w.dot(n_t), u.dot(n_t));
    f.distance = dist;
    return f;
}

namespace detail {

inline int fpfh_bin(double value, double lo, double hi) {
    int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * kFpfhBins));
    return std::clamp(b, 0, kFpfhBins - 1);
}

inline void fpfh_accumulate(FpfhSignature& h, const PairFeatures& f) {
    constexpr double pi = 3.14159265358979323846;
    h[fpfh_bin(f.alpha, -1.0, 1.0)] += 1.0;
    h[kFpfhBins + fpfh_bin(f.phi, -1.0, 1.0)] += 1.0;
    h[2 * kFpfhBins + fpfh_bin(f.theta, -pi, pi)] += 1.0;
}

inline void fpfh_normalize_blocks(FpfhSignature& h) {
    for (int b = 0; b < 3; ++b) {
        double sum = 0.0;
        for (int k = 0; k < kFpfhBins; ++k) sum += h[b * kFpfhBins + k];
        if (sum > 0.0)
            for (int k = 0; k < kFpfhBins; ++k) h[b * kFpfhBins + k] *= 100.0 / sum;
    }
}

// Radius neighbors excluding self, capped at the closest `cap`.
inline std::vector<int> fpfh_neighbors(const KdTree& tree, const std::vector<Vec3>& pts,
                                       int i, double radius, int cap = 100) {
    std::vector<int> nbrs = tree.radius(pts[i], radius);
    std::erase(nbrs, i);
    if (static_cast<int>(nbrs.size()) > cap) nbrs.resize(cap);
    return nbrs;
}

inline bool usable_normal(const Vec3& n) { return n.squaredNorm() > 0.5; }

inline FpfhSignature compute_spfh_impl(const PointCloud& c, const KdTree& tree, int i,
                                       double radius) {
    FpfhSignature h{};
    if (!usable_normal(c.normals[i])) return h;
    for (int j : fpfh_neighbors(tree, c.points, i, radius)) {
        if (!usable_normal(c.normals[j])) continue;
        if ((c.points[j] - c.points[i]).norm() < 1e-12) continue;
        fpfh_accumulate(h, pair_features(c.points[i], c.normals[i], c.points[j],
                                         c.normals[j]));
    }
    fpfh_normalize_blocks(h);
    return h;
}

}  // namespace detail

// Simplified Point Feature Histogram of one point over its radius neighbors.
inline FpfhSignature compute_spfh(const PointCloud& c, int i, double radius) {
    if (!c.has_normals()) throw Error("compute_spfh: cloud has no normals");
    if (!(radius > 0.0)) throw Error("compute_spfh: radius must be positive");
    KdTree tree(c.points);
    return detail::compute_spfh_impl(c, tree, i, radius);
}

// FPFH(p) = SPFH(p) + (1/k) sum_j (1/omega_j) SPFH(p_j) over radius
// neighbors, each block renormalized to sum 100.
inline std::vector<FpfhSignature> compute_fpfh(const PointCloud& c, double radius) {
    if (!c.has_normals()) throw Error("compute_fpfh: cloud has no normals");
    if (!(radius > 0.0)) throw Error("compute_fpfh: radius must be positive");
    const std::size_t n = c.points.size();
    std::vector<FpfhSignature> spfh(n);
    KdTree tree(c.points);

    parallel_for(n, [&](std::size_t i) {
        spfh[i] = detail::compute_spfh_impl(c, tree, static_cast<int>(i), radius);
    }, 32);

    std::vector<FpfhSignature> fpfh(n);
    parallel_for(n, [&](std::size_t i) {
        FpfhSignature h = spfh[i];
        std::vector<int> nbrs =
            detail::fpfh_neighbors(tree, c.points, static_cast<int>(i), radius);
        double k = 0.0;
        FpfhSignature acc{};
        for (int j : nbrs) {
            double w = (c.points[j] - c.points[i]).norm();
            if (w < 1e-12) continue;
            for (int b = 0; b < 33; ++b) acc[b] += spfh[j][b] / w;
            k += 1.0;
        }
        if (k > 0.0)
            for (int b = 0; b < 33; ++b) h[b] += acc[b] / k;
        detail::fpfh_normalize_blocks(h);
        fpfh[i] = h;
    }, 32);
    return fpfh;
}

}  // namespace toothfuse
