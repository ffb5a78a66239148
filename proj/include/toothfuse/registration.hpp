#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/fpfh.hpp"
#include "toothfuse/kdtree.hpp"
#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/point_ops.hpp"
#include "toothfuse/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace toothfuse {

using CorrespondenceSet = std::vector<std::pair<int, int>>;

struct RegistrationResult {
    RigidTransform transform;
    double fitness = 0.0;       // fraction of source points matched within threshold
    double inlier_rmse = 0.0;   // RANSAC: point-to-point; ICP: point-to-plane
    bool no_correspondences = false;
    std::vector<double> objective_trace;  // ICP objective per iteration, entry 0 = initial
};

struct RansacParams {
    int sample_size = 3;
    int max_iterations = 100000;
    double distance_threshold = 1.5;  // mm
    double edge_similarity = 0.9;
    double early_exit_fitness = 0.95;
    std::uint64_t seed = 0;
};

struct IcpScheduleLevel {
    double voxel = 1.0;      // mm
    double max_dist = 2.0;   // mm
    int max_iterations = 50;
};

inline std::vector<IcpScheduleLevel> default_icp_schedule() {
    return {{1.0, 2.0, 50}, {0.5, 1.0, 50}, {0.25, 0.5, 50}};
}

// Mutual nearest neighbors in 33-d descriptor space.
inline CorrespondenceSet match_features(const std::vector<FpfhSignature>& src,
                                        const std::vector<FpfhSignature>& dst) {
    if (src.empty() || dst.empty())
        throw Error("match_features: empty signature list");
    const int ns = static_cast<int>(src.size());
    const int nd = static_cast<int>(dst.size());
    Eigen::MatrixXd s(ns, 33), d(nd, 33);
    for (int i = 0; i < ns; ++i)
        for (int k = 0; k < 33; ++k) s(i, k) = src[i][k];
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < 33; ++k) d(j, k) = dst[j][k];
    Eigen::VectorXd s2 = s.rowwise().squaredNorm();
    Eigen::VectorXd d2 = d.rowwise().squaredNorm();

    std::vector<int> nn_src(ns), nn_dst(nd, -1);
    std::vector<double> best_dst(nd, std::numeric_limits<double>::infinity());
    // process source rows in blocks to bound the distance-matrix footprint
    constexpr int kBlock = 512;
    for (int r0 = 0; r0 < ns; r0 += kBlock) {
        int rows = std::min(kBlock, ns - r0);
        Eigen::MatrixXd dist = (-2.0 * (s.middleRows(r0, rows) * d.transpose()));
        dist.colwise() += s2.segment(r0, rows);
        dist.rowwise() += d2.transpose();
        for (int r = 0; r < rows; ++r) {
            int arg = 0;
            double best = dist(r, 0);
            for (int j = 1; j < nd; ++j)
                if (dist(r, j) < best) {
                    best = dist(r, j);
                    arg = j;
                }
            nn_src[r0 + r] = arg;
            for (int j = 0; j < nd; ++j)
                if (dist(r, j) < best_dst[j]) {
                    best_dst[j] = dist(r, j);
                    nn_dst[j] = r0 + r;
                }
        }
    }
    CorrespondenceSet out;
    for (int i = 0; i < ns; ++i)
        if (nn_dst[nn_src[i]] == i) out.emplace_back(i, nn_src[i]);
    return out;
}

// Least-squares rigid transform (Kabsch), det(R)=+1 enforced.
inline RigidTransform estimate_rigid(const std::vector<Vec3>& src,
                                     const std::vector<Vec3>& dst) {
    if (src.size() != dst.size() || src.size() < 3)
        throw Error("estimate_rigid: need >= 3 matched pairs");
    const double n = static_cast<double>(src.size());
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (const Vec3& p : src) cs += p;
    for (const Vec3& p : dst) cd += p;
    cs /= n;
    cd /= n;
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i)
        h += (src[i] - cs) * (dst[i] - cd).transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv[1] > 1e-9 * std::max(sv[0], 1e-300)))
        throw DegenerateConfigurationError("estimate_rigid: collinear point pairs");
    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    RigidTransform t;
    t.rotation = v * d * u.transpose();
    t.translation = cd - t.rotation * cs;
    return t;
}

// RANSAC over a fixed correspondence set. Candidate samples are pruned by
// pairwise edge-length similarity before model estimation; the best model is
// selected by (fitness, -inlier_rmse). Sequential evaluation keeps the
// result bitwise reproducible for a given seed.
inline RegistrationResult ransac_align(const PointCloud& src, const PointCloud& dst,
                                       const CorrespondenceSet& corr,
                                       const RansacParams& p) {
    const int n = static_cast<int>(corr.size());
    if (n < p.sample_size)
        throw NoValidModelError("ransac_align: fewer correspondences than sample size");
    if (p.sample_size < 3) throw Error("ransac_align: sample size must be >= 3");

    Rng rng(p.seed);
    const double thresh2 = p.distance_threshold * p.distance_threshold;
    RegistrationResult best;
    bool have_model = false;

    std::vector<int> sample(p.sample_size);
    std::vector<Vec3> s_pts(p.sample_size), d_pts(p.sample_size);
    for (int iter = 0; iter < p.max_iterations; ++iter) {
        for (int k = 0; k < p.sample_size; ++k) {
            int idx;
            bool fresh;
            do {
                idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
                fresh = std::find(sample.begin(), sample.begin() + k, idx) ==
                        sample.begin() + k;
            } while (!fresh);
            sample[k] = idx;
        }
        bool pruned = false;
        for (int a = 0; a < p.sample_size && !pruned; ++a)
            for (int b = a + 1; b < p.sample_size && !pruned; ++b) {
                double ls = (src.points[corr[sample[a]].first] -
                             src.points[corr[sample[b]].first]).norm();
                double ld = (dst.points[corr[sample[a]].second] -
                             dst.points[corr[sample[b]].second]).norm();
                if (ls < 1e-12 || ld < 1e-12 ||
                    std::min(ls, ld) < p.edge_similarity * std::max(ls, ld))
                    pruned = true;
            }
        if (pruned) continue;

        for (int k = 0; k < p.sample_size; ++k) {
            s_pts[k] = src.points[corr[sample[k]].first];
            d_pts[k] = dst.points[corr[sample[k]].second];
        }
        RigidTransform t;
        try {
            t = estimate_rigid(s_pts, d_pts);
        } catch (const DegenerateConfigurationError&) {
            continue;
        }

        int inliers = 0;
        double sq_sum = 0.0;
        for (const auto& [si, di] : corr) {
            double d2 = (t.apply(src.points[si]) - dst.points[di]).squaredNorm();
            if (d2 < thresh2) {
                ++inliers;
                sq_sum += d2;
            }
        }
        if (inliers < p.sample_size) continue;
        double fitness = static_cast<double>(inliers) / static_cast<double>(n);
        double rmse = std::sqrt(sq_sum / static_cast<double>(inliers));
        if (!have_model || fitness > best.fitness ||
            (fitness == best.fitness && rmse < best.inlier_rmse)) {
            best.transform = t;
            best.fitness = fitness;
            best.inlier_rmse = rmse;
            have_model = true;
        }
        if (best.fitness > p.early_exit_fitness) break;
    }
    if (!have_model)
        throw NoValidModelError("ransac_align: no iteration reached the inlier quorum");
    return best;
}

namespace detail {

struct IcpCorrespondences {
    std::vector<int> src_idx;
    std::vector<int> dst_idx;
};

inline IcpCorrespondences icp_correspond(const std::vector<Vec3>& src,
                                         const KdTree& dst_tree,
                                         const RigidTransform& t, double max_dist) {
    const std::size_t n = src.size();
    std::vector<int> hit(n, -1);
    parallel_for(n, [&](std::size_t i) {
        double dist;
        int j = dst_tree.nearest(t.apply(src[i]), &dist);
        if (j >= 0 && dist < max_dist) hit[i] = j;
    }, 512);
    IcpCorrespondences c;
    for (std::size_t i = 0; i < n; ++i)
        if (hit[i] >= 0) {
            c.src_idx.push_back(static_cast<int>(i));
            c.dst_idx.push_back(hit[i]);
        }
    return c;
}

inline double icp_objective(const std::vector<Vec3>& src, const PointCloud& dst,
                            const IcpCorrespondences& c, const RigidTransform& t) {
    const std::size_t m = c.src_idx.size();
    if (m == 0) return std::numeric_limits<double>::infinity();
    constexpr std::size_t kChunk = 1024;
    std::vector<double> partial((m + kChunk - 1) / kChunk, 0.0);
    parallel_chunks(m, kChunk, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            Vec3 p = t.apply(src[c.src_idx[k]]);
            double r = dst.normals[c.dst_idx[k]].dot(p - dst.points[c.dst_idx[k]]);
            s += r * r;
        }
        partial[chunk] = s;
    });
    double sum = 0.0;
    for (double s : partial) sum += s;
    return std::sqrt(sum / static_cast<double>(m));
}

inline Mat3 orthonormalized(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

}  // namespace detail

// Point-to-plane ICP from an initial transform. Each iteration solves the
// linearized 6-dof system; the step is halved until the re-corresponded
// objective does not increase, which makes the recorded trace non-increasing
// by construction.
inline RegistrationResult icp_point_to_plane(const PointCloud& src,
                                             const PointCloud& dst,
                                             const RigidTransform& init,
                                             double max_dist, int iters) {
    if (!dst.has_normals()) throw Error("icp_point_to_plane: dst has no normals");
    if (!(max_dist > 0.0)) throw Error("icp_point_to_plane: max_dist must be positive");
    if (src.empty() || dst.empty()) throw EmptyMeshError("icp_point_to_plane: empty cloud");

    KdTree dst_tree(dst.points);
    RegistrationResult res;
    res.transform = init;

    detail::IcpCorrespondences corr =
        detail::icp_correspond(src.points, dst_tree, res.transform, max_dist);
    if (corr.src_idx.empty()) {
        res.no_correspondences = true;
        res.inlier_rmse = std::numeric_limits<double>::infinity();
        return res;
    }
    double f = detail::icp_objective(src.points, dst, corr, res.transform);
    res.objective_trace.push_back(f);

    for (int iter = 0; iter < iters; ++iter) {
        // accumulate J^T J and J^T r in fixed-size chunks (deterministic order)
        const std::size_t m = corr.src_idx.size();
        constexpr std::size_t kChunk = 1024;
        std::vector<std::pair<Eigen::Matrix<double, 6, 6>, Eigen::Matrix<double, 6, 1>>>
            parts((m + kChunk - 1) / kChunk);
        parallel_chunks(m, kChunk, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
            Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
            Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
            for (std::size_t k = lo; k < hi; ++k) {
                Vec3 p = res.transform.apply(src.points[corr.src_idx[k]]);
                const Vec3& nd = dst.normals[corr.dst_idx[k]];
                const Vec3& d = dst.points[corr.dst_idx[k]];
                Eigen::Matrix<double, 6, 1> j;
                j.head<3>() = p.cross(nd);
                j.tail<3>() = nd;
                a += j * j.transpose();
                b += j * nd.dot(p - d);
            }
            parts[chunk] = {a, b};
        });
        Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
        for (const auto& [a, b] : parts) {
            jtj += a;
            jtr += b;
        }

        Eigen::Matrix<double, 6, 1> delta;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(jtj);
        double lmin = eig.eigenvalues().minCoeff();
        double lmax = eig.eigenvalues().maxCoeff();
        if (lmin > 0.0 && lmax / lmin < 1e12) {
            delta = jtj.llt().solve(-jtr);
        } else {
            delta = Eigen::BDCSVD<Eigen::MatrixXd>(
                        jtj, Eigen::ComputeThinU | Eigen::ComputeThinV)
                        .solve(-jtr);
        }
        if (!delta.allFinite()) delta.setZero();

        double step = 1.0;
        RigidTransform t_next = res.transform;
        detail::IcpCorrespondences corr_next = corr;
        double f_next = f;
        bool moved = false;
        while (true) {
            Vec3 omega = step * delta.head<3>();
            Vec3 trans = step * delta.tail<3>();
            RigidTransform inc;
            double angle = omega.norm();
            inc.rotation = angle > 1e-300 ? axis_angle_rotation(omega / angle, angle)
                                          : Mat3::Identity();
            inc.translation = trans;
            RigidTransform cand = compose(inc, res.transform);
            cand.rotation = detail::orthonormalized(cand.rotation);
            detail::IcpCorrespondences cc =
                detail::icp_correspond(src.points, dst_tree, cand, max_dist);
            if (cc.src_idx.empty()) {
                res.no_correspondences = true;
                res.fitness = static_cast<double>(corr.src_idx.size()) /
                              static_cast<double>(src.points.size());
                res.inlier_rmse = f;
                return res;
            }
            double fc = detail::icp_objective(src.points, dst, cc, cand);
            if (fc <= f + 1e-12) {
                t_next = cand;
                corr_next = std::move(cc);
                f_next = fc;
                moved = true;
                break;
            }
            step *= 0.5;
            if (step < 1e-12) break;
        }
        double update_norm = moved ? step * delta.norm() : 0.0;
        if (moved) {
            res.transform = t_next;
            corr = std::move(corr_next);
            f = f_next;
        }
        res.objective_trace.push_back(f);
        if (update_norm < 1e-7) break;
    }

    res.fitness = static_cast<double>(corr.src_idx.size()) /
                  static_cast<double>(src.points.size());
    res.inlier_rmse = f;
    return res;
}

struct MultiscaleParams {
    RansacParams ransac;
    std::vector<IcpScheduleLevel> schedule = default_icp_schedule();
    int sample_count = 30000;   // surface samples per mesh
    int normal_k = 20;          // k-NN size for normal estimation
    double feature_radius_factor = 5.0;  // FPFH radius = factor * coarse voxel
};

// Two-stage registration of `moving` onto `fixed`: FPFH + RANSAC at the
// coarsest level, then point-to-plane ICP per schedule level.
inline RegistrationResult register_multiscale(const TriMesh& moving,
                                              const TriMesh& fixed,
                                              const MultiscaleParams& mp = {}) {
    if (moving.triangles.empty() || fixed.triangles.empty())
        throw EmptyMeshError("register_multiscale: empty input mesh");
    if (mp.schedule.empty()) throw Error("register_multiscale: empty schedule");

    PointCloud mov_samples = sample_surface(moving, mp.sample_count, mp.ransac.seed);
    PointCloud fix_samples =
        sample_surface(fixed, mp.sample_count, mp.ransac.seed ^ 0x9e3779b97f4a7c15ull);

    const double coarse_voxel = mp.schedule.front().voxel;
    PointCloud mov_coarse = voxel_downsample(mov_samples, coarse_voxel);
    PointCloud fix_coarse = voxel_downsample(fix_samples, coarse_voxel);
    mov_coarse = estimate_normals(mov_coarse, mp.normal_k);
    fix_coarse = estimate_normals(fix_coarse, mp.normal_k);

    const double radius = mp.feature_radius_factor * coarse_voxel;
    std::vector<FpfhSignature> mov_sig = compute_fpfh(mov_coarse, radius);
    std::vector<FpfhSignature> fix_sig = compute_fpfh(fix_coarse, radius);
    CorrespondenceSet corr = match_features(mov_sig, fix_sig);
    RegistrationResult result = ransac_align(mov_coarse, fix_coarse, corr, mp.ransac);

    for (const IcpScheduleLevel& level : mp.schedule) {
        PointCloud mov_level = voxel_downsample(mov_samples, level.voxel);
        PointCloud fix_level = voxel_downsample(fix_samples, level.voxel);
        fix_level = estimate_normals(fix_level, mp.normal_k);
        RegistrationResult r = icp_point_to_plane(mov_level, fix_level, result.transform,
                                                  level.max_dist, level.max_iterations);
        result.transform = r.transform;
        result.fitness = r.fitness;
        result.inlier_rmse = r.inlier_rmse;
        result.no_correspondences = r.no_correspondences;
        result.objective_trace = std::move(r.objective_trace);
    }
    return result;
}

}  // namespace toothfuse
