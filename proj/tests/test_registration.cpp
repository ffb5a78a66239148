#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

using namespace tt;

namespace {

PointCloud sphere_cloud_with_normals(int n_samples, std::uint64_t seed) {
    TriMesh s = sphere_mesh(1.0, 24);
    PointCloud c = sample_surface(s, n_samples, seed);
    return estimate_normals(c, 10);
}

}  // namespace

TEST_CASE("feature matching") {
    PointCloud c = sphere_cloud_with_normals(300, 31);
    std::vector<FpfhSignature> sig = compute_fpfh(c, 0.5);

    SUBCASE("identical clouds match identically") {
        CorrespondenceSet corr = match_features(sig, sig);
        REQUIRE(corr.size() == sig.size());
        for (const auto& [i, j] : corr) CHECK(i == j);
    }
    SUBCASE("rigidly moved cloud keeps at least 90% identity pairs") {
        RigidTransform t = axis_angle(Vec3(2, 1, 1), 40.0, Vec3(3, -1, 2));
        PointCloud moved = apply_transform(t, c);
        std::vector<FpfhSignature> moved_sig = compute_fpfh(moved, 0.5);
        CorrespondenceSet corr = match_features(sig, moved_sig);
        std::size_t identity = 0;
        for (const auto& [i, j] : corr)
            if (i == j) ++identity;
        CHECK(identity * 10 >= corr.size() * 9);
    }
    SUBCASE("all-zero descriptors still produce a set") {
        std::vector<FpfhSignature> zeros(50);
        for (auto& h : zeros) h.fill(0.0);
        CorrespondenceSet corr = match_features(zeros, zeros);
        CHECK(!corr.empty());
    }
}

TEST_CASE("rigid estimation (Kabsch)") {
    Rng rng(32);
    std::vector<Vec3> src;
    for (int i = 0; i < 40; ++i)
        src.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));

    SUBCASE("identical sets give the identity") {
        RigidTransform t = estimate_rigid(src, src);
        CHECK((t.rotation - Mat3::Identity()).norm() < 1e-12);
        CHECK(t.translation.norm() < 1e-12);
    }
    SUBCASE("recovers a known transform exactly") {
        RigidTransform truth = axis_angle(Vec3(1, 4, -2), 63.0, Vec3(10, -3, 6));
        std::vector<Vec3> dst;
        for (const Vec3& p : src) dst.push_back(truth.apply(p));
        RigidTransform t = estimate_rigid(src, dst);
        CHECK(rotation_error_deg(t.rotation, truth.rotation) * M_PI / 180.0 < 1e-9);
        CHECK((t.translation - truth.translation).norm() < 1e-9);
    }
    SUBCASE("collinear pairs are degenerate") {
        std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0),
                                  Vec3(3, 0, 0)};
        CHECK_THROWS_AS(estimate_rigid(line, line), DegenerateConfigurationError);
    }
}

TEST_CASE("RANSAC alignment") {
    PointCloud src = sphere_cloud_with_normals(200, 33);
    RansacParams rp;
    rp.seed = 5;

    SUBCASE("already aligned with identity correspondences") {
        CorrespondenceSet corr;
        for (int i = 0; i < 200; ++i) corr.push_back({i, i});
        RegistrationResult r = ransac_align(src, src, corr, rp);
        CHECK(r.fitness == 1.0);
        CHECK(r.inlier_rmse < 1e-12);
        CHECK((r.transform.rotation - Mat3::Identity()).norm() < 1e-9);
        CHECK(r.transform.translation.norm() < 1e-9);
    }
    SUBCASE("survives 30% wrong correspondences") {
        // extent far above the threshold so a wrong model cannot tie on fitness
        // (a sphere is nearly rotation-degenerate at threshold 1)
        Rng cloud_rng(77);
        PointCloud blob;
        for (int i = 0; i < 200; ++i)
            blob.points.push_back(Vec3(cloud_rng.uniform(0, 20), cloud_rng.uniform(0, 20),
                                       cloud_rng.uniform(0, 20)));
        RigidTransform truth = axis_angle(Vec3(0, 1, 1), 25.0, Vec3(4, 2, -1));
        PointCloud dst = apply_transform(truth, blob);
        Rng rng(34);
        CorrespondenceSet corr;
        for (int i = 0; i < 200; ++i) {
            if (i % 10 < 3)
                corr.push_back({i, static_cast<int>(rng.uniform_index(200))});
            else
                corr.push_back({i, i});
        }
        RansacParams p = rp;
        p.distance_threshold = 1.0;
        RegistrationResult r = ransac_align(blob, dst, corr, p);
        CHECK(rotation_error_deg(r.transform.rotation, truth.rotation) < 2.0);
        CHECK((r.transform.translation - truth.translation).norm() < 1.0);
    }
    SUBCASE("pure-noise correspondences are rejected") {
        PointCloud dst = apply_transform(axis_angle(Vec3(1, 0, 0), 90.0, Vec3(8, 8, 8)), src);
        Rng rng(35);
        CorrespondenceSet corr;
        for (int i = 0; i < 200; ++i)
            corr.push_back({static_cast<int>(rng.uniform_index(200)),
                            static_cast<int>(rng.uniform_index(200))});
        RansacParams p = rp;
        p.distance_threshold = 0.05;
        bool rejected = false;
        try {
            RegistrationResult r = ransac_align(src, dst, corr, p);
            rejected = r.fitness < 0.1;
        } catch (const NoValidModelError&) {
            rejected = true;
        }
        CHECK(rejected);
    }
}

TEST_CASE("point-to-plane ICP") {
    // plane-rich synthetic shape: three orthogonal plane patches
    PointCloud dst;
    for (int j = 0; j < 20; ++j)
        for (int i = 0; i < 20; ++i) {
            dst.points.push_back(Vec3(i * 0.2, j * 0.2, 0));
            dst.points.push_back(Vec3(0, i * 0.2, 1.0 + j * 0.2));
            dst.points.push_back(Vec3(1.0 + j * 0.2, 0, i * 0.2));
        }
    dst = estimate_normals(dst, 8);

    SUBCASE("ground-truth init converges immediately") {
        RigidTransform id;
        RegistrationResult r = icp_point_to_plane(dst, dst, id, 1.0, 2);
        CHECK(r.inlier_rmse < 1e-9);
    }
    SUBCASE("recovers a small perturbation") {
        RigidTransform truth = axis_angle(Vec3(1, 2, 1), 5.0, Vec3(0.6, -0.5, 0.55));
        PointCloud src = apply_transform(truth.inverse(), dst);
        RegistrationResult r = icp_point_to_plane(src, dst, RigidTransform{}, 2.0, 50);
        CHECK(rotation_error_deg(r.transform.rotation, truth.rotation) < 0.1);
        CHECK((r.transform.translation - truth.translation).norm() < 0.02);
    }
    SUBCASE("flags missing correspondences") {
        PointCloud src = dst;
        for (Vec3& p : src.points) p += Vec3(100, 0, 0);
        RegistrationResult r = icp_point_to_plane(src, dst, RigidTransform{}, 0.5, 10);
        CHECK(r.no_correspondences);
    }
}

TEST_CASE("multi-scale registration") {
    SyntheticToothSpec spec;
    spec.seed = 77;
    SyntheticTooth tooth = synth_tooth(spec);
    MultiscaleParams mp;
    mp.ransac.seed = 13;

    SUBCASE("already aligned") {
        RegistrationResult r = register_multiscale(tooth.ground_truth, tooth.ground_truth, mp);
        CHECK(rotation_error_deg(r.transform.rotation, Mat3::Identity()) < 0.1);
        CHECK(r.transform.translation.norm() < 0.05);
    }
    SUBCASE("recovers a random perturbation on tooth shapes") {
        Rng rng(36);
        RigidTransform t0 = random_rigid(rng, 30.0, 10.0);
        TriMesh moving = apply_transform(t0.inverse(), tooth.ground_truth);
        RegistrationResult r = register_multiscale(moving, tooth.ground_truth, mp);
        CHECK(rotation_error_deg(r.transform.rotation, t0.rotation) < 0.5);
        CHECK((r.transform.translation - t0.translation).norm() < 0.1);
    }
    SUBCASE("partial overlap: crown against the full shape") {
        Rng rng(37);
        RigidTransform t0 = random_rigid(rng, 20.0, 6.0);
        TriMesh moving = apply_transform(t0.inverse(), tooth.crown);
        RegistrationResult r = register_multiscale(moving, tooth.ground_truth, mp);
        CHECK(rotation_error_deg(r.transform.rotation, t0.rotation) < 0.5);
        CHECK(r.fitness >= 0.8);
    }
}
