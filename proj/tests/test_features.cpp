#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

using namespace tt;

namespace {

double block_sum(const FpfhSignature& h, int block) {
    double s = 0.0;
    for (int k = 0; k < kFpfhBins; ++k) s += h[block * kFpfhBins + k];
    return s;
}

int nonzero_bins(const FpfhSignature& h, int block) {
    int n = 0;
    for (int k = 0; k < kFpfhBins; ++k)
        if (h[block * kFpfhBins + k] != 0.0) ++n;
    return n;
}

}  // namespace

TEST_CASE("darboux pair features") {
    SUBCASE("coplanar points with identical normals") {
        PairFeatures f = pair_features(Vec3(0, 0, 0), Vec3(0, 0, 1),
                                       Vec3(1, 0, 0), Vec3(0, 0, 1));
        CHECK(std::abs(f.alpha) < 1e-12);
        CHECK(std::abs(f.theta) < 1e-12);
    }
    SUBCASE("equal normals with perpendicular displacement") {
        PairFeatures f = pair_features(Vec3(0, 0, 0), Vec3(0, 0, 1),
                                       Vec3(0, 2, 0), Vec3(0, 0, 1));
        CHECK(std::abs(f.phi) < 1e-12);
    }
    SUBCASE("coincident points are rejected") {
        CHECK_THROWS_AS(pair_features(Vec3(1, 2, 3), Vec3(0, 0, 1),
                                      Vec3(1, 2, 3), Vec3(0, 1, 0)),
                        CoincidentPointsError);
    }
}

TEST_CASE("spfh histograms") {
    SUBCASE("isolated point yields the zero vector") {
        PointCloud c = plane_cloud(4, 1.0);
        c.points.push_back(Vec3(100, 100, 100));
        c.normals.assign(c.points.size(), Vec3(0, 0, 1));
        FpfhSignature h = compute_spfh(c, static_cast<int>(c.points.size()) - 1, 2.0);
        for (double v : h) CHECK(v == 0.0);
    }
    SUBCASE("planar patch concentrates alpha and theta in single bins") {
        PointCloud c = plane_cloud(7, 0.5);
        c.normals.assign(c.points.size(), Vec3(0, 0, 1));
        FpfhSignature h = compute_spfh(c, 24, 1.2);  // interior point
        CHECK(nonzero_bins(h, 0) == 1);  // alpha block
        CHECK(nonzero_bins(h, 2) == 1);  // theta block
        for (int b = 0; b < 3; ++b) {
            const double s = block_sum(h, b);
            CHECK((std::abs(s - 100.0) < 1e-9 || s == 0.0));
        }
    }
    SUBCASE("blocks sum to 100 or 0 on arbitrary input") {
        Rng rng(21);
        PointCloud c;
        for (int i = 0; i < 60; ++i) {
            c.points.push_back(Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)));
            Vec3 n(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            c.normals.push_back(n.normalized());
        }
        for (int i = 0; i < 60; i += 7) {
            FpfhSignature h = compute_spfh(c, i, 0.4);
            for (int b = 0; b < 3; ++b) {
                const double s = block_sum(h, b);
                CHECK((std::abs(s - 100.0) < 1e-9 || s == 0.0));
            }
        }
    }
}

TEST_CASE("fpfh descriptors") {
    SUBCASE("single-point cloud gives zero vectors") {
        PointCloud c;
        c.points = {Vec3(1, 2, 3)};
        c.normals = {Vec3(0, 0, 1)};
        std::vector<FpfhSignature> sig = compute_fpfh(c, 1.0);
        REQUIRE(sig.size() == 1);
        for (double v : sig[0]) CHECK(v == 0.0);
    }
    SUBCASE("uniform plane: interior signatures identical within 1e-6") {
        PointCloud c = plane_cloud(11, 0.5);
        c.normals.assign(c.points.size(), Vec3(0, 0, 1));
        std::vector<FpfhSignature> sig = compute_fpfh(c, 1.1);
        // interior = at least 2 cells from the border
        std::vector<int> interior;
        for (int j = 2; j < 9; ++j)
            for (int i = 2; i < 9; ++i) interior.push_back(j * 11 + i);
        for (std::size_t k = 1; k < interior.size(); ++k)
            for (int d = 0; d < 33; ++d)
                CHECK(std::abs(sig[interior[k]][d] - sig[interior[0]][d]) < 1e-6);
    }
    SUBCASE("rigid motion leaves signatures unchanged within 1e-9") {
        TriMesh s = sphere_mesh(1.0, 20);
        PointCloud c = sample_surface(s, 400, 22);
        c = estimate_normals(c, 10);
        std::vector<FpfhSignature> before = compute_fpfh(c, 0.5);

        RigidTransform t = axis_angle(Vec3(1, -1, 2), 73.0, Vec3(5, 6, -7));
        PointCloud moved = apply_transform(t, c);
        std::vector<FpfhSignature> after = compute_fpfh(moved, 0.5);

        REQUIRE(before.size() == after.size());
        for (std::size_t i = 0; i < before.size(); ++i)
            for (int d = 0; d < 33; ++d)
                CHECK(std::abs(before[i][d] - after[i][d]) < 1e-9);
    }
}
