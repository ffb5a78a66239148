#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

#include <array>
#include <map>
#include <set>

using namespace tt;

TEST_CASE("rigid transform basics") {
    Rng rng(1);
    PointCloud c;
    for (int i = 0; i < 200; ++i)
        c.points.push_back(Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));

    SUBCASE("identity leaves the cloud unchanged") {
        RigidTransform id;
        PointCloud out = apply_transform(id, c);
        for (std::size_t i = 0; i < c.points.size(); ++i)
            CHECK(same_vec(out.points[i], c.points[i]));
    }
    SUBCASE("inverse round-trip within 1e-9") {
        RigidTransform t = axis_angle(Vec3(1, 2, 3), 37.0, Vec3(4, -2, 9));
        RigidTransform inv = t.inverse();
        for (const Vec3& p : c.points)
            CHECK((inv.apply(t.apply(p)) - p).norm() < 1e-9);
    }
    SUBCASE("90 degrees about z maps x to y") {
        RigidTransform t = axis_angle(Vec3(0, 0, 1), 90.0);
        CHECK((t.apply(Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-12);
    }
}

TEST_CASE("transform composition") {
    RigidTransform id;
    RigidTransform t = axis_angle(Vec3(3, 1, -2), 21.0, Vec3(0.5, 8, -3));

    SUBCASE("compose with identity") {
        RigidTransform c = compose(id, t);
        CHECK((c.rotation - t.rotation).norm() < 1e-15);
        CHECK((c.translation - t.translation).norm() < 1e-15);
    }
    SUBCASE("compose with inverse gives identity") {
        RigidTransform c = compose(t, t.inverse());
        CHECK((c.rotation - Mat3::Identity()).norm() < 1e-9);
        CHECK(c.translation.norm() < 1e-9);
    }
    SUBCASE("compose agrees with sequential application on 100 points") {
        Rng rng(2);
        RigidTransform t1 = random_rigid(rng, 180.0, 10.0);
        RigidTransform t2 = random_rigid(rng, 180.0, 10.0);
        RigidTransform c = compose(t1, t2);
        for (int i = 0; i < 100; ++i) {
            Vec3 p(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
            CHECK((c.apply(p) - t1.apply(t2.apply(p))).norm() < 1e-9);
        }
    }
}

TEST_CASE("normal estimation") {
    SUBCASE("plane z=0 with k=10") {
        PointCloud c = plane_cloud(15, 0.5);
        PointCloud out = estimate_normals(c, 10);
        REQUIRE(out.normals.size() == c.points.size());
        const double sign = out.normals.front().z() > 0 ? 1.0 : -1.0;
        for (const Vec3& n : out.normals) {
            CHECK((n - sign * Vec3(0, 0, 1)).norm() < 1e-6);
        }
    }
    SUBCASE("sphere of radius 10: normals radial, consistent sign") {
        TriMesh s = sphere_mesh(10.0, 40);
        PointCloud c = sample_surface(s, 3000, 11);
        c.normals.clear();
        PointCloud out = estimate_normals(c, 12);
        int agree = 0, disagree = 0;
        for (std::size_t i = 0; i < out.points.size(); ++i) {
            const double a = out.normals[i].dot(out.points[i].normalized());
            CHECK(std::abs(std::abs(a) - 1.0) < 1e-2);
            (a > 0 ? agree : disagree)++;
        }
        CHECK((agree == 0 || disagree == 0));
    }
    SUBCASE("collinear points are degenerate") {
        PointCloud c;
        c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
        CHECK_THROWS_AS(estimate_normals(c, 2), DegenerateNeighborhoodError);
    }
}

TEST_CASE("voxel downsample") {
    SUBCASE("voxel larger than bbox diagonal collapses to centroid") {
        PointCloud c;
        Vec3 sum = Vec3::Zero();
        Rng rng(3);
        for (int i = 0; i < 50; ++i) {
            c.points.push_back(Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)));
            sum += c.points.back();
        }
        PointCloud out = voxel_downsample(c, 10.0);
        REQUIRE(out.points.size() == 1);
        CHECK((out.points[0] - sum / 50.0).norm() < 1e-12);
    }
    SUBCASE("grid points at least a voxel apart pass through") {
        PointCloud c;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) c.points.push_back(Vec3(i, j, 0));
        PointCloud out = voxel_downsample(c, 0.99);
        REQUIRE(out.points.size() == c.points.size());
        std::set<std::array<long, 2>> expect, got;
        for (const Vec3& p : c.points) expect.insert({std::lround(p.x()), std::lround(p.y())});
        for (const Vec3& p : out.points) {
            got.insert({std::lround(p.x()), std::lround(p.y())});
            CHECK(std::abs(p.x() - std::round(p.x())) < 1e-12);
        }
        CHECK(expect == got);
    }
    SUBCASE("1000 random points vs brute-force bucketing oracle") {
        Rng rng(4);
        PointCloud c;
        for (int i = 0; i < 1000; ++i)
            c.points.push_back(Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)));
        const double voxel = 0.25;
        PointCloud out = voxel_downsample(c, voxel);
        CHECK(out.points.size() <= 64);

        const Vec3 origin = c.bounds().min;
        std::map<std::array<long, 3>, std::pair<Vec3, int>> cells;
        for (const Vec3& p : c.points) {
            Vec3 rel = (p - origin) / voxel;
            std::array<long, 3> key = {static_cast<long>(std::floor(rel[0])),
                                       static_cast<long>(std::floor(rel[1])),
                                       static_cast<long>(std::floor(rel[2]))};
            auto& acc = cells[key];
            if (acc.second == 0) acc.first = Vec3::Zero();
            acc.first += p;
            acc.second += 1;
        }
        REQUIRE(out.points.size() == cells.size());
        for (const Vec3& p : out.points) {
            double best = 1e300;
            for (const auto& [key, acc] : cells)
                best = std::min(best, (p - acc.first / acc.second).norm());
            CHECK(best < 1e-12);
        }
    }
}

TEST_CASE("surface sampling") {
    SUBCASE("single triangle: samples on the plane and inside") {
        TriMesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 3, 0)};
        m.triangles = {{0, 1, 2}};
        PointCloud c = sample_surface(m, 500, 5);
        for (const Vec3& p : c.points) {
            CHECK(std::abs(p.z()) < 1e-12);
            CHECK(p.x() > -1e-12);
            CHECK(p.y() > -1e-12);
            CHECK(p.x() / 2.0 + p.y() / 3.0 < 1.0 + 1e-12);
        }
    }
    SUBCASE("9:1 area ratio, n=10000 within 3 sigma") {
        TriMesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(9, 0, 0), Vec3(0, 2, 0),
                      Vec3(20, 0, 0), Vec3(21, 0, 0), Vec3(20, 2, 0)};
        m.triangles = {{0, 1, 2}, {3, 4, 5}};
        PointCloud c = sample_surface(m, 10000, 6);
        int big = 0;
        for (const Vec3& p : c.points)
            if (p.x() < 15.0) ++big;
        CHECK(big >= 8910);  // binomial n=10000 p=0.9, +-3 sigma
        CHECK(big <= 9090);
    }
    SUBCASE("same seed gives identical clouds") {
        TriMesh m = tetrahedron();
        PointCloud a = sample_surface(m, 1000, 7);
        PointCloud b = sample_surface(m, 1000, 7);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t i = 0; i < a.points.size(); ++i)
            CHECK(same_vec(a.points[i], b.points[i]));
    }
    SUBCASE("triangle frequencies match area fractions (chi-square)") {
        // 10 triangles of distinct areas, each inside its own 20-wide slot
        // (max base width is 10, so slots never overlap)
        TriMesh m;
        std::vector<double> areas;
        for (int t = 0; t < 10; ++t) {
            const double w = 1.0 + t;  // base width, area w/2
            const int base = static_cast<int>(m.vertices.size());
            m.vertices.push_back(Vec3(20.0 * t, 0, 0));
            m.vertices.push_back(Vec3(20.0 * t + w, 0, 0));
            m.vertices.push_back(Vec3(20.0 * t, 1, 0));
            m.triangles.push_back({base, base + 1, base + 2});
            areas.push_back(w / 2.0);
        }
        const std::size_t n = 100000;
        PointCloud c = sample_surface(m, n, 8);
        std::vector<int> count(10, 0);
        for (const Vec3& p : c.points) {
            int t = static_cast<int>(std::floor(p.x() / 20.0));
            REQUIRE(t >= 0);
            REQUIRE(t < 10);
            ++count[t];
        }
        double total = 0.0;
        for (double a : areas) total += a;
        double chi2 = 0.0;
        for (int t = 0; t < 10; ++t) {
            const double expect = n * areas[t] / total;
            chi2 += (count[t] - expect) * (count[t] - expect) / expect;
        }
        CHECK(chi2 < 27.877164871256568);  // chi-square 0.999 quantile, dof 9
    }
}

TEST_CASE("connected components") {
    SUBCASE("two disjoint tetrahedra") {
        TriMesh m = concat_meshes(tetrahedron(), tetrahedron(Vec3(10, 0, 0)));
        std::vector<TriMesh> comps = connected_components(m);
        REQUIRE(comps.size() == 2);
        CHECK(comps[0].triangles.size() == 4);
        CHECK(comps[1].triangles.size() == 4);
    }
    SUBCASE("sphere is a single component equal to its input") {
        TriMesh s = sphere_mesh(1.0, 24);
        std::vector<TriMesh> comps = connected_components(s);
        REQUIRE(comps.size() == 1);
        CHECK(comps[0].triangles.size() == s.triangles.size());
        CHECK(comps[0].vertices.size() == s.vertices.size());
    }
    SUBCASE("largest component comes first") {
        TriMesh s = sphere_mesh(1.0, 24);
        TriMesh m = concat_meshes(s, unit_cube());
        std::vector<TriMesh> comps = connected_components(m);
        REQUIRE(comps.size() == 2);
        CHECK(comps[0].triangles.size() == s.triangles.size());
        CHECK(comps[1].triangles.size() == 12);
    }
}

TEST_CASE("bbox diagonal") {
    SUBCASE("unit cube") {
        CHECK(bbox_diagonal(unit_cube()) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    }
    SUBCASE("single vertex") {
        TriMesh m;
        m.vertices = {Vec3(4, 5, 6)};
        CHECK(bbox_diagonal(m) == 0.0);
    }
    SUBCASE("3-4-5") {
        TriMesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(3, 4, 0)};
        CHECK(bbox_diagonal(m) == doctest::Approx(5.0).epsilon(1e-12));
    }
}

TEST_CASE("closest point queries") {
    TriMesh s = sphere_mesh(1.0, 20);
    TriangleBvh bvh(s);

    SUBCASE("point on the surface has distance zero") {
        const Vec3 x = s.vertices[17];
        CHECK(closest_point(bvh, x).distance < 1e-12);
    }
    SUBCASE("offset along a triangle normal") {
        TriMesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(4, 0, 0), Vec3(0, 4, 0)};
        m.triangles = {{0, 1, 2}};
        const Vec3 centroid(4.0 / 3.0, 4.0 / 3.0, 0.0);
        for (double d : {0.25, 1.0, 7.5}) {
            ClosestHit hit = closest_point(m, centroid + d * Vec3(0, 0, 1));
            CHECK(std::abs(hit.distance - d) < 1e-12);
            CHECK((hit.point - centroid).norm() < 1e-12);
        }
    }
    SUBCASE("100 random queries match brute force within 1e-12") {
        Rng rng(9);
        for (int q = 0; q < 100; ++q) {
            Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
            ClosestHit hit = closest_point(bvh, x);
            double best = 1e300;
            for (const Vec3i& t : s.triangles) {
                Vec3 cp = closest_point_on_triangle(x, s.vertices[t[0]], s.vertices[t[1]],
                                                    s.vertices[t[2]]);
                best = std::min(best, (cp - x).norm());
            }
            CHECK(std::abs(hit.distance - best) < 1e-12);
        }
    }
    SUBCASE("ties break toward the lowest triangle id") {
        TriMesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
        m.triangles = {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}};
        ClosestHit hit = closest_point(m, Vec3(0.2, 0.2, 3.0));
        CHECK(hit.triangle == 0);
    }
}

TEST_CASE("watertightness and boundary edges") {
    TriMesh cube = unit_cube();
    CHECK(is_watertight(cube));
    CHECK(boundary_edge_count(cube) == 0);
    cube.triangles.pop_back();
    CHECK_FALSE(is_watertight(cube));
    CHECK(boundary_edge_count(cube) == 3);

    TriMesh s = sphere_mesh(0.8, 24);
    CHECK(is_watertight(s));
    CHECK(signed_volume(s) > 0.0);
}
