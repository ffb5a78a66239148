#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

using namespace tt;

namespace {

SdfNetwork constant_net(double c) {
    SdfNetwork net = SdfNetwork::create(4, 16, 2, 1, 40);
    net.w.back().setZero();
    net.b.back().setConstant(std::atanh(c));
    return net;
}

// Hand-built net whose zero level set is the plane x = offset: the first
// layer encodes ReLU(x) and ReLU(-x), the skip layer passes both through,
// and the output layer recombines them as x - offset.
SdfNetwork plane_net(double offset) {
    SdfNetwork net = SdfNetwork::create(2, 2, 2, 1, 41);
    net.w[0].setZero();
    net.b[0].setZero();
    net.w[0](0, 0) = 1.0;
    net.w[0](1, 0) = -1.0;
    net.w[1].setZero();
    net.b[1].setZero();
    net.w[1](0, 0) = 1.0;
    net.w[1](1, 1) = 1.0;
    net.w[2].setZero();
    net.w[2](0, 0) = 0.01;
    net.w[2](0, 1) = -0.01;
    net.b[2].setConstant(-0.01 * offset);  // shallow slope keeps tanh near-linear
    return net;
}

}  // namespace

TEST_CASE("grid evaluation") {
    SUBCASE("constant net fills the grid with one value") {
        SdfNetwork net = constant_net(0.25);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
        ScalarGrid g = evaluate_grid(net, z, Vec3i(9, 7, 5));
        for (double v : g.values) CHECK(v == g.values.front());
        CHECK(std::abs(g.values.front() - 0.25) < 1e-12);
    }
    SUBCASE("resolution 2 samples exactly the bound corners") {
        SdfNetwork net = constant_net(0.0);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
        ScalarGrid g = evaluate_grid(net, z, Vec3i(2, 2, 2));
        REQUIRE(g.values.size() == 8);
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) {
                    const Vec3 p = g.position(i, j, k);
                    CHECK(std::abs(std::abs(p.x()) - 1.05) < 1e-12);
                    CHECK(std::abs(std::abs(p.y()) - 1.05) < 1e-12);
                    CHECK(std::abs(std::abs(p.z()) - 1.05) < 1e-12);
                }
    }
    SUBCASE("injected analytic sphere matches the closed form") {
        const double r = 0.5;
        ScalarGrid g = evaluate_field([&](const Vec3& p) { return p.norm() - r; },
                                      Vec3i(33, 33, 33));
        for (int k = 0; k < 33; ++k)
            for (int j = 0; j < 33; ++j)
                for (int i = 0; i < 33; ++i)
                    CHECK(std::abs(g.at(i, j, k) - (g.position(i, j, k).norm() - r)) < 1e-12);
    }
}

TEST_CASE("marching cubes") {
    SUBCASE("all-positive field gives an empty mesh") {
        ScalarGrid g = evaluate_field([](const Vec3&) { return 1.0; }, Vec3i(8, 8, 8));
        TriMesh m = marching_cubes(g, 0.0);
        CHECK(m.vertices.empty());
        CHECK(m.triangles.empty());
    }
    SUBCASE("sphere fidelity and watertightness at 192") {
        ScalarGrid g = evaluate_field([](const Vec3& p) { return p.norm() - 0.5; });
        TriMesh m = marching_cubes(g, 0.0);
        REQUIRE(!m.vertices.empty());
        double mean_err = 0.0;
        for (const Vec3& v : m.vertices) mean_err += std::abs(v.norm() - 0.5);
        mean_err /= static_cast<double>(m.vertices.size());
        CHECK(mean_err < 2.1 / 191.0);
        CHECK(boundary_edge_count(m) == 0);
        CHECK(signed_volume(m) > 0.0);  // outward orientation
    }
    SUBCASE("negated field flips every triangle") {
        ScalarGrid g = evaluate_field([](const Vec3& p) { return p.norm() - 0.5; },
                                      Vec3i(24, 24, 24));
        ScalarGrid neg = g;
        for (double& v : neg.values) v = -v;
        TriMesh a = marching_cubes(g, 0.0);
        TriMesh b = marching_cubes(neg, 0.0);
        REQUIRE(a.vertices.size() == b.vertices.size());
        REQUIRE(a.triangles.size() == b.triangles.size());
        for (std::size_t i = 0; i < a.vertices.size(); ++i)
            CHECK((a.vertices[i] - b.vertices[i]).norm() < 1e-12);
        CHECK(signed_volume(a) > 0.0);
        CHECK(signed_volume(b) < 0.0);
    }
}

TEST_CASE("surface reconstruction") {
    SUBCASE("normalization info scales the output similarity-style") {
        SdfNetwork net = plane_net(0.25);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
        NormalizationInfo identity;
        TriMesh a = reconstruct(net, z, identity, 48);
        NormalizationInfo scaled;
        scaled.scale = 10.0;
        scaled.center = Vec3(5, -2, 1);
        TriMesh b = reconstruct(net, z, scaled, 48);
        REQUIRE(!a.vertices.empty());
        REQUIRE(a.vertices.size() == b.vertices.size());
        CHECK(std::abs(bbox_diagonal(b) - 10.0 * bbox_diagonal(a)) < 1e-9);
        // zero level set is the plane x = 0.25 -> x_world = 5 + 2.5
        for (const Vec3& v : b.vertices) CHECK(std::abs(v.x() - 7.5) < 1e-6);
    }
    SUBCASE("an untrained near-zero net must not crash") {
        SdfNetwork net = SdfNetwork::create(4, 16, 2, 1, 42);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
        NormalizationInfo identity;
        try {
            TriMesh m = reconstruct(net, z, identity, 24);
            CHECK(m.triangles.size() < 200000);
        } catch (const EmptySurfaceError&) {
            CHECK(true);
        }
    }
}
