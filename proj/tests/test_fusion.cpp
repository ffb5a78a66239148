#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

using namespace tt;

namespace {

// top band of a mesh: triangles whose vertices all have z >= z_cut
TriMesh top_band(const TriMesh& m, double z_cut) {
    TriMesh out;
    std::vector<int> remap(m.vertices.size(), -1);
    for (const Vec3i& t : m.triangles) {
        if (m.vertices[t[0]].z() < z_cut || m.vertices[t[1]].z() < z_cut ||
            m.vertices[t[2]].z() < z_cut)
            continue;
        Vec3i nt;
        for (int k = 0; k < 3; ++k) {
            if (remap[t[k]] < 0) {
                remap[t[k]] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(m.vertices[t[k]]);
            }
            nt[k] = remap[t[k]];
        }
        out.triangles.push_back(nt);
    }
    return out;
}

}  // namespace

TEST_CASE("root isolation") {
    SUBCASE("crown identical to the aligned mesh leaves no root") {
        TriMesh s = sphere_mesh(1.0, 20);
        CHECK_THROWS_AS(isolate_root(s, s), EmptyRootError);
    }
    SUBCASE("cylinder with its top band as crown") {
        TriMesh cyl = cylinder_mesh(3.0, 20.0, 48, 40);
        TriMesh crown = top_band(cyl, 15.0);
        REQUIRE(!crown.triangles.empty());
        FusionParams p;
        TriMesh root = isolate_root(cyl, crown, p);
        REQUIRE(!root.vertices.empty());
        TriangleBvh crown_index(crown);
        double min_z = 1e300, max_z = -1e300;
        for (const Vec3& v : root.vertices) {
            CHECK(crown_index.closest(v).distance > p.tau);
            min_z = std::min(min_z, v.z());
            max_z = std::max(max_z, v.z());
        }
        CHECK(min_z == 0.0);        // bottom cap retained
        CHECK(max_z < 15.0);        // nothing inside the crown band
    }
    SUBCASE("only the largest component survives") {
        // two bands of one cylinder separated by a deleted ring, crown far away
        TriMesh cyl = cylinder_mesh(2.0, 10.0, 24, 20);
        TriMesh split;
        split.vertices = cyl.vertices;
        for (const Vec3i& t : cyl.triangles) {
            const double z = std::min({cyl.vertices[t[0]].z(), cyl.vertices[t[1]].z(),
                                       cyl.vertices[t[2]].z()});
            const double zmax = std::max({cyl.vertices[t[0]].z(), cyl.vertices[t[1]].z(),
                                          cyl.vertices[t[2]].z()});
            if (zmax <= 7.0 || z >= 7.5) split.triangles.push_back(t);
        }
        TriMesh crown = tetrahedron(Vec3(100, 0, 0));
        TriMesh root = isolate_root(split, crown);
        std::vector<TriMesh> comps = connected_components(split);
        REQUIRE(comps.size() >= 2);
        CHECK(root.triangles.size() == comps[0].triangles.size());
        CHECK(root.triangles.size() > split.triangles.size() / 2);
    }
}

TEST_CASE("hybrid proxy construction") {
    TriMesh crown = sphere_mesh(1.0, 16);
    TriMesh root = cylinder_mesh(0.5, 5.0, 16, 8);
    for (Vec3& v : root.vertices) v += Vec3(0, 0, -6.0);

    SUBCASE("vertex counts add up") {
        TriMesh h = make_hybrid_proxy(crown, root);
        CHECK(h.vertices.size() == crown.vertices.size() + root.vertices.size());
        CHECK(h.triangles.size() == crown.triangles.size() + root.triangles.size());
    }
    SUBCASE("positions preserved bit-exactly and partition reproduces inputs") {
        TriMesh h = make_hybrid_proxy(crown, root);
        for (std::size_t i = 0; i < crown.vertices.size(); ++i)
            CHECK(same_vec(h.vertices[i], crown.vertices[i]));
        for (std::size_t i = 0; i < root.vertices.size(); ++i)
            CHECK(same_vec(h.vertices[crown.vertices.size() + i], root.vertices[i]));
        const int off = static_cast<int>(crown.vertices.size());
        for (std::size_t t = 0; t < crown.triangles.size(); ++t)
            CHECK(same_tri(h.triangles[t], crown.triangles[t]));
        for (std::size_t t = 0; t < root.triangles.size(); ++t) {
            const Vec3i got = h.triangles[crown.triangles.size() + t];
            const Vec3i want = root.triangles[t] + Vec3i(off, off, off);
            CHECK(same_tri(got, want));
        }
    }
    SUBCASE("a gap makes the union non-watertight") {
        // open both parts: crown missing a triangle, root as-is (closed) ->
        // the union of a holed sphere and a disjoint closed cylinder has
        // boundary edges from the hole
        TriMesh holed = crown;
        holed.triangles.pop_back();
        TriMesh h = make_hybrid_proxy(holed, root);
        CHECK(boundary_edge_count(h) > 0);
    }
}
