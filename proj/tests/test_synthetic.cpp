#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "toothfuse/synthetic.hpp"

using namespace toothfuse;

namespace {

SyntheticToothSpec fast_spec(std::uint64_t seed) {
    SyntheticToothSpec spec;
    spec.grid_res = 64;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("spec validation rejects bad parameters") {
    CHECK_NOTHROW(fast_spec(1).validate());

    SyntheticToothSpec s = fast_spec(1);
    s.root_count = 3;
    CHECK_THROWS_AS(s.validate(), Error);

    s = fast_spec(1);
    s.crown_semi_axes.y() = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);

    s = fast_spec(1);
    s.noise_sigma = -0.1;
    CHECK_THROWS_AS(s.validate(), Error);

    s = fast_spec(1);
    s.decimation_ratio = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);

    s = fast_spec(1);
    s.grid_res = 8;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("ground truth is watertight with positive volume") {
    const SyntheticTooth tooth = synth_tooth(fast_spec(3));
    CHECK(is_watertight(tooth.ground_truth));
    CHECK(boundary_edge_count(tooth.ground_truth) == 0);
    CHECK(signed_volume(tooth.ground_truth) > 0.0);
    CHECK(tooth.ground_truth.vertices.size() > 1000);
}

TEST_CASE("crown is the ground-truth submesh above the gingival plane") {
    SyntheticToothSpec spec = fast_spec(4);
    const SyntheticTooth tooth = synth_tooth(spec);
    REQUIRE(!tooth.crown.triangles.empty());
    for (const Vec3& v : tooth.crown.vertices) CHECK(v.z() > spec.gingival_z);

    // crown vertices are ground-truth vertices, not resampled
    std::size_t matched = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(tooth.crown.vertices.size(), 50); ++i) {
        for (const Vec3& g : tooth.ground_truth.vertices)
            if (tt::same_vec(tooth.crown.vertices[i], g)) {
                ++matched;
                break;
            }
    }
    CHECK(matched == std::min<std::size_t>(tooth.crown.vertices.size(), 50));

    // the crown covers a strict subset of the tooth
    CHECK(tooth.crown.triangles.size() < tooth.ground_truth.triangles.size());
}

TEST_CASE("clean settings reproduce the ground truth exactly") {
    SyntheticToothSpec spec = fast_spec(5);
    spec.noise_sigma = 0.0;
    spec.decimation_ratio = 1.0;
    spec.max_rotation_deg = 0.0;
    spec.max_translation_mm = 0.0;
    const SyntheticTooth tooth = synth_tooth(spec);

    CHECK(tt::rotation_error_deg(tooth.true_T.rotation, Mat3::Identity()) < 1e-12);
    CHECK(tooth.true_T.translation.norm() < 1e-12);
    REQUIRE(tooth.degraded_full.vertices.size() == tooth.ground_truth.vertices.size());
    REQUIRE(tooth.degraded_full.triangles.size() == tooth.ground_truth.triangles.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < tooth.degraded_full.vertices.size(); ++i)
        worst = std::max(worst,
                         (tooth.degraded_full.vertices[i] - tooth.ground_truth.vertices[i]).norm());
    CHECK(worst < 1e-9);
}

TEST_CASE("degradation decimates, noises, and displaces") {
    SyntheticToothSpec spec = fast_spec(6);
    const SyntheticTooth tooth = synth_tooth(spec);

    CHECK(tooth.degraded_full.triangles.size() < tooth.ground_truth.triangles.size());

    CHECK(tt::rotation_error_deg(tooth.true_T.rotation, Mat3::Identity()) <=
          spec.max_rotation_deg + 1e-9);
    CHECK(tooth.true_T.translation.norm() <= spec.max_translation_mm + 1e-9);

    // undoing true_T lands the degraded mesh back on the ground truth
    TriMesh aligned = tooth.degraded_full;
    for (Vec3& v : aligned.vertices) v = tooth.true_T.apply(v);
    TriangleBvh bvh(tooth.ground_truth);
    double worst = 0.0;
    for (std::size_t i = 0; i < aligned.vertices.size(); i += 7)
        worst = std::max(worst, bvh.closest(aligned.vertices[i]).distance);
    CHECK(worst < 1.5);  // noise sigma 0.1 plus clustering centroid shift
    CHECK(worst > 1e-6);
}

TEST_CASE("same seed reproduces the case bitwise") {
    const SyntheticTooth a = synth_tooth(fast_spec(7));
    const SyntheticTooth b = synth_tooth(fast_spec(7));
    REQUIRE(a.ground_truth.vertices.size() == b.ground_truth.vertices.size());
    for (std::size_t i = 0; i < a.ground_truth.vertices.size(); ++i)
        REQUIRE(tt::same_vec(a.ground_truth.vertices[i], b.ground_truth.vertices[i]));
    REQUIRE(a.degraded_full.vertices.size() == b.degraded_full.vertices.size());
    for (std::size_t i = 0; i < a.degraded_full.vertices.size(); ++i)
        REQUIRE(tt::same_vec(a.degraded_full.vertices[i], b.degraded_full.vertices[i]));
    CHECK((a.true_T.rotation.array() == b.true_T.rotation.array()).all());
    CHECK(tt::same_vec(a.true_T.translation, b.true_T.translation));
}

TEST_CASE("different seeds give different shapes") {
    const SyntheticTooth a = synth_tooth(fast_spec(8));
    const SyntheticTooth b = synth_tooth(fast_spec(9));
    const bool differs = a.ground_truth.vertices.size() != b.ground_truth.vertices.size() ||
                         !tt::same_vec(a.ground_truth.vertices[0], b.ground_truth.vertices[0]);
    CHECK(differs);
    CHECK(a.ground_truth.bounds().diagonal() != b.ground_truth.bounds().diagonal());
}

TEST_CASE("single-root teeth synthesize cleanly") {
    SyntheticToothSpec spec = fast_spec(10);
    spec.root_count = 1;
    const SyntheticTooth tooth = synth_tooth(spec);
    CHECK(is_watertight(tooth.ground_truth));
    // lowest point sits near the root tip, well below the gingival plane
    double min_z = 1e30;
    for (const Vec3& v : tooth.ground_truth.vertices) min_z = std::min(min_z, v.z());
    CHECK(min_z < -0.5 * spec.root_length);
}
