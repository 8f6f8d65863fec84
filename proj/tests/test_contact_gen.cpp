#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "contactforge/contact_gen.hpp"
#include "contactforge/error.hpp"
#include "contactforge/synthetic.hpp"

using namespace contactforge;

namespace {

// One tiny triangle per probe vertex so each vertex has an explicit normal.
BodyMesh probe_body(const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
    BodyMesh b;
    for (const auto& p : points) {
        const auto base = static_cast<std::uint32_t>(b.vertices.size());
        b.vertices.insert(b.vertices.end(), {p, p + Vec3{1e-3, 0, 0}, p + Vec3{0, 1e-3, 0}});
        b.faces.push_back({base, base + 1, base + 2});
    }
    b.part_of_vertex.assign(b.vertices.size(), Part::L_Foot);
    std::vector<Vec3> n;
    for (const auto& nn : normals) n.insert(n.end(), {nn, nn, nn});
    b.normals = n;
    return b;
}

std::vector<std::uint32_t> indices(const ContactVertexSet& s) {
    std::vector<std::uint32_t> out;
    for (const auto& c : s) out.push_back(c.vertex);
    return out;
}

ContactVertexSet classify(const BodyMesh& body, const SceneMesh& scene, const ContactThresholds& th = {},
                          unsigned threads = 1) {
    return classify_contact(body, SpatialIndex::build(scene, 4), scene, th, threads);
}

}  // namespace

TEST(ContactThresholds, DefaultsAreTheEmpiricalValues) {
    const ContactThresholds th;
    EXPECT_EQ(th.delta_d, 0.07);
    EXPECT_EQ(th.delta_a, 110.0);
    EXPECT_THROW((ContactThresholds{0.07, 0.0}.check()), InputError);
    EXPECT_THROW((ContactThresholds{0.07, 181.0}.check()), InputError);
    EXPECT_THROW((ContactThresholds{-0.01, 110.0}.check()), InputError);
}

TEST(ClassifyContact, SoleAboveFloor) {
    const SceneMesh floor = synthetic::floor_scene(2.0);
    const Vec3 down{0, 0, -1};
    EXPECT_EQ(indices(classify(probe_body({{0.3, 0.2, 0.05}}, {down}), floor)).front(), 0u);
    const auto far = classify(probe_body({{0.3, 0.2, 0.08}}, {down}), floor);
    for (const auto& c : far) EXPECT_NE(c.vertex, 0u);
}

TEST(ClassifyContact, WallWithParallelNormalIsNotContact) {
    // Wall x = 0 facing +x; vertex 2 cm in front with normal also +x.
    const SceneMesh wall = make_scene({{0, -1, -1}, {0, 1, -1}, {0, 1, 1}, {0, -1, 1}}, {{0, 1, 2}, {0, 2, 3}});
    ASSERT_NEAR(wall.face_normals[0].x, 1.0, 1e-15);
    const auto set = classify(probe_body({{0.02, 0, 0}}, {{1, 0, 0}}), wall);
    EXPECT_TRUE(set.empty());
    const auto opposed = classify(probe_body({{0.02, 0, 0}}, {{-1, 0, 0}}), wall);
    ASSERT_FALSE(opposed.empty());
    EXPECT_EQ(opposed.front().vertex, 0u);
    EXPECT_NEAR(opposed.front().distance, 0.02, 1e-15);
}

TEST(ClassifyContact, BothThresholdsAreInclusive) {
    // Vertex straight above a floor corner so the closest point is exact.
    const SceneMesh floor = make_scene({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const double rad = 110.0 * std::numbers::pi / 180.0;
    const Vec3 n{std::sin(rad), 0.0, std::cos(rad)};
    BodyMesh b = probe_body({{0, 0, 0.07}}, {n});
    const auto set = classify(b, floor);
    ASSERT_FALSE(set.empty());
    EXPECT_EQ(set.front().vertex, 0u);
    EXPECT_EQ(set.front().distance, 0.07);

    ContactThresholds tighter;
    tighter.delta_d = std::nextafter(0.07, 0.0);
    for (const auto& c : classify(b, floor, tighter)) EXPECT_NE(c.vertex, 0u);
    tighter = {};
    tighter.delta_a = 110.0 + 1e-9;
    for (const auto& c : classify(b, floor, tighter)) EXPECT_NE(c.vertex, 0u);
}

TEST(ClassifyContact, AngleHelper) {
    EXPECT_DOUBLE_EQ(normal_angle_degrees({0, 0, 1}, {0, 0, -1}), 180.0);
    EXPECT_DOUBLE_EQ(normal_angle_degrees({0, 0, 1}, {0, 0, 1}), 0.0);
    EXPECT_NEAR(normal_angle_degrees({1, 0, 0}, {0, 1, 0}), 90.0, 1e-12);
}

TEST(ClassifyContact, Errors) {
    const SceneMesh floor = synthetic::floor_scene();
    BodyMesh b = probe_body({{0, 0, 0.01}}, {{0, 0, -1}});
    b.normals.reset();
    EXPECT_THROW(classify(b, floor), InputError);
    b = probe_body({{0, 0, std::numeric_limits<double>::quiet_NaN()}}, {{0, 0, -1}});
    EXPECT_THROW(classify(b, floor), InputError);
}

TEST(ClassifyContact, ThresholdMonotonicity) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0), h(-0.02, 0.2);
    std::vector<Vec3> pts, normals;
    for (int i = 0; i < 400; ++i) {
        pts.push_back({u(rng), u(rng), h(rng)});
        normals.push_back(normalized(Vec3{u(rng), u(rng), u(rng)}));
    }
    const BodyMesh body = probe_body(pts, normals);
    const SceneMesh floor = synthetic::floor_scene(2.0);
    auto count_in = [](const ContactVertexSet& small, const ContactVertexSet& big) {
        const auto a = indices(small), b = indices(big);
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    ContactVertexSet prev;
    for (double d : {0.01, 0.03, 0.07, 0.1, 0.2}) {
        const auto cur = classify(body, floor, {d, 110.0});
        EXPECT_TRUE(count_in(prev, cur)) << d;
        prev = cur;
    }
    prev = classify(body, floor, {0.2, 10.0});
    for (double a : {45.0, 90.0, 110.0, 150.0, 180.0}) {
        const auto cur = classify(body, floor, {0.2, a});
        EXPECT_TRUE(count_in(cur, prev)) << a;
        prev = cur;
    }
}

TEST(ClassifyContact, IndependentOfThreadCount) {
    const BodyMesh body = synthetic::standing_body();
    const SceneMesh floor = synthetic::floor_scene();
    const auto one = classify(body, floor, {}, 1);
    for (unsigned t : {2u, 3u, 8u}) {
        const auto many = classify(body, floor, {}, t);
        ASSERT_EQ(many.size(), one.size());
        for (std::size_t i = 0; i < one.size(); ++i) {
            EXPECT_EQ(many[i].vertex, one[i].vertex);
            EXPECT_EQ(many[i].distance, one[i].distance);
            EXPECT_EQ(many[i].closest_face, one[i].closest_face);
        }
    }
    for (std::size_t i = 1; i < one.size(); ++i) EXPECT_LT(one[i - 1].vertex, one[i].vertex);
}

TEST(ClassifyContact, RigidInvariance) {
    const BodyMesh body = synthetic::standing_body();
    const SceneMesh floor = synthetic::floor_scene();
    const auto base = indices(classify(body, floor));
    ASSERT_FALSE(base.empty());
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const auto tr = RigidTransform::from_axis_angle({u(rng), u(rng), u(rng)}, 3.0 * u(rng), {5 * u(rng), 5 * u(rng), 5 * u(rng)});
        BodyMesh moved = body;
        synthetic::transform_body(moved, tr);
        EXPECT_EQ(indices(classify(moved, synthetic::transform_scene(floor, tr))), base);
    }
}

TEST(ContactTriangles, MajorityAndTieRules) {
    BodyMesh b;
    b.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    b.faces = {{0, 1, 2}};
    b.part_of_vertex = {Part::L_Foot, Part::L_Foot, Part::L_Calf};
    EXPECT_TRUE(contact_triangles(b, {}).empty());

    ContactVertexSet cv{{0, 0.0, 0, {}}};
    auto filed = contact_triangles(b, cv);
    ASSERT_EQ(filed.size(), 1u);
    EXPECT_EQ(filed.begin()->first, Part::L_Foot);

    b.part_of_vertex = {Part::L_Hand, Part::R_Hand, Part::Head};
    cv = {{1, 0.0, 0, {}}};
    filed = contact_triangles(b, cv);
    ASSERT_EQ(filed.size(), 1u);
    EXPECT_EQ(filed.begin()->first, Part::Head);
    EXPECT_EQ(filed.begin()->second, std::vector<std::uint32_t>{0});
}

TEST(ContactTriangles, EachFaceFiledOnce) {
    const BodyMesh body = synthetic::standing_body();
    const auto cv = classify(body, synthetic::floor_scene());
    const auto filed = contact_triangles(body, cv);
    std::vector<int> seen(body.faces.size(), 0);
    for (const auto& [part, faces] : filed)
        for (auto f : faces) ++seen[f];
    std::vector<bool> contact(body.vertices.size(), false);
    for (const auto& c : cv) contact[c.vertex] = true;
    for (std::size_t f = 0; f < body.faces.size(); ++f) {
        const auto& face = body.faces[f];
        const bool touches = contact[face[0]] || contact[face[1]] || contact[face[2]];
        EXPECT_EQ(seen[f], touches ? 1 : 0);
    }
}

TEST(ContactVertexFile, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "cf_cv_roundtrip.txt";
    const ContactVertexSet cv{{3, 0.0125, 7, {}}, {9, 0.06, 1, {}}};
    write_contact_vertices(path, cv);
    const auto back = read_contact_vertices(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].vertex, 9u);
    EXPECT_EQ(back[1].closest_face, 1u);
    EXPECT_DOUBLE_EQ(back[0].distance, 0.0125);
}
