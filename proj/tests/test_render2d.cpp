#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "contactforge/error.hpp"
#include "contactforge/render2d.hpp"
#include "contactforge/synthetic.hpp"
#include "oracles.hpp"

using namespace contactforge;

namespace {

PinholeCamera cam64() { return {100.0, 100.0, 32.0, 32.0, 64, 64}; }

BodyMesh triangles(const std::vector<std::array<Vec3, 3>>& tris) {
    BodyMesh b;
    for (const auto& t : tris) {
        const auto base = static_cast<std::uint32_t>(b.vertices.size());
        b.vertices.insert(b.vertices.end(), t.begin(), t.end());
        b.faces.push_back({base, base + 1, base + 2});
    }
    b.part_of_vertex.assign(b.vertices.size(), Part::Head);
    return b;
}

std::size_t labeled(const ContactMap& m) {
    std::size_t n = 0;
    for (auto l : m.labels()) n += l != 0;
    return n;
}

BodyMesh random_soup(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> xy(-0.4, 0.4), z(2.0, 6.0), jitter(-0.25, 0.25);
    std::vector<std::array<Vec3, 3>> tris;
    for (int i = 0; i < count; ++i) {
        const double zc = z(rng);
        const Vec3 c{xy(rng) * zc, xy(rng) * zc, zc};
        std::array<Vec3, 3> t;
        for (auto& v : t) v = c + Vec3{jitter(rng) * zc, jitter(rng) * zc, jitter(rng)};
        tris.push_back(t);
    }
    return triangles(tris);
}

PartFaces random_contact(std::mt19937_64& rng, std::size_t faces) {
    PartFaces pf;
    for (std::uint32_t f = 0; f < faces; ++f)
        if (rng() % 2) pf[*part_from_id(static_cast<int>(1 + rng() % kNumParts))].push_back(f);
    return pf;
}

}  // namespace

TEST(Project, PinholeExample) {
    const auto p = project(cam64(), {0.1, 0.2, 1.0});
    EXPECT_DOUBLE_EQ(p.u, 42.0);
    EXPECT_DOUBLE_EQ(p.v, 52.0);
    EXPECT_DOUBLE_EQ(p.depth, 1.0);
    const PinholeCamera c50{100.0, 100.0, 50.0, 50.0, 100, 100};
    EXPECT_DOUBLE_EQ(project(c50, {0, 0, 2}).u, 50.0);
    EXPECT_DOUBLE_EQ(project(c50, {1, 0, 2}).u, 100.0);
    EXPECT_DOUBLE_EQ(project(c50, {1, 0, 2}).v, 50.0);
    EXPECT_THROW(project(cam64(), {0, 0, -1}), InputError);
    EXPECT_THROW(project(cam64(), {0, 0, 0}), InputError);
}

TEST(Camera, CheckAndJsonRoundTrip) {
    EXPECT_THROW((PinholeCamera{0, 1, 0, 0, 4, 4}.check()), InputError);
    EXPECT_THROW((PinholeCamera{1, 1, 0, 0, 0, 4}.check()), InputError);
    const auto path = std::filesystem::temp_directory_path() / "cf_camera.json";
    const PinholeCamera cam{210.5, 211.25, 160.0, 119.5, 320, 240};
    save_camera(path, cam);
    const auto back = load_camera(path);
    EXPECT_EQ(back.fx, cam.fx);
    EXPECT_EQ(back.fy, cam.fy);
    EXPECT_EQ(back.cx, cam.cx);
    EXPECT_EQ(back.cy, cam.cy);
    EXPECT_EQ(back.width, cam.width);
    EXPECT_EQ(back.height, cam.height);
}

TEST(RasterizeContact, EmptyContactGivesZeroMap) {
    const BodyMesh b = triangles({{Vec3{-1, -1, 3}, Vec3{1, -1, 3}, Vec3{0, 1, 3}}});
    const auto m = rasterize_contact(cam64(), b, {});
    EXPECT_EQ(m.width(), 64);
    EXPECT_EQ(m.height(), 64);
    EXPECT_EQ(labeled(m), 0u);
}

TEST(RasterizeContact, SingleTriangleMatchesRaycast) {
    const BodyMesh b = triangles({{Vec3{-0.3, -0.2, 2}, Vec3{0.35, -0.25, 2.5}, Vec3{0.0513, 0.4071, 3}}});
    const PartFaces pf{{Part::L_Hand, {0}}};
    const auto m = rasterize_contact(cam64(), b, pf);
    EXPECT_GT(labeled(m), 100u);
    EXPECT_EQ(m, oracle::raycast_contact(cam64(), b, pf));
    for (auto l : m.labels()) EXPECT_TRUE(l == 0 || l == part_id(Part::L_Hand));
}

TEST(RasterizeContact, NearerNonContactFaceOccludes) {
    const BodyMesh b = triangles({{Vec3{-1, -1, 3}, Vec3{1, -1, 3}, Vec3{0, 1, 3}},
                                  {Vec3{-2, -2, 2}, Vec3{2, -2, 2}, Vec3{0, 2, 2}}});
    EXPECT_EQ(labeled(rasterize_contact(cam64(), b, {{Part::Back, {0}}})), 0u);
    EXPECT_GT(labeled(rasterize_contact(cam64(), b, {{Part::Back, {1}}})), 0u);
}

TEST(RasterizeContact, SharedEdgeCoveredExactlyOnce) {
    // A quad split along a diagonal that passes through pixel centers.
    const BodyMesh b = triangles({{Vec3{-0.1, -0.1, 1}, Vec3{0.1, -0.1, 1}, Vec3{0.1, 0.1, 1}},
                                  {Vec3{-0.1, -0.1, 1}, Vec3{0.1, 0.1, 1}, Vec3{-0.1, 0.1, 1}}});
    const PinholeCamera cam{100.0, 100.0, 32.5, 32.5, 64, 64};
    const auto first = rasterize_contact(cam, b, {{Part::Head, {0}}});
    const auto second = rasterize_contact(cam, b, {{Part::Chest, {1}}});
    const auto both = rasterize_contact(cam, b, {{Part::Head, {0, 1}}});
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < both.size(); ++i) overlap += first.labels()[i] && second.labels()[i];
    EXPECT_EQ(overlap, 0u);
    EXPECT_EQ(labeled(first) + labeled(second), labeled(both));
    EXPECT_EQ(labeled(both), 400u);
}

TEST(RasterizeContact, FacesBehindCameraAreSkipped) {
    const BodyMesh b = triangles({{Vec3{-1, -1, -1}, Vec3{1, -1, 3}, Vec3{0, 1, 3}}});
    EXPECT_EQ(labeled(rasterize_contact(cam64(), b, {{Part::Head, {0}}})), 0u);
}

TEST(RasterizeContact, RandomSoupsMatchRaycast) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const BodyMesh b = random_soup(rng, 12);
        const PartFaces pf = random_contact(rng, b.faces.size());
        EXPECT_EQ(rasterize_contact(cam64(), b, pf), oracle::raycast_contact(cam64(), b, pf)) << trial;
    }
}

TEST(RasterizeContact, RecedingNeverGainsPixels) {
    // Triangle around the optical axis: moving away shrinks it about the
    // principal point, so the covered pixel set only loses members.
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double dz = 0.0; dz < 3.0; dz += 0.25) {
        const BodyMesh b = triangles({{Vec3{-0.5, -0.4, 1 + dz}, Vec3{0.6, -0.3, 1 + dz}, Vec3{0.1, 0.5, 1 + dz}}});
        const auto n = labeled(rasterize_contact(cam64(), b, {{Part::Hip, {0}}}));
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(RasterizeContact, SceneOccluderHidesContact) {
    const BodyMesh b = triangles({{Vec3{-1, -1, 4}, Vec3{1, -1, 4}, Vec3{0, 1, 4}}});
    const SceneMesh wall = make_scene({{-3, -3, 2}, {3, -3, 2}, {3, 3, 2}, {-3, 3, 2}}, {{0, 1, 2}, {0, 2, 3}});
    const PartFaces pf{{Part::R_Foot, {0}}};
    EXPECT_GT(labeled(rasterize_contact(cam64(), b, pf)), 0u);
    RasterOptions opt;
    opt.occluder = &wall;
    EXPECT_EQ(labeled(rasterize_contact(cam64(), b, pf, opt)), 0u);
}

TEST(RasterizeContact, StandingFigureShowsOnlyFeet) {
    BodyMesh body = synthetic::standing_body();
    const SceneMesh floor = synthetic::floor_scene();
    const auto cv = classify_contact(body, SpatialIndex::build(floor), floor);
    const auto pf = contact_triangles(body, cv);
    synthetic::transform_body(body, synthetic::demo_world_to_camera());
    const auto m = rasterize_contact(synthetic::demo_camera(), body, pf);
    std::set<int> seen;
    for (auto l : m.labels())
        if (l) seen.insert(l);
    EXPECT_EQ(seen, (std::set<int>{part_id(Part::L_Foot), part_id(Part::R_Foot)}));
}

TEST(ContactMapIo, PgmAndPng) {
    ContactMap m(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) m.set(x, y, static_cast<std::uint8_t>((x + 5 * y) % kNumClasses));
    const auto dir = std::filesystem::temp_directory_path();
    write_contact_map_pgm(dir / "cf_map.pgm", m);
    EXPECT_EQ(read_contact_map_pgm(dir / "cf_map.pgm"), m);
    write_contact_map_png(dir / "cf_map.png", m);
    std::ifstream in(dir / "cf_map.png", std::ios::binary);
    char sig[8] = {};
    in.read(sig, 8);
    EXPECT_EQ(std::string(sig + 1, 3), "PNG");
    EXPECT_THROW(m.set(0, 0, 18), InputError);
    write_pgm(dir / "cf_bad.pgm", 1, 1, {200});
    EXPECT_THROW(read_contact_map_pgm(dir / "cf_bad.pgm"), InputError);
}
