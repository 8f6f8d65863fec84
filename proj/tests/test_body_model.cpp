#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "contactforge/body_model.hpp"
#include "contactforge/error.hpp"
#include "contactforge/synthetic.hpp"

using namespace contactforge;

namespace {

BodyMesh quad() {
    BodyMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    m.part_of_vertex.assign(4, Part::Chest);
    return m;
}

bool has_issue(const ValidationReport& r, ValidationIssue::Kind kind, std::size_t index) {
    for (const auto& i : r.issues)
        if (i.kind == kind && i.index == index) return true;
    return false;
}

}  // namespace

TEST(PartLabel, SeventeenPartsFixedBijection) {
    EXPECT_EQ(kNumParts, 17);
    EXPECT_EQ(kPartNames.size(), 18u);
    for (int id = 1; id <= kNumParts; ++id) {
        const auto p = part_from_id(id);
        ASSERT_TRUE(p);
        EXPECT_EQ(part_from_name(part_name(*p)), p);
    }
    EXPECT_EQ(part_name(Part::Head), "Head");
    EXPECT_EQ(part_name(Part::L_Hand), "L_Hand");
    EXPECT_EQ(part_id(Part::R_Hand), 8);
    EXPECT_EQ(part_id(Part::R_Foot), 17);
    EXPECT_FALSE(part_from_id(18));
    EXPECT_FALSE(is_body_part(0));
}

TEST(VertexNormals, FlatSquareFacesUp) {
    const BodyMesh m = quad();
    for (const auto& n : compute_vertex_normals(m.vertices, m.faces)) {
        EXPECT_DOUBLE_EQ(n.x, 0.0);
        EXPECT_DOUBLE_EQ(n.y, 0.0);
        EXPECT_DOUBLE_EQ(n.z, 1.0);
    }
}

TEST(VertexNormals, CubeCornerIsDiagonal) {
    // Corner (1,1,1) of the unit cube with its three incident unit squares,
    // each split into two triangles through the corner, wound outward.
    std::vector<Vec3> v = {{1, 1, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
    std::vector<Face> f = {{0, 1, 4}, {0, 4, 2},   // z = 1
                           {0, 5, 1}, {0, 3, 5},   // y = 1
                           {0, 2, 6}, {0, 6, 3}};  // x = 1
    const auto n = compute_vertex_normals(v, f)[0];
    const double s = 1.0 / std::sqrt(3.0);
    EXPECT_NEAR(n.x, s, 1e-12);
    EXPECT_NEAR(n.y, s, 1e-12);
    EXPECT_NEAR(n.z, s, 1e-12);
}

TEST(VertexNormals, ZeroAreaFaceContributesNothing) {
    BodyMesh m = quad();
    const auto base = compute_vertex_normals(m.vertices, m.faces);
    m.vertices.push_back({0.5, 0.5, 0.0});
    m.faces.push_back({0, 2, 4});  // collinear: zero area
    m.faces.push_back({4, 1, 2});  // keeps vertex 4 touched by a real face
    auto with = compute_vertex_normals(m.vertices, m.faces);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(with[i], base[i]);
}

TEST(VertexNormals, IsolatedVertexIsNamed) {
    BodyMesh m = quad();
    m.vertices.push_back({5, 5, 5});
    try {
        compute_vertex_normals(m.vertices, m.faces);
        FAIL() << "expected an error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("vertex 4"), std::string::npos);
    }
}

TEST(VertexNormals, UnitLengthAndRotationCovariant) {
    const BodyMesh body = synthetic::standing_body();
    const auto normals = compute_vertex_normals(body.vertices, body.faces);
    for (const auto& n : normals) EXPECT_LE(std::abs(norm(n) - 1.0), 1e-6);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto tr = RigidTransform::from_axis_angle({u(rng), u(rng), u(rng)}, 3.0 * u(rng), {u(rng), u(rng), u(rng)});
        std::vector<Vec3> moved;
        for (const auto& v : body.vertices) moved.push_back(tr.apply(v));
        const auto rotated = compute_vertex_normals(moved, body.faces);
        for (std::size_t i = 0; i < normals.size(); ++i) EXPECT_LE(norm(rotated[i] - tr.rotate(normals[i])), 1e-6);
    }
}

TEST(PartVertexIndices, Examples) {
    BodyMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    m.part_of_vertex = {Part::Head, Part::Head, Part::L_Hand};
    EXPECT_EQ(part_vertex_indices(m, Part::Head), (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(part_vertex_indices(m, Part::L_Hand), (std::vector<std::uint32_t>{2}));
    EXPECT_TRUE(part_vertex_indices(m, Part::Buttocks).empty());
    EXPECT_THROW(part_vertex_indices(m, Part::Background), InputError);
}

TEST(PartVertexIndices, PartitionCoversAllVertices) {
    const BodyMesh body = synthetic::standing_body();
    std::vector<int> seen(body.vertices.size(), 0);
    std::size_t total = 0;
    for (int id = 1; id <= kNumParts; ++id) {
        const auto idx = part_vertex_indices(body, static_cast<Part>(id));
        total += idx.size();
        for (auto v : idx) ++seen[v];
    }
    EXPECT_EQ(total, body.vertices.size());
    for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Validate, ReportsEachViolation) {
    EXPECT_TRUE(validate(quad()).ok());

    BodyMesh bad = quad();
    bad.faces.push_back({0, 1, 4});
    EXPECT_TRUE(has_issue(validate(bad), ValidationIssue::Kind::IndexOutOfRange, 2));

    bad = quad();
    bad.faces.push_back({0, 0, 1});
    EXPECT_TRUE(has_issue(validate(bad), ValidationIssue::Kind::RepeatedIndex, 2));

    bad = quad();
    bad.part_of_vertex[3] = Part::Background;
    EXPECT_TRUE(has_issue(validate(bad), ValidationIssue::Kind::BackgroundLabel, 3));

    bad = quad();
    bad.part_of_vertex.pop_back();
    EXPECT_TRUE(has_issue(validate(bad), ValidationIssue::Kind::LabelCountMismatch, 0));

    bad = quad();
    bad.normals = std::vector<Vec3>(4, Vec3{0, 0, 2});
    EXPECT_TRUE(has_issue(validate(bad), ValidationIssue::Kind::NonUnitNormal, 0));
}

TEST(ObjIo, ParsesSubsetAndRejectsQuads) {
    const auto obj = parse_obj("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvn 0 0 1\nvn 0 0 1\nf 1//1 2//2 3//3\n");
    EXPECT_EQ(obj.vertices.size(), 3u);
    EXPECT_EQ(obj.normals.size(), 3u);
    ASSERT_EQ(obj.faces.size(), 1u);
    EXPECT_EQ(obj.faces[0], (Face{0, 1, 2}));
    EXPECT_THROW(parse_obj("v 0 0 0\nf 1 2 3 4\n"), InputError);
    EXPECT_THROW(parse_obj("v 0 0\n"), InputError);
}

TEST(ObjIo, LoadBodyWithSidecar) {
    const auto dir = std::filesystem::temp_directory_path() / "cf_body_model_test";
    std::filesystem::create_directories(dir);
    const BodyMesh body = synthetic::standing_body();
    write_obj(dir / "b.obj", body.vertices, body.faces);
    write_part_labels(dir / "b.parts", body.part_of_vertex);
    const BodyMesh loaded = load_body(dir / "b.obj", dir / "b.parts");
    EXPECT_EQ(loaded.part_of_vertex, body.part_of_vertex);
    EXPECT_EQ(loaded.faces, body.faces);
    ASSERT_TRUE(loaded.normals);

    std::ofstream(dir / "short.parts") << "1\n2\n";
    EXPECT_THROW(read_part_labels(dir / "short.parts", body.vertices.size()), InputError);
    std::ofstream(dir / "zero.parts") << "0\n";
    EXPECT_THROW(read_part_labels(dir / "zero.parts", 1), InputError);
    EXPECT_THROW(load_body(dir / "b.obj", dir / "missing.parts"), InputError);
}
