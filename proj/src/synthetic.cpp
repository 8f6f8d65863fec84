#include "contactforge/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

namespace contactforge::synthetic {

void add_box(BodyMesh& mesh, const Vec3& lo, const Vec3& hi, Part part, int divisions) {
    const int n = divisions;
    std::map<std::array<int, 3>, std::uint32_t> index;
    auto vertex = [&](std::array<int, 3> g) {
        auto [it, inserted] = index.emplace(g, static_cast<std::uint32_t>(mesh.vertices.size()));
        if (inserted) {
            Vec3 p;
            double* coords[3] = {&p.x, &p.y, &p.z};
            for (int a = 0; a < 3; ++a) *coords[a] = lo[a] + (hi[a] - lo[a]) * g[a] / n;
            mesh.vertices.push_back(p);
            mesh.part_of_vertex.push_back(part);
        }
        return it->second;
    };
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;  // e_u x e_v = e_axis
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    auto at = [&](int di, int dj) {
                        std::array<int, 3> g{};
                        g[axis] = side * n;
                        g[u] = i + di;
                        g[v] = j + dj;
                        return vertex(g);
                    };
                    const auto p00 = at(0, 0), p10 = at(1, 0), p11 = at(1, 1), p01 = at(0, 1);
                    if (side == 1) {
                        mesh.faces.push_back({p00, p10, p11});
                        mesh.faces.push_back({p00, p11, p01});
                    } else {
                        mesh.faces.push_back({p00, p11, p10});
                        mesh.faces.push_back({p00, p01, p11});
                    }
                }
            }
        }
    }
}

BodyMesh standing_body(const StandingBodyOptions& o) {
    BodyMesh m;
    const int d = o.divisions;
    const double lz = o.left_sole_height, rz = o.right_sole_height;
    // Person's left is +x.
    add_box(m, {0.05, -0.05, lz}, {0.15, 0.20, lz + 0.08}, Part::L_Foot, d);
    add_box(m, {-0.15, -0.05, rz}, {-0.05, 0.20, rz + 0.08}, Part::R_Foot, d);
    add_box(m, {0.06, -0.04, 0.14}, {0.14, 0.04, 0.50}, Part::L_Calf, d);
    add_box(m, {-0.14, -0.04, 0.14}, {-0.06, 0.04, 0.50}, Part::R_Calf, d);
    add_box(m, {0.05, -0.06, 0.52}, {0.15, 0.06, 0.90}, Part::L_Thigh, d);
    add_box(m, {-0.15, -0.06, 0.52}, {-0.05, 0.06, 0.90}, Part::R_Thigh, d);
    add_box(m, {-0.17, 0.00, 0.92}, {0.17, 0.08, 1.05}, Part::Hip, d);
    add_box(m, {-0.17, -0.09, 0.92}, {0.17, -0.01, 1.05}, Part::Buttocks, d);
    add_box(m, {-0.18, 0.00, 1.07}, {0.18, 0.09, 1.45}, Part::Chest, d);
    add_box(m, {-0.18, -0.10, 1.07}, {0.18, -0.01, 1.45}, Part::Back, d);
    add_box(m, {-0.08, -0.08, 1.50}, {0.08, 0.08, 1.72}, Part::Head, d);
    add_box(m, {0.20, -0.04, 1.17}, {0.28, 0.04, 1.45}, Part::L_UpperArm, d);
    add_box(m, {-0.28, -0.04, 1.17}, {-0.20, 0.04, 1.45}, Part::R_UpperArm, d);
    add_box(m, {0.20, -0.04, 0.88}, {0.28, 0.04, 1.15}, Part::L_ForeArm, d);
    add_box(m, {-0.28, -0.04, 0.88}, {-0.20, 0.04, 1.15}, Part::R_ForeArm, d);
    add_box(m, {0.20, -0.03, 0.72}, {0.27, 0.05, 0.86}, Part::L_Hand, d);
    add_box(m, {-0.27, -0.03, 0.72}, {-0.20, 0.05, 0.86}, Part::R_Hand, d);
    m.normals = compute_vertex_normals(m.vertices, m.faces);
    return m;
}

SceneMesh floor_scene(double half_extent, double height) {
    const double e = half_extent;
    return make_scene({{-e, -e, height}, {e, -e, height}, {e, e, height}, {-e, e, height}}, {{0, 1, 2}, {0, 2, 3}});
}

RigidTransform demo_world_to_camera() {
    const double tilt = 10.0 * std::numbers::pi / 180.0;
    const double c = std::cos(tilt), s = std::sin(tilt);
    const Vec3 position{0.0, 2.6, 1.0};
    const Vec3 right{-1.0, 0.0, 0.0};
    const Vec3 down{0.0, s, -c};
    const Vec3 forward{0.0, -c, -s};
    RigidTransform tr;
    const Vec3 rows[3] = {right, down, forward};
    for (int r = 0; r < 3; ++r) {
        tr.r[r][0] = rows[r].x;
        tr.r[r][1] = rows[r].y;
        tr.r[r][2] = rows[r].z;
    }
    tr.t = -tr.rotate(position);
    return tr;
}

PinholeCamera demo_camera() { return {220.0, 220.0, 160.0, 120.0, 320, 240}; }

void transform_body(BodyMesh& body, const RigidTransform& tr) {
    for (auto& v : body.vertices) v = tr.apply(v);
    if (body.normals)
        for (auto& n : *body.normals) n = tr.rotate(n);
}

SceneMesh transform_scene(const SceneMesh& scene, const RigidTransform& tr) {
    SceneMesh out = scene;
    for (auto& v : out.vertices) v = tr.apply(v);
    for (auto& n : out.face_normals) n = tr.rotate(n);
    return out;
}

std::vector<Sample> toy_dataset() {
    constexpr int kSize = 16;
    struct Spec {
        Part part;
        int x0, y0;
        double intensity;
    };
    const Spec specs[] = {
        {Part::L_Hand, 2, 2, 80.0 / 255.0},
        {Part::R_Foot, 8, 4, 120.0 / 255.0},
        {Part::Head, 4, 7, 160.0 / 255.0},
        {Part::Back, 9, 1, 200.0 / 255.0},
    };
    std::vector<Sample> out;
    for (const auto& s : specs) {
        Sample sample{Tensor(kSize, kSize, 1), ContactMap(kSize, kSize), ContactMap(kSize, kSize)};
        const auto label = static_cast<std::uint8_t>(part_id(s.part));
        for (int y = s.y0; y < s.y0 + 6; ++y)
            for (int x = s.x0; x < s.x0 + 6; ++x) {
                sample.input.at(y, x, 0) = s.intensity;
                sample.parts.set(x, y, label);
                if (y >= s.y0 + 4) sample.contact.set(x, y, label);
            }
        for (int y = s.y0 + 6; y < std::min(kSize, s.y0 + 8); ++y)
            for (int x = std::max(0, s.x0 - 1); x < std::min(kSize, s.x0 + 7); ++x) sample.input.at(y, x, 0) = 1.0;
        out.push_back(std::move(sample));
    }
    return out;
}

GrayImage tensor_to_image(const Tensor& t) {
    GrayImage img{t.width, t.height, std::vector<std::uint8_t>(t.pixels())};
    for (std::size_t i = 0; i < t.pixels(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t.data[i * t.channels], 0.0, 1.0) * 255.0));
    return img;
}

}  // namespace contactforge::synthetic
