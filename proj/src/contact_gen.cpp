#include "contactforge/contact_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {
const char* kStage = "contact-gen";

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
}  // namespace

void ContactThresholds::check() const {
    if (!(delta_d >= 0.0) || !std::isfinite(delta_d)) throw InputError(kStage, "delta_d must be a finite value >= 0");
    if (!(delta_a > 0.0 && delta_a <= 180.0)) throw InputError(kStage, "delta_a must lie in (0, 180] degrees");
}

double normal_angle_degrees(const Vec3& a, const Vec3& b) {
    const double c = std::clamp(dot(a, b), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

bool is_contact(double distance, const Vec3& vertex_normal, const Vec3& face_normal, const ContactThresholds& th) {
    if (!(distance <= th.delta_d)) return false;
    const double c = std::clamp(dot(vertex_normal, face_normal), -1.0, 1.0);
    return c <= std::cos(deg_to_rad(th.delta_a));
}

ContactVertexSet classify_contact(const BodyMesh& body, const SpatialIndex& index, const SceneMesh& scene,
                                  const ContactThresholds& th, unsigned threads) {
    th.check();
    if (!body.normals || body.normals->size() != body.vertices.size())
        throw InputError(kStage, "body mesh needs one normal per vertex");
    if (scene.face_normals.size() != scene.faces.size() || index.face_count() != scene.faces.size())
        throw InputError(kStage, "scene normals or index do not match the scene");
    for (std::size_t i = 0; i < body.vertices.size(); ++i)
        if (!is_finite(body.vertices[i]) || !is_finite((*body.normals)[i]))
            throw InputError(kStage, "body vertex " + std::to_string(i) + " has non-finite coordinates");
    for (const auto& v : scene.vertices)
        if (!is_finite(v)) throw InputError(kStage, "scene has non-finite coordinates");

    const std::size_t n = body.vertices.size();
    std::vector<std::optional<ContactVertex>> slots(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const ClosestHit hit = index.closest_point(body.vertices[i]);
            if (is_contact(hit.distance, (*body.normals)[i], scene.face_normals[hit.face], th))
                slots[i] = ContactVertex{static_cast<std::uint32_t>(i), hit.distance, hit.face, hit.point};
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n / 256)));
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }

    ContactVertexSet out;
    for (auto& s : slots)
        if (s) out.push_back(*s);
    return out;
}

PartFaces contact_triangles(const BodyMesh& body, const ContactVertexSet& contacts) {
    std::vector<bool> in_contact(body.vertices.size(), false);
    for (const auto& c : contacts) {
        if (c.vertex >= in_contact.size())
            throw InputError(kStage, "contact vertex " + std::to_string(c.vertex) + " is not in the body mesh");
        in_contact[c.vertex] = true;
    }
    PartFaces out;
    for (std::uint32_t f = 0; f < body.faces.size(); ++f) {
        const Face& face = body.faces[f];
        if (!in_contact[face[0]] && !in_contact[face[1]] && !in_contact[face[2]]) continue;
        std::array<int, kNumClasses> votes{};
        for (auto v : face) ++votes[part_id(body.part_of_vertex[v])];
        // max_element returns the first maximum, i.e. the lowest tied id.
        const auto best = std::max_element(votes.begin(), votes.end());
        out[static_cast<Part>(best - votes.begin())].push_back(f);
    }
    return out;
}

void write_contact_vertices(const std::filesystem::path& path, const ContactVertexSet& contacts) {
    std::ofstream out(path);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    char buf[96];
    for (const auto& c : contacts) {
        std::snprintf(buf, sizeof buf, "%u %.9f %u\n", c.vertex, c.distance, c.closest_face);
        out << buf;
    }
}

ContactVertexSet read_contact_vertices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(kStage, "cannot open " + path.string());
    ContactVertexSet out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ContactVertex c;
        if (!(ls >> c.vertex >> c.distance >> c.closest_face))
            throw InputError(kStage, "malformed contact vertex line: " + line);
        out.push_back(c);
    }
    return out;
}

}  // namespace contactforge
