#include "contactforge/body_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {

const char* kStage = "body-model";

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(kStage, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& issue : issues) {
        if (!out.empty()) out += "; ";
        out += issue.message;
    }
    return out;
}

ValidationReport validate(const BodyMesh& mesh) {
    ValidationReport report;
    auto add = [&](ValidationIssue::Kind kind, std::size_t index, std::string msg) {
        report.issues.push_back({kind, index, std::move(msg)});
    };
    const std::size_t n = mesh.vertices.size();
    if (n < 3) add(ValidationIssue::Kind::TooFewVertices, 0, "mesh has " + std::to_string(n) + " vertices (need >= 3)");

    for (std::size_t i = 0; i < n; ++i)
        if (!is_finite(mesh.vertices[i]))
            add(ValidationIssue::Kind::NonFiniteVertex, i, "vertex " + std::to_string(i) + " is not finite");

    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        bool in_range = true;
        for (auto idx : face) {
            if (idx >= n) {
                add(ValidationIssue::Kind::IndexOutOfRange, f,
                    "face " + std::to_string(f) + " references vertex " + std::to_string(idx) + " (vertex count " +
                        std::to_string(n) + ")");
                in_range = false;
                break;
            }
        }
        if (in_range && (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]))
            add(ValidationIssue::Kind::RepeatedIndex, f, "face " + std::to_string(f) + " repeats a vertex index");
    }

    if (mesh.part_of_vertex.size() != n) {
        add(ValidationIssue::Kind::LabelCountMismatch, 0,
            "label count " + std::to_string(mesh.part_of_vertex.size()) + " != vertex count " + std::to_string(n));
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (!is_body_part(part_id(mesh.part_of_vertex[i])))
                add(ValidationIssue::Kind::BackgroundLabel, i, "vertex " + std::to_string(i) + " has no body-part label");
    }

    if (mesh.normals) {
        if (mesh.normals->size() != n) {
            add(ValidationIssue::Kind::NormalCountMismatch, 0,
                "normal count " + std::to_string(mesh.normals->size()) + " != vertex count " + std::to_string(n));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double len = norm((*mesh.normals)[i]);
                if (!(std::abs(len - 1.0) <= 1e-6))
                    add(ValidationIssue::Kind::NonUnitNormal, i, "normal " + std::to_string(i) + " is not unit length");
            }
        }
    }
    return report;
}

void require_valid(const BodyMesh& mesh) {
    const auto report = validate(mesh);
    if (!report.ok()) throw InputError(kStage, "invalid body mesh: " + report.summary());
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * norm(cross(b - a, c - a)); }

std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> vertices, std::span<const Face> faces) {
    std::vector<Vec3> accum(vertices.size());
    std::vector<bool> touched(vertices.size(), false);
    for (const Face& f : faces) {
        if (f[0] >= vertices.size() || f[1] >= vertices.size() || f[2] >= vertices.size())
            throw InputError(kStage, "face index out of range");
        const Vec3& a = vertices[f[0]];
        const Vec3& b = vertices[f[1]];
        const Vec3& c = vertices[f[2]];
        // |cross| = 2 * area, so the raw cross product is already area-weighted.
        const Vec3 weighted = cross(b - a, c - a);
        if (0.5 * norm(weighted) < kMinFaceArea) continue;
        for (auto idx : f) {
            accum[idx] += weighted;
            touched[idx] = true;
        }
    }
    for (std::size_t i = 0; i < accum.size(); ++i) {
        const double len = norm(accum[i]);
        if (!touched[i] || !(len > 0.0))
            throw InputError(kStage, "vertex " + std::to_string(i) + " has no non-degenerate incident face");
        accum[i] = accum[i] / len;
    }
    return accum;
}

std::vector<std::uint32_t> part_vertex_indices(const BodyMesh& mesh, Part part) {
    if (!is_body_part(part_id(part))) throw InputError(kStage, "background is not a body part");
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < mesh.part_of_vertex.size(); ++i)
        if (mesh.part_of_vertex[i] == part) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

ObjData parse_obj(const std::string& text, const std::string& source_name) {
    ObjData data;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw InputError(kStage, source_name + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v" || tag == "vn") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) fail("expected three coordinates");
            (tag == "v" ? data.vertices : data.normals).push_back(p);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ls >> tok) {
                const auto slash = tok.find('/');
                const std::string head = tok.substr(0, slash);
                long value = 0;
                auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
                if (ec != std::errc() || ptr != head.data() + head.size()) fail("bad face index '" + tok + "'");
                idx.push_back(value);
            }
            if (idx.size() != 3) fail("only triangular faces are supported");
            Face face{};
            for (int k = 0; k < 3; ++k) {
                if (idx[k] < 1) fail("face indices are 1-based and positive");
                face[k] = static_cast<std::uint32_t>(idx[k] - 1);
            }
            data.faces.push_back(face);
        }
    }
    return data;
}

ObjData read_obj(const std::filesystem::path& path) { return parse_obj(read_file(path), path.string()); }

void write_obj(const std::filesystem::path& path, std::span<const Vec3> vertices, std::span<const Face> faces,
               std::span<const Vec3> normals) {
    std::ofstream out(path);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    out.precision(17);
    for (const auto& v : vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& n : normals) out << "vn " << n.x << ' ' << n.y << ' ' << n.z << '\n';
    for (const auto& f : faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

std::vector<Part> read_part_labels(const std::filesystem::path& path, std::size_t vertex_count) {
    std::ifstream in(path);
    if (!in) throw InputError(kStage, "cannot open part-label sidecar " + path.string());
    std::vector<Part> parts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int id = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
        if (ec != std::errc() || ptr != line.data() + line.size() || !is_body_part(id))
            throw InputError(kStage, path.string() + ":" + std::to_string(line_no) + ": expected a part id in 1..17");
        parts.push_back(static_cast<Part>(id));
    }
    if (parts.size() != vertex_count)
        throw InputError(kStage, "part-label sidecar has " + std::to_string(parts.size()) + " labels for " +
                                     std::to_string(vertex_count) + " vertices");
    return parts;
}

void write_part_labels(const std::filesystem::path& path, std::span<const Part> parts) {
    std::ofstream out(path);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    for (Part p : parts) out << part_id(p) << '\n';
}

BodyMesh load_body(const std::filesystem::path& obj_path, const std::filesystem::path& labels_path) {
    ObjData obj = read_obj(obj_path);
    BodyMesh mesh;
    mesh.part_of_vertex = read_part_labels(labels_path, obj.vertices.size());
    mesh.vertices = std::move(obj.vertices);
    mesh.faces = std::move(obj.faces);
    if (!obj.normals.empty()) {
        if (obj.normals.size() != mesh.vertices.size())
            throw InputError(kStage, "vn count must match v count when normals are given");
        for (auto& n : obj.normals) n = normalized(n);
        mesh.normals = std::move(obj.normals);
    }
    require_valid(mesh);
    if (!mesh.normals) mesh.normals = compute_vertex_normals(mesh.vertices, mesh.faces);
    return mesh;
}

}  // namespace contactforge
