#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "contactforge/part_label.hpp"
#include "contactforge/vec3.hpp"

namespace contactforge {

using Face = std::array<std::uint32_t, 3>;

// Faces below this area (m^2) are treated as degenerate.
inline constexpr double kMinFaceArea = 1e-12;

// Posed human surface. Part labels live on vertices and are never background.
struct BodyMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Part> part_of_vertex;
    std::optional<std::vector<Vec3>> normals;
};

struct ValidationIssue {
    enum class Kind {
        TooFewVertices,
        NonFiniteVertex,
        IndexOutOfRange,
        RepeatedIndex,
        LabelCountMismatch,
        BackgroundLabel,
        NormalCountMismatch,
        NonUnitNormal,
    };
    Kind kind;
    std::size_t index;  // face, vertex, or 0 for mesh-level issues
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    std::string summary() const;
};

ValidationReport validate(const BodyMesh& mesh);

// Throws InputError(stage "body-model") with the report summary if invalid.
void require_valid(const BodyMesh& mesh);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Area-weighted average of incident face normals, normalized. Faces with
// area below kMinFaceArea contribute nothing; a vertex without any
// non-degenerate incident face is an error.
std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> vertices, std::span<const Face> faces);

// Ascending vertex indices labeled `part`. Background is rejected.
std::vector<std::uint32_t> part_vertex_indices(const BodyMesh& mesh, Part part);

// OBJ subset: v, vn, f (1-based, first index of each slash group). '#' lines
// and unknown records are ignored.
struct ObjData {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
    std::vector<Face> faces;
};

ObjData read_obj(const std::filesystem::path& path);
ObjData parse_obj(const std::string& text, const std::string& source_name = "<memory>");
void write_obj(const std::filesystem::path& path, std::span<const Vec3> vertices, std::span<const Face> faces,
               std::span<const Vec3> normals = {});

// One integer 1..17 per line; line count must equal vertex_count.
std::vector<Part> read_part_labels(const std::filesystem::path& path, std::size_t vertex_count);
void write_part_labels(const std::filesystem::path& path, std::span<const Part> parts);

// Loads mesh + sidecar. Uses `vn` records when present, otherwise computes
// area-weighted normals. Validates before returning.
BodyMesh load_body(const std::filesystem::path& obj_path, const std::filesystem::path& labels_path);

}  // namespace contactforge
