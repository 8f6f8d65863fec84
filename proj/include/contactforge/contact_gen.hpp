#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "contactforge/body_model.hpp"
#include "contactforge/spatial_index.hpp"

namespace contactforge {

struct ContactThresholds {
    double delta_d = 0.07;   // meters
    double delta_a = 110.0;  // degrees

    void check() const;
};

struct ContactVertex {
    std::uint32_t vertex = 0;
    double distance = 0.0;
    std::uint32_t closest_face = 0;
    Vec3 closest_point;
};

// Sorted by vertex index, no duplicates.
using ContactVertexSet = std::vector<ContactVertex>;

// Angle in degrees between two unit vectors, arccos of the clamped dot product.
double normal_angle_degrees(const Vec3& a, const Vec3& b);

// True iff distance <= delta_d and angle(vertex_normal, face_normal) >= delta_a.
// The angle test is evaluated as dot <= cos(delta_a), which is the same
// predicate without the arccos round trip.
bool is_contact(double distance, const Vec3& vertex_normal, const Vec3& face_normal, const ContactThresholds& th);

// `threads` == 0 selects hardware concurrency. Output does not depend on it.
ContactVertexSet classify_contact(const BodyMesh& body, const SpatialIndex& index, const SceneMesh& scene,
                                  const ContactThresholds& th = {}, unsigned threads = 0);

// Body faces touching at least one contact vertex, filed by majority vertex
// label (ties go to the lowest part id). Faces are ascending within a part.
using PartFaces = std::map<Part, std::vector<std::uint32_t>>;
PartFaces contact_triangles(const BodyMesh& body, const ContactVertexSet& contacts);

// Lines "vertex_index distance face_index".
void write_contact_vertices(const std::filesystem::path& path, const ContactVertexSet& contacts);
ContactVertexSet read_contact_vertices(const std::filesystem::path& path);

}  // namespace contactforge
