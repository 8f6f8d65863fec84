#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "contactforge/body_model.hpp"
#include "contactforge/vec3.hpp"

namespace contactforge {

// Static scene triangles with one unit normal per face (from winding order).
struct SceneMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Vec3> face_normals;
};

// Computes face normals; rejects out-of-range indices and faces with area
// below kMinFaceArea.
SceneMesh make_scene(std::vector<Vec3> vertices, std::vector<Face> faces);
SceneMesh load_scene(const std::filesystem::path& obj_path);

// Closest point to `p` on triangle (a, b, c), resolving the vertex, edge and
// face Voronoi regions explicitly.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestHit {
    double distance = 0.0;
    std::uint32_t face = 0;
    Vec3 point;
};

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p);
    void expand(const Aabb& b);
    bool contains(const Vec3& p) const;
    double squared_distance(const Vec3& p) const;
    int longest_axis() const;
};

// Axis-aligned bounding-volume hierarchy over scene faces, median split on
// the longest axis of each node's box. Immutable after build.
class SpatialIndex {
  public:
    struct Node {
        Aabb box;
        std::uint32_t first = 0;  // leaf: offset into face order; inner: left child
        std::uint32_t count = 0;  // leaf: face count; inner: 0
        std::uint32_t right = 0;  // inner: right child
        bool is_leaf() const { return count > 0; }
    };

    static SpatialIndex build(const SceneMesh& scene, std::size_t leaf_size = 8);

    // Minimum point-to-triangle distance over all faces. Equidistant faces
    // resolve to the lowest face index.
    ClosestHit closest_point(const Vec3& p) const;

    std::size_t face_count() const { return face_order_.size(); }
    std::size_t leaf_size() const { return leaf_size_; }
    std::span<const Node> nodes() const { return nodes_; }
    // Face indices stored in leaves, concatenated in leaf order.
    std::span<const std::uint32_t> face_order() const { return face_order_; }
    // Corner positions of face `f` (original scene index).
    std::span<const Vec3, 3> triangle(std::uint32_t f) const {
        return std::span<const Vec3, 3>(corners_.data() + 3 * static_cast<std::size_t>(f), 3);
    }

  private:
    std::uint32_t build_node(std::uint32_t begin, std::uint32_t end, std::span<const Vec3> centroids);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> face_order_;
    std::vector<Vec3> corners_;  // 3 per face, original face order
    std::size_t leaf_size_ = 1;
};

// Linear scan over every face; same tie rule as SpatialIndex.
ClosestHit brute_force_closest(const SceneMesh& scene, const Vec3& p);

}  // namespace contactforge
