#include "contactforge/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {
const char* kStage = "contact-gen";

// Lexicographic (squared distance, face index) ordering.
bool better(double d2, std::uint32_t face, double best_d2, std::uint32_t best_face) {
    return d2 < best_d2 || (d2 == best_d2 && face < best_face);
}
}  // namespace

SceneMesh make_scene(std::vector<Vec3> vertices, std::vector<Face> faces) {
    SceneMesh scene;
    scene.face_normals.reserve(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (auto idx : faces[f])
            if (idx >= vertices.size())
                throw InputError(kStage, "scene face " + std::to_string(f) + " references missing vertex " +
                                             std::to_string(idx));
        const Vec3& a = vertices[faces[f][0]];
        const Vec3& b = vertices[faces[f][1]];
        const Vec3& c = vertices[faces[f][2]];
        if (!is_finite(a) || !is_finite(b) || !is_finite(c))
            throw InputError(kStage, "scene face " + std::to_string(f) + " has non-finite coordinates");
        const Vec3 n = cross(b - a, c - a);
        if (0.5 * norm(n) < kMinFaceArea)
            throw InputError(kStage, "scene face " + std::to_string(f) + " is degenerate");
        scene.face_normals.push_back(normalized(n));
    }
    scene.vertices = std::move(vertices);
    scene.faces = std::move(faces);
    return scene;
}

SceneMesh load_scene(const std::filesystem::path& obj_path) {
    ObjData obj = read_obj(obj_path);
    return make_scene(std::move(obj.vertices), std::move(obj.faces));
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = dot(ab, ap);
    const double d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp);
    const double d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp);
    const double d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

void Aabb::expand(const Vec3& p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::expand(const Aabb& b) {
    expand(b.lo);
    expand(b.hi);
}

bool Aabb::contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

double Aabb::squared_distance(const Vec3& p) const {
    double d2 = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        const double v = p[axis];
        if (v < lo[axis]) d2 += (lo[axis] - v) * (lo[axis] - v);
        else if (v > hi[axis]) d2 += (v - hi[axis]) * (v - hi[axis]);
    }
    return d2;
}

int Aabb::longest_axis() const {
    const Vec3 e = hi - lo;
    if (e.x >= e.y && e.x >= e.z) return 0;
    return e.y >= e.z ? 1 : 2;
}

SpatialIndex SpatialIndex::build(const SceneMesh& scene, std::size_t leaf_size) {
    if (scene.faces.empty()) throw InputError(kStage, "cannot index an empty scene");
    if (leaf_size < 1) throw InputError(kStage, "leaf size must be >= 1");

    SpatialIndex index;
    index.leaf_size_ = leaf_size;
    const std::size_t n = scene.faces.size();
    index.corners_.reserve(3 * n);
    std::vector<Vec3> centroids(n);
    for (std::size_t f = 0; f < n; ++f) {
        for (auto idx : scene.faces[f]) index.corners_.push_back(scene.vertices.at(idx));
        centroids[f] = (index.corners_[3 * f] + index.corners_[3 * f + 1] + index.corners_[3 * f + 2]) / 3.0;
    }
    index.face_order_.resize(n);
    std::iota(index.face_order_.begin(), index.face_order_.end(), 0u);
    index.nodes_.reserve(2 * n / leaf_size + 1);
    index.build_node(0, static_cast<std::uint32_t>(n), centroids);
    return index;
}

std::uint32_t SpatialIndex::build_node(std::uint32_t begin, std::uint32_t end, std::span<const Vec3> centroids) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i)
        for (int k = 0; k < 3; ++k) box.expand(corners_[3 * face_order_[i] + k]);
    nodes_[id].box = box;

    if (end - begin <= leaf_size_) {
        nodes_[id].first = begin;
        nodes_[id].count = end - begin;
        return id;
    }
    const int axis = box.longest_axis();
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(face_order_.begin() + begin, face_order_.begin() + mid, face_order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const std::uint32_t left = build_node(begin, mid, centroids);
    const std::uint32_t right = build_node(mid, end, centroids);
    nodes_[id].first = left;
    nodes_[id].right = right;
    return id;
}

ClosestHit SpatialIndex::closest_point(const Vec3& p) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::uint32_t best_face = std::numeric_limits<std::uint32_t>::max();
    Vec3 best_point;

    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        // Equal box distance is still visited so lower-index ties are found.
        if (node.box.squared_distance(p) > best_d2) continue;
        if (node.is_leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                const std::uint32_t f = face_order_[i];
                const Vec3 q = closest_point_on_triangle(p, corners_[3 * f], corners_[3 * f + 1], corners_[3 * f + 2]);
                const double d2 = squared_norm(p - q);
                if (better(d2, f, best_d2, best_face)) {
                    best_d2 = d2;
                    best_face = f;
                    best_point = q;
                }
            }
            continue;
        }
        const double dl = nodes_[node.first].box.squared_distance(p);
        const double dr = nodes_[node.right].box.squared_distance(p);
        // Push the farther child first so the nearer one is popped next.
        if (dl <= dr) {
            stack.push_back(node.right);
            stack.push_back(node.first);
        } else {
            stack.push_back(node.first);
            stack.push_back(node.right);
        }
    }
    return {std::sqrt(best_d2), best_face, best_point};
}

ClosestHit brute_force_closest(const SceneMesh& scene, const Vec3& p) {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::uint32_t best_face = std::numeric_limits<std::uint32_t>::max();
    Vec3 best_point;
    for (std::uint32_t f = 0; f < scene.faces.size(); ++f) {
        const auto& face = scene.faces[f];
        const Vec3 q = closest_point_on_triangle(p, scene.vertices[face[0]], scene.vertices[face[1]],
                                                 scene.vertices[face[2]]);
        const double d2 = squared_norm(p - q);
        if (better(d2, f, best_d2, best_face)) {
            best_d2 = d2;
            best_face = f;
            best_point = q;
        }
    }
    return {std::sqrt(best_d2), best_face, best_point};
}

}  // namespace contactforge
