#include "contactforge/render2d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {

const char* kStage = "render2d";

struct ScreenVertex {
    double u, v, z;
};

double edge(const ScreenVertex& a, const ScreenVertex& b, double pu, double pv) {
    return (b.u - a.u) * (pv - a.v) - (b.v - a.v) * (pu - a.u);
}

// With the winding normalized to positive area (y down), top edges run
// rightwards and left edges run upwards.
bool owns_boundary(const ScreenVertex& a, const ScreenVertex& b) {
    const double du = b.u - a.u, dv = b.v - a.v;
    return dv < 0.0 || (dv == 0.0 && du > 0.0);
}

class DepthBuffer {
  public:
    DepthBuffer(const PinholeCamera& cam, ContactMap& out)
        : cam_(cam), out_(out), depth_(out.size(), std::numeric_limits<double>::infinity()) {}

    void draw(const Vec3& p0, const Vec3& p1, const Vec3& p2, std::uint8_t label) {
        if (p0.z <= kMinDepth || p1.z <= kMinDepth || p2.z <= kMinDepth) return;
        ScreenVertex v0 = to_screen(p0), v1 = to_screen(p1), v2 = to_screen(p2);
        double area = edge(v0, v1, v2.u, v2.v);
        if (area == 0.0 || !std::isfinite(area)) return;
        if (area < 0.0) {
            std::swap(v1, v2);
            area = -area;
        }
        const double umin = std::min({v0.u, v1.u, v2.u}), umax = std::max({v0.u, v1.u, v2.u});
        const double vmin = std::min({v0.v, v1.v, v2.v}), vmax = std::max({v0.v, v1.v, v2.v});
        // Pixel x covers [x, x+1); its sample sits at x + 0.5.
        const int x0 = std::max(0, static_cast<int>(std::ceil(umin - 0.5)));
        const int x1 = std::min(cam_.width - 1, static_cast<int>(std::floor(umax - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(vmin - 0.5)));
        const int y1 = std::min(cam_.height - 1, static_cast<int>(std::floor(vmax - 0.5)));
        const bool own0 = owns_boundary(v1, v2), own1 = owns_boundary(v2, v0), own2 = owns_boundary(v0, v1);

        for (int y = y0; y <= y1; ++y) {
            const double pv = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double pu = x + 0.5;
                const double w0 = edge(v1, v2, pu, pv);
                const double w1 = edge(v2, v0, pu, pv);
                const double w2 = edge(v0, v1, pu, pv);
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                if ((w0 == 0.0 && !own0) || (w1 == 0.0 && !own1) || (w2 == 0.0 && !own2)) continue;
                // 1/z is affine in screen space.
                const double inv_z = (w0 / v0.z + w1 / v1.z + w2 / v2.z) / area;
                const double z = 1.0 / inv_z;
                const std::size_t idx = static_cast<std::size_t>(y) * cam_.width + x;
                if (z < depth_[idx]) {
                    depth_[idx] = z;
                    out_.set(x, y, label);
                }
            }
        }
    }

  private:
    ScreenVertex to_screen(const Vec3& p) const {
        return {cam_.fx * p.x / p.z + cam_.cx, cam_.fy * p.y / p.z + cam_.cy, p.z};
    }

    const PinholeCamera& cam_;
    ContactMap& out_;
    std::vector<double> depth_;
};

}  // namespace

void PinholeCamera::check() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw InputError(kStage, "camera focal lengths must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw InputError(kStage, "camera principal point must be finite");
    if (width < 1 || height < 1) throw InputError(kStage, "camera image size must be >= 1");
}

PinholeCamera load_camera(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(kStage, "cannot open camera file " + path.string());
    PinholeCamera cam;
    try {
        const auto j = nlohmann::json::parse(in);
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(kStage, path.string() + ": " + e.what());
    }
    cam.check();
    return cam;
}

void save_camera(const std::filesystem::path& path, const PinholeCamera& cam) {
    nlohmann::ordered_json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    std::ofstream out(path);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Projection project(const PinholeCamera& cam, const Vec3& p) {
    if (!(p.z > kMinDepth)) throw InputError(kStage, "point is behind the camera");
    return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy, p.z};
}

ContactMap rasterize_contact(const PinholeCamera& cam, const BodyMesh& body, const PartFaces& contact,
                             const RasterOptions& options) {
    cam.check();
    std::vector<std::uint8_t> face_label(body.faces.size(), 0);
    for (const auto& [part, faces] : contact) {
        if (!is_body_part(part_id(part))) throw InputError(kStage, "contact faces filed under background");
        for (auto f : faces) {
            if (f >= body.faces.size()) throw InputError(kStage, "contact face " + std::to_string(f) + " out of range");
            face_label[f] = static_cast<std::uint8_t>(part_id(part));
        }
    }

    ContactMap map(cam.width, cam.height);
    DepthBuffer zbuf(cam, map);
    for (std::size_t f = 0; f < body.faces.size(); ++f) {
        const Face& face = body.faces[f];
        zbuf.draw(body.vertices.at(face[0]), body.vertices.at(face[1]), body.vertices.at(face[2]), face_label[f]);
    }
    if (options.occluder) {
        const SceneMesh& scene = *options.occluder;
        for (const Face& face : scene.faces)
            zbuf.draw(scene.vertices.at(face[0]), scene.vertices.at(face[1]), scene.vertices.at(face[2]), 0);
    }
    return map;
}

}  // namespace contactforge
