#pragma once

#include <filesystem>

#include "contactforge/body_model.hpp"
#include "contactforge/contact_gen.hpp"
#include "contactforge/contact_map.hpp"
#include "contactforge/spatial_index.hpp"

namespace contactforge {

// Pinhole intrinsics. Geometry is expressed in the camera frame, +z forward,
// +x right, +y down.
struct PinholeCamera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    void check() const;
};

PinholeCamera load_camera(const std::filesystem::path& path);
void save_camera(const std::filesystem::path& path, const PinholeCamera& cam);

inline constexpr double kMinDepth = 1e-6;

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Throws InputError when p.z <= kMinDepth.
Projection project(const PinholeCamera& cam, const Vec3& p);

struct RasterOptions {
    // When set, scene faces also write the depth buffer and hide contact
    // areas behind them.
    const SceneMesh* occluder = nullptr;
};

// Z-buffers every body face at pixel centers (perspective-correct depth,
// nearer wins, equal depth keeps the lower face index, top-left rule on
// shared edges). A pixel gets a part id iff its front-most face is a contact
// face. Faces with any vertex at depth <= kMinDepth are skipped.
ContactMap rasterize_contact(const PinholeCamera& cam, const BodyMesh& body, const PartFaces& contact,
                             const RasterOptions& options = {});

}  // namespace contactforge
