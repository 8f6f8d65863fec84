#pragma once

#include <cstdint>
#include <vector>

#include "contactforge/body_model.hpp"
#include "contactforge/part_attention.hpp"
#include "contactforge/render2d.hpp"
#include "contactforge/spatial_index.hpp"

namespace contactforge::synthetic {

// Appends an axis-aligned box whose surface is a (divisions x divisions)
// grid per side, wound outward, every vertex labeled `part`.
void add_box(BodyMesh& mesh, const Vec3& lo, const Vec3& hi, Part part, int divisions);

struct StandingBodyOptions {
    double left_sole_height = 0.02;   // meters above z = 0
    double right_sole_height = 0.05;
    int divisions = 4;
};

// Box-figure person standing upright in a z-up world, facing +y, feet near
// the origin. Normals are computed.
BodyMesh standing_body(const StandingBodyOptions& options = {});

// Square floor at z = height spanning [-half_extent, half_extent]^2, normal +z.
SceneMesh floor_scene(double half_extent = 2.0, double height = 0.0);

// World (z up) to a camera in front of standing_body, looking back at it
// slightly downwards.
RigidTransform demo_world_to_camera();
PinholeCamera demo_camera();

void transform_body(BodyMesh& body, const RigidTransform& tr);
SceneMesh transform_scene(const SceneMesh& scene, const RigidTransform& tr);

// Four 16x16 images, each a square of one body part resting on a bright bar;
// contact is the two square rows touching the bar.
std::vector<Sample> toy_dataset();
GrayImage tensor_to_image(const Tensor& t);

}  // namespace contactforge::synthetic
