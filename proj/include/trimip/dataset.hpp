#pragma once

#include <string>
#include <vector>

#include "trimip/geometry.hpp"
#include "trimip/image.hpp"

namespace trimip {

struct Frame {
    Camera camera;
    Image image;    // straight-alpha RGBA, [0,1]
    int scale = 1;  // 1, 2, 4 or 8 (full .. 1/8 resolution)
    std::string name;
};

struct Dataset {
    std::vector<Frame> frames;
    Aabb aabb;

    size_t total_pixels() const {
        size_t n = 0;
        for (const auto& f : frames) n += static_cast<size_t>(f.image.width) * f.image.height;
        return n;
    }
};

// Multi-scale compilation: each full-res frame is box-downscaled by the given
// factors (subset of {1,2,4,8}) with exactly scaled intrinsics; all sets are
// concatenated. Requires dimensions divisible by the largest factor.
Dataset compile_multiscale(const std::vector<Frame>& full_res,
                           const std::vector<int>& factors = {1, 2, 4, 8});

// Writes PNGs plus transforms_<split>.json into dir. The json carries
// camera_angle_x (radians), the scene AABB, and per-frame file_path,
// transform_matrix (row-major OpenGL cam-to-world) and scale.
void save_dataset(const Dataset& dataset, const std::string& dir, const std::string& split);

// Loads transforms_<split>.json + PNGs. Works for both our generated sets and
// NeRF-style Blender exports (which carry neither aabb nor scale keys);
// fx = 0.5*W/tan(0.5*camera_angle_x), fy = fx, and the OpenGL-convention pose
// is converted to the renderer's frame here, once.
Dataset load_dataset(const std::string& dir, const std::string& split);

}  // namespace trimip
