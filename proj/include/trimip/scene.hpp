#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trimip/geometry.hpp"
#include "trimip/image.hpp"
#include "trimip/math.hpp"

namespace trimip {

// Axis-aligned checker lattice; per-axis cell sizes so a plane texture is a
// lattice with one huge cell along its normal.
struct CheckerTexture {
    Vec3 color_a{0.95, 0.95, 0.95};
    Vec3 color_b{0.05, 0.05, 0.05};
    Vec3 cell{0.1, 0.1, 0.1};
    Vec3 origin{0, 0, 0};

    Vec3 sample(const Vec3& p) const {
        long long sx = static_cast<long long>(std::floor((p.x - origin.x) / cell.x));
        long long sy = static_cast<long long>(std::floor((p.y - origin.y) / cell.y));
        long long sz = static_cast<long long>(std::floor((p.z - origin.z) / cell.z));
        return ((sx + sy + sz) & 1) ? color_b : color_a;
    }
};

struct Primitive {
    enum class Shape { Sphere, Box };
    Shape shape = Shape::Sphere;
    Vec3 center;        // sphere
    real radius = 0.5;  // sphere
    Aabb box;           // box
    real tau = 50;      // homogeneous density inside
    Vec3 albedo{0.8, 0.8, 0.8};
    std::optional<CheckerTexture> checker;

    Vec3 albedo_at(const Vec3& p) const { return checker ? checker->sample(p) : albedo; }
};

// Piecewise-constant volumetric test scene with an exact transmittance
// integral along any ray, so the reference renderer has no quadrature error.
struct AnalyticScene {
    std::vector<Primitive> primitives;
    Vec3 background{1, 1, 1};
    Aabb aabb;
};

// Named fixtures ("single-sphere", "checker-plane", "checker-sphere"); the
// seed only drives the camera orbit jitter. Throws on unknown/empty spec.
AnalyticScene generate_scene(const std::string& spec, uint64_t seed);

// Deterministic orbit of inward-looking cameras around the scene.
std::vector<Camera> orbit_cameras(int count, int width, int height, real fov_x, real orbit_radius,
                                  uint64_t seed, int phase = 0);

// Exact reference render: spp stratified sub-pixel rays per pixel, each ray
// integrated in closed form through the piecewise-constant media. Output is
// straight-alpha RGBA with no background baked in.
Image oracle_render(const AnalyticScene& scene, const Camera& camera, int spp, uint64_t seed);

// Exact radiance along one ray: premultiplied color and opacity.
void oracle_trace(const AnalyticScene& scene, const Vec3& origin, const Vec3& unit_dir,
                  Vec3& premul_rgb, real& alpha);

}  // namespace trimip
