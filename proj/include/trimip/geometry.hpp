#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "trimip/geometry_types.hpp"
#include "trimip/math.hpp"
#include "trimip/occupancy.hpp"

namespace trimip {

// Pinhole camera. Image convention: pixel (i, j) = (column, row), y down,
// pixel centers at (i + 0.5, j + 0.5). The camera looks down +z in its own
// frame; poses coming from OpenGL-style datasets are converted on load.
struct Camera {
    int width = 0;
    int height = 0;
    real fx = 0, fy = 0;
    real cx = 0, cy = 0;
    Mat4 cam_to_world = Mat4::identity();

    void validate() const;

    Vec3 center() const { return cam_to_world.translation(); }

    // Intrinsics scaled by 1/factor along with the resolution.
    Camera downscaled(int factor) const;
};

// Per-pixel cone. `dir` is the unnormalized camera-center-to-pixel-center
// vector; `f` the focal distance in the same units (1, since directions are
// built on the z=1 camera plane and only rotated to world).
struct Cone {
    Vec3 origin;
    Vec3 dir;
    real f = 1;
    real disc_radius = 0;  // pixel disc radius on the image plane
    real d_norm = 1;       // cached |dir|

    Vec3 axis() const { return dir / d_norm; }
};

struct SphereSample {
    Vec3 center;
    real radius = 0;
    real t = 0;  // metric distance |center - origin|
};

// Pixel disc radius sqrt(dx*dy/pi) with dx = 1/fx, dy = 1/fy on the z=1 plane.
real pixel_disc_radius(const Camera& camera);

// Throws std::out_of_range for pixels outside the image.
Cone cone_for_pixel(const Camera& camera, int i, int j);

// Inscribed-sphere radius at metric distance t along the cone axis.
// Throws std::invalid_argument for t <= 0.
SphereSample sphere_at(const Cone& cone, real t);

// Slab intersection of a ray with the box, clipped to t >= 0.
// Returns nullopt on a miss; grazing hits report t_enter == t_exit.
std::optional<std::pair<real, real>> aabb_intersect(const Vec3& origin, const Vec3& unit_dir,
                                                    const Aabb& aabb);

// Uniform midpoint distances over the cone-axis/AABB interval, optionally
// filtered by the occupancy grid. Empty when the axis misses the box.
std::vector<real> sample_distances(const Cone& cone, const Aabb& aabb, real step,
                                   const OccupancyGrid* grid = nullptr);

}  // namespace trimip
