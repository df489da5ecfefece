#pragma once

#include <cstdint>
#include <vector>

#include "trimip/geometry_types.hpp"
#include "trimip/math.hpp"

namespace trimip {

// Coarse binary voxelization of the AABB. `occupancy` holds a per-cell EMA
// density estimate; `binary` is derived by thresholding occupancy * step_ref.
// The update pass lives in renderer.cpp since it needs the field.
struct OccupancyGrid {
    int resolution = 0;
    Aabb aabb;
    real step_ref = 0;    // reference marching step for the threshold rule
    real threshold = 0.01;
    real decay = 0.95;
    std::vector<real> occupancy;
    std::vector<uint8_t> binary;

    OccupancyGrid() = default;
    OccupancyGrid(int res, const Aabb& box, real step_ref_, real threshold_ = 0.01,
                  real decay_ = 0.95)
        : resolution(res),
          aabb(box),
          step_ref(step_ref_),
          threshold(threshold_),
          decay(decay_),
          occupancy(static_cast<size_t>(res) * res * res, real(0)),
          binary(static_cast<size_t>(res) * res * res, 1) {}
    // Cells start occupied so nothing is skipped before the first update.

    size_t n_cells() const { return occupancy.size(); }

    size_t cell_index(int ix, int iy, int iz) const {
        return (static_cast<size_t>(iz) * resolution + iy) * resolution + ix;
    }

    // Point-to-cell lookup; points outside the box clamp to the border cell.
    size_t cell_of(const Vec3& p) const {
        Vec3 ext = aabb.extent();
        int ix = static_cast<int>((p.x - aabb.min.x) / ext.x * resolution);
        int iy = static_cast<int>((p.y - aabb.min.y) / ext.y * resolution);
        int iz = static_cast<int>((p.z - aabb.min.z) / ext.z * resolution);
        ix = ix < 0 ? 0 : (ix >= resolution ? resolution - 1 : ix);
        iy = iy < 0 ? 0 : (iy >= resolution ? resolution - 1 : iy);
        iz = iz < 0 ? 0 : (iz >= resolution ? resolution - 1 : iz);
        return cell_index(ix, iy, iz);
    }

    bool cell_occupied(const Vec3& p) const { return binary[cell_of(p)] != 0; }

    void rebinarize() {
        for (size_t i = 0; i < occupancy.size(); ++i)
            binary[i] = occupancy[i] * step_ref > threshold ? 1 : 0;
    }

    Vec3 cell_center(int ix, int iy, int iz) const {
        Vec3 ext = aabb.extent();
        return {aabb.min.x + (ix + real(0.5)) / resolution * ext.x,
                aabb.min.y + (iy + real(0.5)) / resolution * ext.y,
                aabb.min.z + (iz + real(0.5)) / resolution * ext.z};
    }

    real cell_half_diagonal() const {
        Vec3 ext = aabb.extent();
        return real(0.5) * norm(ext) / resolution;
    }
};

}  // namespace trimip
