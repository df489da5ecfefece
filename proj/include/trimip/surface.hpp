#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trimip/encoding.hpp"
#include "trimip/field.hpp"
#include "trimip/image.hpp"
#include "trimip/renderer.hpp"

namespace trimip {

// Density samples at the centers of an N^3 cell lattice over the AABB.
struct DensityGrid {
    int resolution = 0;
    Aabb aabb;
    std::vector<real> tau;  // resolution^3, x fastest

    real& at(int ix, int iy, int iz) {
        return tau[(static_cast<size_t>(iz) * resolution + iy) * resolution + ix];
    }
    real at(int ix, int iy, int iz) const {
        return tau[(static_cast<size_t>(iz) * resolution + iy) * resolution + ix];
    }
    Vec3 point(int ix, int iy, int iz) const {
        Vec3 ext = aabb.extent();
        return {aabb.min.x + (ix + real(0.5)) / resolution * ext.x,
                aabb.min.y + (iy + real(0.5)) / resolution * ext.y,
                aabb.min.z + (iz + real(0.5)) / resolution * ext.z};
    }
};

struct Triangle {
    int v[3];
};

struct ProxyMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;

    // Flat BVH over triangles, built once after extraction.
    struct BvhNode {
        Vec3 bb_min, bb_max;
        int left = -1, right = -1;  // internal children
        int first = 0, count = 0;   // leaf triangle range
        bool is_leaf() const { return count > 0; }
    };
    std::vector<BvhNode> nodes;
    std::vector<int> tri_order;

    void build_bvh();
    bool empty() const { return triangles.empty(); }
};

// Field density at every lattice point; the encode query radius is the cell
// half-diagonal. Requires resolution >= 8.
DensityGrid extract_density_grid(const TriMipEncoding& enc, const FieldParams& params,
                                 int resolution);

// Classic 256-case marching cubes with linear edge interpolation. Vertices
// shared through edge keys plus a 1e-7 positional weld; degenerate triangles
// dropped. An empty mesh is a valid result.
ProxyMesh marching_cubes(const DensityGrid& grid, real iso);

// Nearest positive-t hit of the ray against the mesh via BVH traversal
// (Moller-Trumbore per triangle). nullopt on a miss.
std::optional<real> ray_mesh_hit(const ProxyMesh& mesh, const Vec3& origin, const Vec3& unit_dir);

// Brute-force reference for the BVH (tests).
std::optional<real> ray_mesh_hit_brute(const ProxyMesh& mesh, const Vec3& origin,
                                       const Vec3& unit_dir);

// n uniform midpoints over [t_hit - delta_t, t_hit + delta_t], clipped below
// at 1e-6.
std::vector<real> hybrid_sample(real t_hit, real delta_t, int n);

struct HybridOptions {
    real delta_t = 0;  // half-width of the sampling band
    int n_samples = 8;
    Vec3 background{1, 1, 1};
};

PixelResult render_pixel_hybrid(const Cone& cone, const ProxyMesh& mesh,
                                const TriMipEncoding& enc, const FieldParams& params,
                                const HybridOptions& opts);

Image render_image_hybrid(const Camera& camera, const ProxyMesh& mesh, const TriMipEncoding& enc,
                          const FieldParams& params, const HybridOptions& opts,
                          RenderStats* stats = nullptr, std::vector<real>* depth = nullptr);

// ASCII OBJ with v/f records, 1-based indices.
void save_obj(const ProxyMesh& mesh, const std::string& path);

// Density threshold whose per-step alpha is `alpha` (1-exp(-tau*step)=alpha).
real iso_for_alpha(real alpha, real step);

}  // namespace trimip
