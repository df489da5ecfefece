#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trimip/encoding.hpp"
#include "trimip/field.hpp"
#include "trimip/geometry.hpp"
#include "trimip/image.hpp"
#include "trimip/occupancy.hpp"

namespace trimip {

struct CompositeResult {
    Vec3 rgb;
    real opacity = 0;          // sum of weights
    real depth = 0;            // sum(w_i t_i) / max(opacity, eps)
    std::vector<real> weights;
};

// Quadrature compositing: alpha_i = 1 - exp(-tau_i * delta_i) with
// delta_i = t_{i+1} - t_i and one trailing interval equal to `trailing_step`.
// rgb composites over `background`. Throws on unsorted ts. early_stop_T > 0
// stops accumulating once transmittance drops below it (render-only path).
CompositeResult composite(std::span<const real> taus, std::span<const Vec3> colors,
                          std::span<const real> ts, real trailing_step, const Vec3& background,
                          real early_stop_T = 0);

// Adjoint of composite w.r.t. per-sample density and color, given
// d(loss)/d(rgb). Opacity and depth are not supervised.
void composite_backward(std::span<const real> taus, std::span<const Vec3> colors,
                        std::span<const real> ts, real trailing_step, const Vec3& background,
                        const Vec3& d_rgb, std::span<real> d_taus, std::span<Vec3> d_colors);

struct RenderOptions {
    real step = 0;                       // marching step (required)
    Vec3 background{1, 1, 1};
    real early_stop_T = 1e-4;            // 0 disables early termination
    const OccupancyGrid* grid = nullptr;
    int threads = 0;                     // 0 = library default
};

struct PixelResult {
    Vec3 rgb;
    real opacity = 0;
    real depth = 0;
    long long n_field_evals = 0;
};

struct RenderStats {
    long long n_field_evals = 0;
    long long n_pixels = 0;
};

PixelResult render_pixel(const Cone& cone, const TriMipEncoding& enc, const FieldParams& params,
                         const RenderOptions& opts);

// Full-image render, parallel over pixels; output is RGBA (alpha = opacity)
// and bit-identical for any thread count. `depth` optionally receives the
// per-pixel expected distance.
Image render_image(const Camera& camera, const TriMipEncoding& enc, const FieldParams& params,
                   const RenderOptions& opts, RenderStats* stats = nullptr,
                   std::vector<real>* depth = nullptr);

// Plain-loop reference used by tests and the benchmark.
Image render_image_serial(const Camera& camera, const TriMipEncoding& enc,
                          const FieldParams& params, const RenderOptions& opts,
                          RenderStats* stats = nullptr, std::vector<real>* depth = nullptr);

// EMA occupancy refresh: tau at one jittered point per cell (query radius =
// cell half-diagonal), occupancy <- max(decay * occupancy, tau), rebinarize.
// Jitter derives from (seed, step) so resumed runs see identical grids.
void occupancy_update(OccupancyGrid& grid, const TriMipEncoding& enc, const FieldParams& params,
                      uint64_t seed, uint64_t step);

}  // namespace trimip
