#pragma once

#include <vector>

#include "trimip/tensor.hpp"

namespace trimip {

// Feature image pyramid. Level 0 is the trainable base; every other level is
// the exact 2x2 mean of its parent, per channel. n_levels = log2(min(H,W))+1.
struct Mipmap {
    std::vector<Tensor> levels;  // level k has shape [H/2^k, W/2^k, C]

    int n_levels() const { return static_cast<int>(levels.size()); }
    int height() const { return static_cast<int>(levels[0].shape[0]); }
    int width() const { return static_cast<int>(levels[0].shape[1]); }
    int channels() const { return static_cast<int>(levels[0].shape[2]); }

    Tensor& base() { return levels[0]; }
    const Tensor& base() const { return levels[0]; }

    // Recompute levels 1.. from the current base.
    void rebuild();
};

// Throws std::invalid_argument unless H, W are powers of two >= 2.
Mipmap build_pyramid(Tensor base);

// Single-level variant for the flat-encoding ablation: only the base level,
// every query reads it bilinearly.
Mipmap single_level_map(Tensor base);

// Bilinear + level blend at (u, v) in [0,1]^2 and fractional level l.
// Texel centers sit at (i+0.5)/W_k; addressing clamps to the edge. Out-of-range
// uv clamps; l is clamped to [0, n_levels-1]. Adds into out[0..C).
void trilinear_query(const Mipmap& mip, real u, real v, real level, real* out);

// Adjoint of trilinear_query: scatters upstream[0..C) into per-level gradient
// grids (same shapes as mip.levels).
void trilinear_scatter(const Mipmap& mip, real u, real v, real level, const real* upstream,
                       std::vector<Tensor>& level_grads);

// Pulls per-level gradients down to the base level: the adjoint of repeated
// 2x2 mean pooling (each base texel under a level-k texel receives grad/4^k).
// Consumes `level_grads` (levels 1.. are used as scratch); the result is the
// accumulated base gradient in level_grads[0].
void pyramid_grad_to_base(std::vector<Tensor>& level_grads);

}  // namespace trimip
