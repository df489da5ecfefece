#pragma once

#include <vector>

#include "trimip/geometry.hpp"
#include "trimip/mipmap.hpp"
#include "trimip/rng.hpp"
#include "trimip/tensor.hpp"

namespace trimip {

// Tri-Mip encoding: three trainable mipmaps over the XY, XZ and YZ planes of
// the AABB. A sphere is featurized by projecting it onto each plane and
// reading the pyramid at the level whose texel radius matches the sphere
// radius; the three C-vectors concatenate to a 3C feature.
struct TriMipEncoding {
    Mipmap planes[3];  // 0: XY, 1: XZ, 2: YZ
    Aabb aabb;
    bool single_level = false;  // flat-encoding ablation: always read the base

    int channels() const { return planes[0].channels(); }
    int feat_dim() const { return 3 * channels(); }
    int size() const { return planes[0].width(); }

    // Base levels initialized U(-0.01, 0.01).
    static TriMipEncoding create(int size, int channels, const Aabb& aabb, bool single_level,
                                 Rng& rng);

    // Re-derive all pyramid levels from the (just updated) base levels.
    void rebuild_pyramids();
};

// Axis pair of each plane: XY -> (x, y), XZ -> (x, z), YZ -> (y, z).
inline constexpr int kPlaneAxes[3][2] = {{0, 1}, {0, 2}, {1, 2}};

// Mipmap level matching the sphere radius on `plane`; the base-texel radius
// uses that plane's own two AABB extents. Clamped to [0, n_levels-1].
real level_of(real radius, const TriMipEncoding& enc, int plane);

// Writes the 3C feature [f_XY, f_XZ, f_YZ] to out.
void encode(const SphereSample& sphere, const TriMipEncoding& enc, real* out);

struct EncGrads {
    Tensor planes[3];  // base-level gradients, H x W x C each
};

// Per-level gradient accumulator for batched backward passes. Scatter is the
// exact adjoint of the trilinear reads; the pull-down to base happens once per
// reduction (linearity makes the two orders identical).
struct EncGradAccum {
    std::vector<Tensor> levels[3];

    static EncGradAccum like(const TriMipEncoding& enc);
    void zero();
    void add(const EncGradAccum& other);
    void scatter(const SphereSample& sphere, const TriMipEncoding& enc, const real* upstream);
    // Collapses levels to base gradients; accumulator contents are consumed.
    EncGrads to_base() &&;
};

// Single-query adjoint (test and reference path).
EncGrads encode_backward(const SphereSample& sphere, const TriMipEncoding& enc,
                         const real* upstream);

}  // namespace trimip
