#include "trimip/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace trimip {

TriMipEncoding TriMipEncoding::create(int size, int channels, const Aabb& aabb, bool single_level,
                                      Rng& rng) {
    TriMipEncoding enc;
    enc.aabb = aabb;
    enc.single_level = single_level;
    for (int p = 0; p < 3; ++p) {
        Tensor base({static_cast<size_t>(size), static_cast<size_t>(size),
                     static_cast<size_t>(channels)});
        for (auto& v : base.v) v = rng.uniform(-0.01, 0.01);
        enc.planes[p] = single_level ? single_level_map(std::move(base))
                                     : build_pyramid(std::move(base));
    }
    return enc;
}

void TriMipEncoding::rebuild_pyramids() {
    for (auto& p : planes) p.rebuild();
}

real level_of(real radius, const TriMipEncoding& enc, int plane) {
    if (enc.single_level) return 0;
    if (!(radius > 0)) throw std::invalid_argument("level_of: radius must be positive");
    Vec3 ext = enc.aabb.extent();
    real ea = ext[kPlaneAxes[plane][0]];
    real eb = ext[kPlaneAxes[plane][1]];
    const Mipmap& mip = enc.planes[plane];
    real base_texel_radius =
        std::sqrt(ea * eb / (static_cast<real>(mip.height()) * mip.width() * kPi));
    real l = std::log2(radius / base_texel_radius);
    return clamp(l, 0, static_cast<real>(mip.n_levels() - 1));
}

namespace {

void plane_uv(const SphereSample& sphere, const TriMipEncoding& enc, int plane, real& u, real& v) {
    Vec3 rel = sphere.center - enc.aabb.min;
    Vec3 ext = enc.aabb.extent();
    int a = kPlaneAxes[plane][0], b = kPlaneAxes[plane][1];
    u = rel[a] / ext[a];
    v = rel[b] / ext[b];
}

}  // namespace

void encode(const SphereSample& sphere, const TriMipEncoding& enc, real* out) {
    int c = enc.channels();
    for (int k = 0; k < 3 * c; ++k) out[k] = 0;
    for (int p = 0; p < 3; ++p) {
        real u, v;
        plane_uv(sphere, enc, p, u, v);
        trilinear_query(enc.planes[p], u, v, level_of(sphere.radius, enc, p), out + p * c);
    }
}

EncGradAccum EncGradAccum::like(const TriMipEncoding& enc) {
    EncGradAccum acc;
    for (int p = 0; p < 3; ++p) {
        acc.levels[p].reserve(enc.planes[p].levels.size());
        for (const Tensor& lv : enc.planes[p].levels) acc.levels[p].emplace_back(lv.shape);
    }
    return acc;
}

void EncGradAccum::zero() {
    for (auto& plane : levels)
        for (auto& lv : plane) lv.zero();
}

void EncGradAccum::add(const EncGradAccum& other) {
    for (int p = 0; p < 3; ++p)
        for (size_t k = 0; k < levels[p].size(); ++k) levels[p][k].add(other.levels[p][k]);
}

void EncGradAccum::scatter(const SphereSample& sphere, const TriMipEncoding& enc,
                           const real* upstream) {
    int c = enc.channels();
    for (int p = 0; p < 3; ++p) {
        real u, v;
        plane_uv(sphere, enc, p, u, v);
        trilinear_scatter(enc.planes[p], u, v, level_of(sphere.radius, enc, p), upstream + p * c,
                          levels[p]);
    }
}

EncGrads EncGradAccum::to_base() && {
    EncGrads g;
    for (int p = 0; p < 3; ++p) {
        pyramid_grad_to_base(levels[p]);
        g.planes[p] = std::move(levels[p][0]);
    }
    return g;
}

EncGrads encode_backward(const SphereSample& sphere, const TriMipEncoding& enc,
                         const real* upstream) {
    EncGradAccum acc = EncGradAccum::like(enc);
    acc.scatter(sphere, enc, upstream);
    return std::move(acc).to_base();
}

}  // namespace trimip
