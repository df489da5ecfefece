#include "trimip/mipmap.hpp"

#include <cmath>
#include <stdexcept>

namespace trimip {

namespace {

bool is_pow2(size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

Tensor downscale2x(const Tensor& src) {
    size_t h = src.shape[0], w = src.shape[1], c = src.shape[2];
    Tensor dst({h / 2, w / 2, c});
    for (size_t i = 0; i < h / 2; ++i)
        for (size_t j = 0; j < w / 2; ++j)
            for (size_t k = 0; k < c; ++k)
                dst.at(i, j, k) = (src.at(2 * i, 2 * j, k) + src.at(2 * i, 2 * j + 1, k) +
                                   src.at(2 * i + 1, 2 * j, k) + src.at(2 * i + 1, 2 * j + 1, k)) *
                                  real(0.25);
    return dst;
}

struct BilinearFootprint {
    size_t idx[4];
    real w[4];
};

// Clamp-to-edge bilinear footprint at level k of an H_k x W_k x C grid.
BilinearFootprint footprint(const Tensor& level, real u, real v) {
    auto h = static_cast<long long>(level.shape[0]);
    auto w = static_cast<long long>(level.shape[1]);
    size_t c = level.shape[2];
    u = clamp(u, 0, 1);
    v = clamp(v, 0, 1);
    real x = u * w - real(0.5);
    real y = v * h - real(0.5);
    real xf = std::floor(x), yf = std::floor(y);
    real fx = x - xf, fy = y - yf;
    auto cl = [](long long i, long long n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
    long long x0 = cl(static_cast<long long>(xf), w), x1 = cl(static_cast<long long>(xf) + 1, w);
    long long y0 = cl(static_cast<long long>(yf), h), y1 = cl(static_cast<long long>(yf) + 1, h);
    BilinearFootprint fp;
    fp.idx[0] = (static_cast<size_t>(y0) * w + x0) * c;
    fp.idx[1] = (static_cast<size_t>(y0) * w + x1) * c;
    fp.idx[2] = (static_cast<size_t>(y1) * w + x0) * c;
    fp.idx[3] = (static_cast<size_t>(y1) * w + x1) * c;
    fp.w[0] = (1 - fy) * (1 - fx);
    fp.w[1] = (1 - fy) * fx;
    fp.w[2] = fy * (1 - fx);
    fp.w[3] = fy * fx;
    return fp;
}

}  // namespace

void Mipmap::rebuild() {
    for (size_t k = 1; k < levels.size(); ++k) levels[k] = downscale2x(levels[k - 1]);
}

Mipmap build_pyramid(Tensor base) {
    if (base.shape.size() != 3) throw std::invalid_argument("build_pyramid: base must be HxWxC");
    size_t h = base.shape[0], w = base.shape[1];
    if (!is_pow2(h) || !is_pow2(w) || h < 2 || w < 2)
        throw std::invalid_argument("build_pyramid: H, W must be powers of two >= 2");
    Mipmap mip;
    size_t n = static_cast<size_t>(std::log2(static_cast<double>(std::min(h, w)))) + 1;
    mip.levels.reserve(n);
    mip.levels.push_back(std::move(base));
    for (size_t k = 1; k < n; ++k) mip.levels.push_back(downscale2x(mip.levels[k - 1]));
    return mip;
}

Mipmap single_level_map(Tensor base) {
    if (base.shape.size() != 3) throw std::invalid_argument("single_level_map: base must be HxWxC");
    Mipmap mip;
    mip.levels.push_back(std::move(base));
    return mip;
}

void trilinear_query(const Mipmap& mip, real u, real v, real level, real* out) {
    int n = mip.n_levels();
    size_t c = mip.levels[0].shape[2];
    level = clamp(level, 0, static_cast<real>(n - 1));
    int l0 = static_cast<int>(std::floor(level));
    int l1 = l0 + 1 < n ? l0 + 1 : l0;
    real fl = level - l0;

    auto sample = [&](const Tensor& lv, real weight) {
        if (weight == 0) return;
        BilinearFootprint fp = footprint(lv, u, v);
        const real* d = lv.data();
        for (size_t k = 0; k < c; ++k)
            out[k] += weight * (fp.w[0] * d[fp.idx[0] + k] + fp.w[1] * d[fp.idx[1] + k] +
                                fp.w[2] * d[fp.idx[2] + k] + fp.w[3] * d[fp.idx[3] + k]);
    };
    sample(mip.levels[l0], 1 - fl);
    if (l1 != l0) sample(mip.levels[l1], fl);
}

void trilinear_scatter(const Mipmap& mip, real u, real v, real level, const real* upstream,
                       std::vector<Tensor>& level_grads) {
    int n = mip.n_levels();
    size_t c = mip.levels[0].shape[2];
    level = clamp(level, 0, static_cast<real>(n - 1));
    int l0 = static_cast<int>(std::floor(level));
    int l1 = l0 + 1 < n ? l0 + 1 : l0;
    real fl = level - l0;

    auto scatter = [&](int li, real weight) {
        if (weight == 0) return;
        BilinearFootprint fp = footprint(mip.levels[li], u, v);
        real* g = level_grads[li].data();
        for (int q = 0; q < 4; ++q)
            for (size_t k = 0; k < c; ++k) g[fp.idx[q] + k] += weight * fp.w[q] * upstream[k];
    };
    scatter(l0, 1 - fl);
    if (l1 != l0) scatter(l1, fl);
}

void pyramid_grad_to_base(std::vector<Tensor>& level_grads) {
    // g_{k-1} += upsample(g_k) / 4, from the top down; the base accumulates
    // the adjoint of every pooling stage.
    for (size_t k = level_grads.size(); k-- > 1;) {
        const Tensor& gk = level_grads[k];
        Tensor& gp = level_grads[k - 1];
        size_t h = gk.shape[0], w = gk.shape[1], c = gk.shape[2];
        for (size_t i = 0; i < h; ++i)
            for (size_t j = 0; j < w; ++j)
                for (size_t ch = 0; ch < c; ++ch) {
                    real g = gk.at(i, j, ch) * real(0.25);
                    gp.at(2 * i, 2 * j, ch) += g;
                    gp.at(2 * i, 2 * j + 1, ch) += g;
                    gp.at(2 * i + 1, 2 * j, ch) += g;
                    gp.at(2 * i + 1, 2 * j + 1, ch) += g;
                }
    }
}

}  // namespace trimip
