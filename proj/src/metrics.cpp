#include "trimip/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace trimip {

real psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: shape mismatch");
    real se = 0;
    size_t n = static_cast<size_t>(a.width) * a.height;
    for (size_t p = 0; p < n; ++p)
        for (int c = 0; c < 3; ++c) {
            real d = a.px[p * 4 + c] - b.px[p * 4 + c];
            se += d * d;
        }
    real mse = se / (static_cast<real>(n) * 3);
    if (mse == 0) return std::numeric_limits<real>::infinity();
    return 10 * std::log10(real(1) / mse);
}

namespace {

constexpr int kWin = 11;

std::array<real, kWin> gaussian_kernel() {
    std::array<real, kWin> k{};
    real sigma = 1.5;
    real sum = 0;
    for (int i = 0; i < kWin; ++i) {
        real x = i - (kWin - 1) / real(2);
        k[i] = std::exp(-x * x / (2 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable Gaussian filter, valid region only. src is a single channel.
std::vector<real> filter_valid(const std::vector<real>& src, int w, int h, int& ow, int& oh) {
    static const std::array<real, kWin> k = gaussian_kernel();
    ow = w - kWin + 1;
    oh = h - kWin + 1;
    std::vector<real> tmp(static_cast<size_t>(ow) * h);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < ow; ++i) {
            real s = 0;
            for (int q = 0; q < kWin; ++q) s += k[q] * src[static_cast<size_t>(j) * w + i + q];
            tmp[static_cast<size_t>(j) * ow + i] = s;
        }
    std::vector<real> out(static_cast<size_t>(ow) * oh);
    for (int j = 0; j < oh; ++j)
        for (int i = 0; i < ow; ++i) {
            real s = 0;
            for (int q = 0; q < kWin; ++q) s += k[q] * tmp[static_cast<size_t>(j + q) * ow + i];
            out[static_cast<size_t>(j) * ow + i] = s;
        }
    return out;
}

}  // namespace

real ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: shape mismatch");
    if (a.width < kWin || a.height < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const real c1 = real(0.01) * real(0.01);
    const real c2 = real(0.03) * real(0.03);
    size_t n = static_cast<size_t>(a.width) * a.height;
    real total = 0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<real> xa(n), xb(n), xaa(n), xbb(n), xab(n);
        for (size_t p = 0; p < n; ++p) {
            real va = a.px[p * 4 + ch], vb = b.px[p * 4 + ch];
            xa[p] = va;
            xb[p] = vb;
            xaa[p] = va * va;
            xbb[p] = vb * vb;
            xab[p] = va * vb;
        }
        int ow, oh;
        auto mu_a = filter_valid(xa, a.width, a.height, ow, oh);
        auto mu_b = filter_valid(xb, a.width, a.height, ow, oh);
        auto m_aa = filter_valid(xaa, a.width, a.height, ow, oh);
        auto m_bb = filter_valid(xbb, a.width, a.height, ow, oh);
        auto m_ab = filter_valid(xab, a.width, a.height, ow, oh);
        real acc = 0;
        for (size_t p = 0; p < mu_a.size(); ++p) {
            real ma = mu_a[p], mb = mu_b[p];
            real va = m_aa[p] - ma * ma;
            real vb = m_bb[p] - mb * mb;
            real cov = m_ab[p] - ma * mb;
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += acc / static_cast<real>(mu_a.size());
    }
    return total / 3;
}

}  // namespace trimip
