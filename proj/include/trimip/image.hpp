#pragma once

#include <string>
#include <vector>

#include "trimip/math.hpp"

namespace trimip {

// Row-major RGBA image with [0,1] channel values.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<real> px;  // width*height*4

    Image() = default;
    Image(int w, int h) : width(w), height(h), px(static_cast<size_t>(w) * h * 4, real(0)) {}

    real* at(int i, int j) { return px.data() + (static_cast<size_t>(j) * width + i) * 4; }
    const real* at(int i, int j) const {
        return px.data() + (static_cast<size_t>(j) * width + i) * 4;
    }

    void set(int i, int j, const Vec3& rgb, real a) {
        real* p = at(i, j);
        p[0] = rgb.x; p[1] = rgb.y; p[2] = rgb.z; p[3] = a;
    }

    Vec3 rgb(int i, int j) const {
        const real* p = at(i, j);
        return {p[0], p[1], p[2]};
    }
    real alpha(int i, int j) const { return at(i, j)[3]; }
};

// 8-bit RGBA PNG, values quantized round(v*255); no gamma transform.
void save_png(const Image& image, const std::string& path);
Image load_png(const std::string& path);

// Box-filter 2^k downscale. Color averages premultiplied by alpha so scales
// stay consistent where coverage varies; requires dimensions divisible by
// the factor.
Image box_downscale(const Image& image, int factor);

// GT color over a background: rgb*a + bg*(1-a).
Vec3 composite_over(const real* rgba, const Vec3& background);

}  // namespace trimip
