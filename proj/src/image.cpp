#include "trimip/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace trimip {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void save_png(const Image& image, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("save_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("save_png: png_create_info_struct failed");
    }
    std::vector<unsigned char> bytes(static_cast<size_t>(image.width) * image.height * 4);
    for (size_t k = 0; k < bytes.size(); ++k) {
        real v = clamp(image.px[k], 0, 1);
        bytes[k] = static_cast<unsigned char>(std::lround(v * 255));
    }
    std::vector<png_bytep> rows(image.height);
    for (int j = 0; j < image.height; ++j)
        rows[j] = bytes.data() + static_cast<size_t>(j) * image.width * 4;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: libpng error writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGBA,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);
    unsigned char header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw std::runtime_error("load_png: not a PNG file: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("load_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("load_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: malformed PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w, h;
    int bit_depth, color_type;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    // Normalize whatever we get to 8-bit RGBA.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);

    std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * 4);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 j = 0; j < h; ++j) rows[j] = bytes.data() + static_cast<size_t>(j) * w * 4;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(w), static_cast<int>(h));
    for (size_t k = 0; k < bytes.size(); ++k) img.px[k] = bytes[k] / real(255);
    return img;
}

Image box_downscale(const Image& image, int factor) {
    if (factor < 1 || image.width % factor || image.height % factor)
        throw std::invalid_argument("box_downscale: dimensions not divisible by factor");
    Image out(image.width / factor, image.height / factor);
    real inv = real(1) / (static_cast<real>(factor) * factor);
    for (int j = 0; j < out.height; ++j)
        for (int i = 0; i < out.width; ++i) {
            real acc[4] = {0, 0, 0, 0};
            for (int dj = 0; dj < factor; ++dj)
                for (int di = 0; di < factor; ++di) {
                    const real* p = image.at(i * factor + di, j * factor + dj);
                    real a = p[3];
                    acc[0] += p[0] * a;
                    acc[1] += p[1] * a;
                    acc[2] += p[2] * a;
                    acc[3] += a;
                }
            real* q = out.at(i, j);
            real a = acc[3] * inv;
            q[3] = a;
            if (a > 0) {
                q[0] = acc[0] * inv / a;
                q[1] = acc[1] * inv / a;
                q[2] = acc[2] * inv / a;
            } else {
                q[0] = q[1] = q[2] = 0;
            }
        }
    return out;
}

Vec3 composite_over(const real* rgba, const Vec3& background) {
    real a = rgba[3];
    return Vec3{rgba[0], rgba[1], rgba[2]} * a + background * (1 - a);
}

}  // namespace trimip
