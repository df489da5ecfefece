#include "trimip/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace trimip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Column flips y and z: OpenGL cameras look down -z with y up; ours look down
// +z with y down.
Mat4 opengl_to_renderer(const Mat4& gl) {
    Mat4 m = gl;
    for (int r = 0; r < 3; ++r) {
        m.m[r][1] = -gl.m[r][1];
        m.m[r][2] = -gl.m[r][2];
    }
    return m;
}

Mat4 renderer_to_opengl(const Mat4& ours) { return opengl_to_renderer(ours); }  // involution

}  // namespace

Dataset compile_multiscale(const std::vector<Frame>& full_res, const std::vector<int>& factors) {
    if (full_res.empty()) throw std::invalid_argument("compile_multiscale: no frames");
    int max_factor = *std::max_element(factors.begin(), factors.end());
    for (const Frame& f : full_res)
        if (f.image.width % max_factor || f.image.height % max_factor)
            throw std::invalid_argument(
                "compile_multiscale: dimensions must divide by the largest factor");
    Dataset out;
    for (int factor : factors) {
        for (const Frame& f : full_res) {
            Frame g;
            g.scale = factor;
            g.name = f.name;
            g.camera = factor == 1 ? f.camera : f.camera.downscaled(factor);
            g.image = factor == 1 ? f.image : box_downscale(f.image, factor);
            out.frames.push_back(std::move(g));
        }
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::string& dir, const std::string& split) {
    fs::create_directories(dir);
    json j;
    if (dataset.frames.empty()) throw std::invalid_argument("save_dataset: no frames");
    const Camera& c0 = dataset.frames.front().camera;
    j["camera_angle_x"] = 2 * std::atan(real(0.5) * c0.width / c0.fx);
    j["aabb"] = {{dataset.aabb.min.x, dataset.aabb.min.y, dataset.aabb.min.z},
                 {dataset.aabb.max.x, dataset.aabb.max.y, dataset.aabb.max.z}};
    j["frames"] = json::array();
    for (size_t k = 0; k < dataset.frames.size(); ++k) {
        const Frame& f = dataset.frames[k];
        std::string stem = f.name.empty() ? split + "_" + std::to_string(k) : f.name;
        std::string file = stem + (f.scale == 1 ? "" : "_d" + std::to_string(f.scale));
        save_png(f.image, (fs::path(dir) / (file + ".png")).string());
        Mat4 gl = renderer_to_opengl(f.camera.cam_to_world);
        json mat = json::array();
        for (int r = 0; r < 4; ++r) {
            json row = json::array();
            for (int cidx = 0; cidx < 4; ++cidx) row.push_back(gl.m[r][cidx]);
            mat.push_back(row);
        }
        j["frames"].push_back({{"file_path", "./" + file}, {"transform_matrix", mat},
                               {"scale", f.scale}});
    }
    std::ofstream os(fs::path(dir) / ("transforms_" + split + ".json"));
    if (!os) throw std::runtime_error("save_dataset: cannot write transforms json");
    os << j.dump(1) << "\n";
}

Dataset load_dataset(const std::string& dir, const std::string& split) {
    fs::path jpath = fs::path(dir) / ("transforms_" + split + ".json");
    std::ifstream is(jpath);
    if (!is) throw std::runtime_error("load_dataset: missing " + jpath.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_dataset: malformed json: " + std::string(e.what()));
    }
    if (!j.contains("camera_angle_x"))
        throw std::runtime_error("load_dataset: transforms json lacks camera_angle_x");
    if (!j.contains("frames") || !j["frames"].is_array())
        throw std::runtime_error("load_dataset: transforms json lacks frames");
    real angle_x = j["camera_angle_x"].get<real>();

    Dataset ds;
    if (j.contains("aabb")) {
        auto& a = j["aabb"];
        ds.aabb.min = {a[0][0].get<real>(), a[0][1].get<real>(), a[0][2].get<real>()};
        ds.aabb.max = {a[1][0].get<real>(), a[1][1].get<real>(), a[1][2].get<real>()};
    } else {
        ds.aabb = Aabb{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};  // NeRF Blender convention
    }

    int max_width = 0;
    for (auto& jf : j["frames"]) {
        if (!jf.contains("file_path") || !jf.contains("transform_matrix"))
            throw std::runtime_error("load_dataset: frame lacks file_path/transform_matrix");
        Frame f;
        std::string file = jf["file_path"].get<std::string>();
        fs::path img = fs::path(dir) / file;
        if (!fs::exists(img)) img = fs::path(dir) / (file + ".png");
        f.image = load_png(img.string());
        f.name = fs::path(file).filename().string();

        Mat4 gl = Mat4::identity();
        auto& mat = jf["transform_matrix"];
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) gl.m[r][c] = mat[r][c].get<real>();

        Camera& cam = f.camera;
        cam.width = f.image.width;
        cam.height = f.image.height;
        cam.fx = real(0.5) * cam.width / std::tan(real(0.5) * angle_x);
        cam.fy = cam.fx;
        if (j.contains("camera_angle_y")) {
            real fy = real(0.5) * cam.height / std::tan(real(0.5) * j["camera_angle_y"].get<real>());
            if (std::abs(fy - cam.fx) > 1e-6 * cam.fx)
                throw std::runtime_error("load_dataset: non-square pixels are not supported");
        }
        cam.cx = cam.width * real(0.5);
        cam.cy = cam.height * real(0.5);
        cam.cam_to_world = opengl_to_renderer(gl);
        cam.validate();

        f.scale = jf.contains("scale") ? jf["scale"].get<int>() : 0;
        max_width = std::max(max_width, f.image.width);
        ds.frames.push_back(std::move(f));
    }
    for (Frame& f : ds.frames) {
        if (f.scale == 0) f.scale = std::max(1, max_width / f.image.width);
        if (f.image.width * f.scale != max_width)
            throw std::runtime_error("load_dataset: frame resolution inconsistent with scale tag");
    }
    return ds;
}

}  // namespace trimip
