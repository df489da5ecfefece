#include "trimip/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trimip/rng.hpp"

namespace trimip {

namespace {

// Entry/exit of a ray against one primitive, clipped to [0, t_max].
bool primitive_interval(const Primitive& pr, const Vec3& o, const Vec3& d, real t_max, real& t0,
                        real& t1) {
    if (pr.shape == Primitive::Shape::Sphere) {
        Vec3 oc = o - pr.center;
        real b = dot(oc, d);
        real c = dot(oc, oc) - pr.radius * pr.radius;
        real disc = b * b - c;
        if (disc <= 0) return false;
        real s = std::sqrt(disc);
        t0 = -b - s;
        t1 = -b + s;
    } else {
        auto hit = aabb_intersect(o, d, pr.box);
        if (!hit) return false;
        t0 = hit->first;
        t1 = hit->second;
    }
    t0 = std::max(t0, real(0));
    t1 = std::min(t1, t_max);
    return t1 > t0;
}

// Parameter values where the ray crosses checker lattice planes inside [t0,t1].
void checker_crossings(const CheckerTexture& tex, const Vec3& o, const Vec3& d, real t0, real t1,
                       std::vector<real>& events) {
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0) continue;
        real inv = real(1) / d[a];
        real c0 = (o[a] + t0 * d[a] - tex.origin[a]) / tex.cell[a];
        real c1 = (o[a] + t1 * d[a] - tex.origin[a]) / tex.cell[a];
        auto lo = static_cast<long long>(std::ceil(std::min(c0, c1)));
        auto hi = static_cast<long long>(std::floor(std::max(c0, c1)));
        for (long long k = lo; k <= hi; ++k) {
            real t = (tex.origin[a] + k * tex.cell[a] - o[a]) * inv;
            if (t > t0 && t < t1) events.push_back(t);
        }
    }
}

}  // namespace

void oracle_trace(const AnalyticScene& scene, const Vec3& origin, const Vec3& unit_dir,
                  Vec3& premul_rgb, real& alpha) {
    // Far bound: past everything in the scene box by a wide margin.
    real t_max = norm(origin - scene.aabb.center()) + scene.aabb.diagonal() + 10;

    std::vector<real> events;
    events.reserve(16);
    struct Span { real t0, t1; const Primitive* pr; };
    std::vector<Span> spans;
    for (const Primitive& pr : scene.primitives) {
        real t0, t1;
        if (!primitive_interval(pr, origin, unit_dir, t_max, t0, t1)) continue;
        spans.push_back({t0, t1, &pr});
        events.push_back(t0);
        events.push_back(t1);
        if (pr.checker) checker_crossings(*pr.checker, origin, unit_dir, t0, t1, events);
    }
    premul_rgb = {0, 0, 0};
    alpha = 0;
    if (spans.empty()) return;
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    real T = 1;
    for (size_t e = 0; e + 1 < events.size(); ++e) {
        real a = events[e], b = events[e + 1];
        real len = b - a;
        if (!(len > 0)) continue;
        Vec3 mid = origin + unit_dir * ((a + b) * real(0.5));
        real tau = 0;
        Vec3 emission{0, 0, 0};
        for (const Span& s : spans) {
            if (a < s.t0 - 1e-12 || b > s.t1 + 1e-12) continue;
            tau += s.pr->tau;
            emission += s.pr->albedo_at(mid) * s.pr->tau;
        }
        if (tau <= 0) continue;
        Vec3 color = emission / tau;
        real seg_alpha = 1 - std::exp(-tau * len);
        premul_rgb += color * (T * seg_alpha);
        alpha += T * seg_alpha;
        T *= 1 - seg_alpha;
        if (T < 1e-12) break;
    }
}

Image oracle_render(const AnalyticScene& scene, const Camera& camera, int spp, uint64_t seed) {
    if (spp < 1) throw std::invalid_argument("oracle_render: spp must be >= 1");
    camera.validate();
    int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spp))));
    Image img(camera.width, camera.height);
    Vec3 cam_center = camera.center();

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int j = 0; j < camera.height; ++j) {
        for (int i = 0; i < camera.width; ++i) {
            Vec3 premul{0, 0, 0};
            real alpha = 0;
            int taken = 0;
            Rng rng(hash_combine(seed, (static_cast<uint64_t>(j) << 32) | static_cast<uint32_t>(i)));
            for (int sy = 0; sy < grid && taken < spp; ++sy)
                for (int sx = 0; sx < grid && taken < spp; ++sx, ++taken) {
                    real px = i + (sx + rng.uniform()) / grid;
                    real py = j + (sy + rng.uniform()) / grid;
                    real u = (px - camera.cx) / camera.fx;
                    real v = (py - camera.cy) / camera.fy;
                    Vec3 dir = normalized(camera.cam_to_world.apply_vector({u, v, 1}));
                    Vec3 c;
                    real a;
                    oracle_trace(scene, cam_center, dir, c, a);
                    premul += c;
                    alpha += a;
                }
            premul = premul / static_cast<real>(spp);
            alpha /= static_cast<real>(spp);
            Vec3 straight = alpha > 1e-12 ? premul / alpha : Vec3{0, 0, 0};
            img.set(i, j, {clamp(straight.x, 0, 1), clamp(straight.y, 0, 1),
                           clamp(straight.z, 0, 1)}, alpha);
        }
    }
    return img;
}

AnalyticScene generate_scene(const std::string& spec, uint64_t seed) {
    (void)seed;  // fixtures are fully determined; seed drives camera jitter only
    AnalyticScene scene;
    scene.aabb = Aabb{{-1, -1, -1}, {1, 1, 1}};
    scene.background = {1, 1, 1};
    if (spec == "single-sphere") {
        Primitive p;
        p.shape = Primitive::Shape::Sphere;
        p.center = {0, 0, 0};
        p.radius = 0.5;
        p.tau = 60;
        p.albedo = {0.75, 0.3, 0.25};
        scene.primitives.push_back(p);
    } else if (spec == "checker-plane") {
        Primitive p;
        p.shape = Primitive::Shape::Box;
        p.box = Aabb{{-0.9, -0.9, -0.06}, {0.9, 0.9, 0.06}};
        p.tau = 200;
        CheckerTexture tex;
        real cell = real(1.8) / 32;  // 32x32 cells across the slab
        tex.cell = {cell, cell, 1e6};
        tex.origin = {-0.9, -0.9, -1e3};
        p.checker = tex;
        scene.primitives.push_back(p);
    } else if (spec == "checker-sphere") {
        Primitive p;
        p.shape = Primitive::Shape::Sphere;
        p.center = {0, 0, 0};
        p.radius = 0.55;
        p.tau = 120;
        CheckerTexture tex;
        tex.cell = {0.11, 0.11, 0.11};
        tex.origin = {-1, -1, -1};
        p.checker = tex;
        scene.primitives.push_back(p);
    } else if (spec.empty()) {
        throw std::invalid_argument("generate_scene: empty spec");
    } else {
        throw std::invalid_argument("generate_scene: unknown spec '" + spec + "'");
    }
    return scene;
}

std::vector<Camera> orbit_cameras(int count, int width, int height, real fov_x, real orbit_radius,
                                  uint64_t seed, int phase) {
    std::vector<Camera> cams;
    cams.reserve(count);
    Rng rng(hash_combine(seed, 0x0cb17a5ull + phase));
    for (int k = 0; k < count; ++k) {
        real az = 2 * kPi * (k + rng.uniform() * real(0.5)) / count + phase * real(0.37);
        real el_frac = static_cast<real>((k * 7) % count) / std::max(1, count - 1);
        real el = (real(25) + 40 * el_frac) * kPi / 180;
        Vec3 eye{orbit_radius * std::cos(az) * std::cos(el),
                 orbit_radius * std::sin(az) * std::cos(el), orbit_radius * std::sin(el)};
        Vec3 fwd = normalized(Vec3{0, 0, 0} - eye);
        Vec3 up{0, 0, 1};
        Vec3 right = normalized(cross(fwd, up));
        Vec3 down = cross(fwd, right);  // y-down image axis
        Camera cam;
        cam.width = width;
        cam.height = height;
        cam.fx = real(0.5) * width / std::tan(real(0.5) * fov_x);
        cam.fy = cam.fx;
        cam.cx = width * real(0.5);
        cam.cy = height * real(0.5);
        Mat4 m = Mat4::identity();
        for (int r = 0; r < 3; ++r) {
            m.m[r][0] = right[r];
            m.m[r][1] = down[r];
            m.m[r][2] = fwd[r];
            m.m[r][3] = eye[r];
        }
        cam.cam_to_world = m;
        cams.push_back(cam);
    }
    return cams;
}

}  // namespace trimip
