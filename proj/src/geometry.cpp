#include "trimip/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trimip {

void Camera::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("camera: non-positive resolution");
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("camera: non-positive focal length");
    // Rotation block must be orthonormal: |R^T R - I|_inf < 1e-9.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            real s = 0;
            for (int k = 0; k < 3; ++k) s += cam_to_world.m[k][i] * cam_to_world.m[k][j];
            real expect = i == j ? 1 : 0;
            if (std::abs(s - expect) >= 1e-9)
                throw std::invalid_argument("camera: rotation not orthonormal");
        }
    }
    for (int j = 0; j < 4; ++j) {
        real expect = j == 3 ? 1 : 0;
        if (std::abs(cam_to_world.m[3][j] - expect) >= 1e-12)
            throw std::invalid_argument("camera: last row must be [0 0 0 1]");
    }
}

Camera Camera::downscaled(int factor) const {
    Camera c = *this;
    c.width = width / factor;
    c.height = height / factor;
    real s = real(1) / factor;
    c.fx = fx * s;
    c.fy = fy * s;
    c.cx = cx * s;
    c.cy = cy * s;
    return c;
}

real pixel_disc_radius(const Camera& camera) {
    real dx = real(1) / camera.fx;
    real dy = real(1) / camera.fy;
    return std::sqrt(dx * dy / kPi);
}

Cone cone_for_pixel(const Camera& camera, int i, int j) {
    if (i < 0 || i >= camera.width || j < 0 || j >= camera.height)
        throw std::out_of_range("cone_for_pixel: pixel outside image");
    real u = (i + real(0.5) - camera.cx) / camera.fx;
    real v = (j + real(0.5) - camera.cy) / camera.fy;
    Vec3 d_cam{u, v, 1};
    Cone cone;
    cone.origin = camera.center();
    cone.dir = camera.cam_to_world.apply_vector(d_cam);
    cone.f = 1;
    cone.disc_radius = pixel_disc_radius(camera);
    // Rotation preserves the norm; computing it in camera units avoids the
    // rounding of the rotated components.
    cone.d_norm = std::sqrt(u * u + v * v + 1);
    return cone;
}

SphereSample sphere_at(const Cone& cone, real t) {
    if (!(t > 0)) throw std::invalid_argument("sphere_at: t must be positive");
    SphereSample s;
    s.t = t;
    s.center = cone.origin + cone.axis() * t;
    real lateral_sq = cone.d_norm * cone.d_norm - cone.f * cone.f;
    real lateral = std::sqrt(lateral_sq > 0 ? lateral_sq : 0);
    real a = lateral - cone.disc_radius;
    s.radius = t * cone.f * cone.disc_radius / (cone.d_norm * std::sqrt(a * a + cone.f * cone.f));
    return s;
}

std::optional<std::pair<real, real>> aabb_intersect(const Vec3& origin, const Vec3& unit_dir,
                                                    const Aabb& aabb) {
    real t_enter = 0;
    real t_exit = std::numeric_limits<real>::infinity();
    for (int a = 0; a < 3; ++a) {
        real o = origin[a], d = unit_dir[a];
        if (d == 0) {
            if (o < aabb.min[a] || o > aabb.max[a]) return std::nullopt;
            continue;
        }
        real inv = real(1) / d;
        real t1 = (aabb.min[a] - o) * inv;
        real t2 = (aabb.max[a] - o) * inv;
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > t_enter) t_enter = t1;
        if (t2 < t_exit) t_exit = t2;
    }
    if (t_exit < t_enter) return std::nullopt;
    return std::make_pair(t_enter, t_exit);
}

std::vector<real> sample_distances(const Cone& cone, const Aabb& aabb, real step,
                                   const OccupancyGrid* grid) {
    if (!(step > 0)) throw std::invalid_argument("sample_distances: step must be positive");
    std::vector<real> out;
    Vec3 axis = cone.axis();
    auto hit = aabb_intersect(cone.origin, axis, aabb);
    if (!hit) return out;
    auto [t_enter, t_exit] = *hit;
    real span = t_exit - t_enter;
    if (!(span > 0)) return out;
    auto count = static_cast<long long>(std::floor(span / step - real(0.5))) + 1;
    if (count <= 0) return out;
    out.reserve(static_cast<size_t>(count));
    for (long long k = 0; k < count; ++k) {
        real t = t_enter + (k + real(0.5)) * step;
        if (!(t > 0)) continue;
        if (grid && !grid->cell_occupied(cone.origin + axis * t)) continue;
        out.push_back(t);
    }
    return out;
}

}  // namespace trimip
