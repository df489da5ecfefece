#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "trimip/geometry.hpp"
#include "trimip/rng.hpp"

namespace trimip::test {

inline real rel_err(real got, real want) {
    real denom = std::max(std::abs(want), real(1e-300));
    return std::abs(got - want) / denom;
}

inline real vec_rel_err(const std::vector<real>& got, const std::vector<real>& want) {
    real num = 0, den = 0;
    for (size_t i = 0; i < got.size(); ++i) {
        real d = got[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), real(1e-300));
}

// Central finite difference of a scalar function of one scalar parameter.
inline real central_diff(const std::function<real(real)>& f, real x, real eps) {
    return (f(x + eps) - f(x - eps)) / (2 * eps);
}

// Random rotation from a normalized quaternion.
inline Mat4 random_pose(Rng& rng) {
    real q[4];
    real n2 = 0;
    for (auto& v : q) {
        v = rng.uniform(-1, 1);
        n2 += v * v;
    }
    real n = std::sqrt(n2);
    for (auto& v : q) v /= n;
    real w = q[0], x = q[1], y = q[2], z = q[3];
    Mat4 m = Mat4::identity();
    m.m[0][0] = 1 - 2 * (y * y + z * z);
    m.m[0][1] = 2 * (x * y - w * z);
    m.m[0][2] = 2 * (x * z + w * y);
    m.m[1][0] = 2 * (x * y + w * z);
    m.m[1][1] = 1 - 2 * (x * x + z * z);
    m.m[1][2] = 2 * (y * z - w * x);
    m.m[2][0] = 2 * (x * z - w * y);
    m.m[2][1] = 2 * (y * z + w * x);
    m.m[2][2] = 1 - 2 * (x * x + y * y);
    for (int r = 0; r < 3; ++r) m.m[r][3] = rng.uniform(-2, 2);
    return m;
}

inline Camera random_camera(Rng& rng) {
    Camera c;
    c.width = 8 + static_cast<int>(rng.below(1000));
    c.height = 8 + static_cast<int>(rng.below(1000));
    c.fx = rng.uniform(50, 1200);
    c.fy = rng.uniform(50, 1200);
    c.cx = c.width * rng.uniform(0.4, 0.6);
    c.cy = c.height * rng.uniform(0.4, 0.6);
    c.cam_to_world = random_pose(rng);
    return c;
}

// Tangency oracle for the inscribed-sphere radius: the sphere of radius r at
// distance t must touch the cone's lateral surface, i.e. some generatrix
// through the pixel-disc rim lies at distance exactly r from its center.
// Returns min over `k` sampled generatrices of |dist - r| / r. Built from the
// raw pixel geometry, independent of the Cone/sphere_at code paths.
inline real tangency_gap(const Camera& cam, int i, int j, real t, real r_impl, int k = 4096) {
    real u = (i + real(0.5) - cam.cx) / cam.fx;
    real v = (j + real(0.5) - cam.cy) / cam.fy;
    real disc_r = std::sqrt((1 / cam.fx) * (1 / cam.fy) / kPi);
    Vec3 d{u, v, 1};
    Vec3 axis = normalized(d);
    Vec3 center = axis * t;  // camera-space; rigid transforms preserve distances
    real psi = (u == 0 && v == 0) ? 0 : std::atan2(v, u);
    real best = std::numeric_limits<real>::infinity();
    for (int s = 0; s < k; ++s) {
        real phi = psi + kPi + 2 * kPi * s / k;
        Vec3 rim{u + disc_r * std::cos(phi), v + disc_r * std::sin(phi), 1};
        Vec3 g = normalized(rim);
        // distance from `center` to the line through the origin along g
        real proj = dot(center, g);
        real d2 = dot(center, center) - proj * proj;
        real dist = std::sqrt(d2 > 0 ? d2 : 0);
        best = std::min(best, std::abs(dist - r_impl));
    }
    return best / r_impl;
}

}  // namespace trimip::test
