#pragma once

#include "trimip/math.hpp"

namespace trimip {

struct Aabb {
    Vec3 min{-1, -1, -1};
    Vec3 max{1, 1, 1};

    Vec3 extent() const { return max - min; }
    Vec3 center() const { return (min + max) * real(0.5); }
    real diagonal() const { return norm(extent()); }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
};

}  // namespace trimip
