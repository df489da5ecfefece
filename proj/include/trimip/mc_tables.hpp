#pragma once

#include <cstdint>

namespace trimip {

// Classic marching cubes lookup tables (Lorensen & Cline via P. Bourke).
// Corner convention: 0..3 counterclockwise on the z face, 4..7 above them;
// edge e connects kMcEdgeCorners[e][0..1].
extern const uint16_t kMcEdgeTable[256];
extern const int8_t kMcTriTable[256][16];

inline constexpr int kMcEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                              {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                              {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace trimip
