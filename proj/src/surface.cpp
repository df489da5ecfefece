#include "trimip/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "trimip/mc_tables.hpp"
#include "trimip/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trimip {

real iso_for_alpha(real alpha, real step) { return -std::log(1 - alpha) / step; }

DensityGrid extract_density_grid(const TriMipEncoding& enc, const FieldParams& params,
                                 int resolution) {
    if (resolution < 8) throw std::invalid_argument("extract_density_grid: resolution < 8");
    DensityGrid grid;
    grid.resolution = resolution;
    grid.aabb = enc.aabb;
    grid.tau.assign(static_cast<size_t>(resolution) * resolution * resolution, real(0));
    real query_radius = real(0.5) * grid.aabb.diagonal() / resolution;
    Vec3 dir{0, 0, 1};

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int iz = 0; iz < resolution; ++iz) {
        std::vector<real> feat(enc.feat_dim());
        FieldScratch scratch;
        for (int iy = 0; iy < resolution; ++iy)
            for (int ix = 0; ix < resolution; ++ix) {
                SphereSample sph;
                sph.center = grid.point(ix, iy, iz);
                sph.radius = query_radius;
                sph.t = 1;
                encode(sph, enc, feat.data());
                grid.at(ix, iy, iz) = field_eval_cached(feat.data(), dir, params, scratch).tau;
            }
    }
    return grid;
}

namespace {

// Corner offsets matching kMcTriTable's convention.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Undirected lattice-edge key for vertex sharing across cubes.
uint64_t edge_key(int n, int ix, int iy, int iz, int axis) {
    uint64_t p = (static_cast<uint64_t>(iz) * n + iy) * n + ix;
    return p * 3 + axis;
}

}  // namespace

ProxyMesh marching_cubes(const DensityGrid& grid, real iso) {
    if (!(iso > 0)) throw std::invalid_argument("marching_cubes: iso must be positive");
    ProxyMesh mesh;
    int n = grid.resolution;
    std::unordered_map<uint64_t, int> edge_vertex;
    std::unordered_map<uint64_t, int> weld;  // 1e-7-quantized position -> vertex

    auto vertex_on_edge = [&](int ix, int iy, int iz, int edge) -> int {
        int c0 = kMcEdgeCorners[edge][0], c1 = kMcEdgeCorners[edge][1];
        int ax = ix + kCorner[c0][0], ay = iy + kCorner[c0][1], az = iz + kCorner[c0][2];
        int bx = ix + kCorner[c1][0], by = iy + kCorner[c1][1], bz = iz + kCorner[c1][2];
        int axis = bx != ax ? 0 : (by != ay ? 1 : 2);
        // Key by the low corner so the two cubes sharing this edge agree.
        uint64_t key = edge_key(n, std::min(ax, bx), std::min(ay, by), std::min(az, bz), axis);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;

        real v0 = grid.at(ax, ay, az), v1 = grid.at(bx, by, bz);
        real t = v1 != v0 ? (iso - v0) / (v1 - v0) : real(0.5);
        t = clamp(t, 0, 1);
        Vec3 p0 = grid.point(ax, ay, az), p1 = grid.point(bx, by, bz);
        Vec3 p = p0 + (p1 - p0) * t;

        // Positional weld: surface crossings through lattice points make
        // several edges emit the same vertex.
        auto q = [&](real v) { return static_cast<int64_t>(std::llround(v * real(1e7))); };
        uint64_t wkey = hash_combine(hash_combine(static_cast<uint64_t>(q(p.x)),
                                                  static_cast<uint64_t>(q(p.y))),
                                     static_cast<uint64_t>(q(p.z)));
        int idx;
        auto wit = weld.find(wkey);
        if (wit != weld.end()) {
            idx = wit->second;
        } else {
            idx = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(p);
            weld.emplace(wkey, idx);
        }
        edge_vertex.emplace(key, idx);
        return idx;
    };

    for (int iz = 0; iz + 1 < n; ++iz)
        for (int iy = 0; iy + 1 < n; ++iy)
            for (int ix = 0; ix + 1 < n; ++ix) {
                int cube = 0;
                for (int c = 0; c < 8; ++c)
                    if (grid.at(ix + kCorner[c][0], iy + kCorner[c][1], iz + kCorner[c][2]) < iso)
                        cube |= 1 << c;
                if (kMcEdgeTable[cube] == 0) continue;
                const int8_t* tt = kMcTriTable[cube];
                for (int e = 0; tt[e] != -1; e += 3) {
                    int a = vertex_on_edge(ix, iy, iz, tt[e]);
                    int b = vertex_on_edge(ix, iy, iz, tt[e + 1]);
                    int c = vertex_on_edge(ix, iy, iz, tt[e + 2]);
                    if (a == b || b == c || a == c) continue;
                    Vec3 ab = mesh.vertices[b] - mesh.vertices[a];
                    Vec3 ac = mesh.vertices[c] - mesh.vertices[a];
                    if (norm(cross(ab, ac)) * real(0.5) <= 1e-12) continue;
                    mesh.triangles.push_back({a, b, c});
                }
            }
    mesh.build_bvh();
    return mesh;
}

void ProxyMesh::build_bvh() {
    nodes.clear();
    tri_order.resize(triangles.size());
    for (size_t i = 0; i < tri_order.size(); ++i) tri_order[i] = static_cast<int>(i);
    if (triangles.empty()) return;

    std::vector<Vec3> centroids(triangles.size());
    for (size_t i = 0; i < triangles.size(); ++i)
        centroids[i] = (vertices[triangles[i].v[0]] + vertices[triangles[i].v[1]] +
                        vertices[triangles[i].v[2]]) /
                       real(3);

    struct Range { int first, count, node; };
    std::vector<Range> stack;
    nodes.reserve(triangles.size() * 2);
    nodes.push_back({});
    stack.push_back({0, static_cast<int>(triangles.size()), 0});

    while (!stack.empty()) {
        auto [first, count, ni] = stack.back();
        stack.pop_back();
        Vec3 bb_min{1e30, 1e30, 1e30}, bb_max{-1e30, -1e30, -1e30};
        for (int k = first; k < first + count; ++k) {
            const Triangle& tr = triangles[tri_order[k]];
            for (int v = 0; v < 3; ++v) {
                bb_min = min(bb_min, vertices[tr.v[v]]);
                bb_max = max(bb_max, vertices[tr.v[v]]);
            }
        }
        nodes[ni].bb_min = bb_min;
        nodes[ni].bb_max = bb_max;
        if (count <= 4) {
            nodes[ni].first = first;
            nodes[ni].count = count;
            continue;
        }
        Vec3 ext = bb_max - bb_min;
        int axis = ext.x > ext.y ? (ext.x > ext.z ? 0 : 2) : (ext.y > ext.z ? 1 : 2);
        int mid = first + count / 2;
        std::nth_element(tri_order.begin() + first, tri_order.begin() + mid,
                         tri_order.begin() + first + count, [&](int a, int b) {
                             return centroids[a][axis] < centroids[b][axis];
                         });
        int li = static_cast<int>(nodes.size());
        nodes.push_back({});
        int ri = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[ni].left = li;
        nodes[ni].right = ri;
        nodes[ni].count = 0;
        stack.push_back({first, mid - first, li});
        stack.push_back({mid, first + count - mid, ri});
    }
}

namespace {

// Moller-Trumbore; returns the nearest t > eps or nothing.
std::optional<real> tri_hit(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                            const Vec3& c) {
    constexpr real eps = 1e-12;
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pvec = cross(d, e2);
    real det = dot(e1, pvec);
    if (std::abs(det) < eps) return std::nullopt;
    real inv_det = 1 / det;
    Vec3 tvec = o - a;
    real u = dot(tvec, pvec) * inv_det;
    if (u < 0 || u > 1) return std::nullopt;
    Vec3 qvec = cross(tvec, e1);
    real v = dot(d, qvec) * inv_det;
    if (v < 0 || u + v > 1) return std::nullopt;
    real t = dot(e2, qvec) * inv_det;
    if (t <= 1e-9) return std::nullopt;
    return t;
}

bool slab_hit(const Vec3& o, const Vec3& inv_d, const Vec3& bb_min, const Vec3& bb_max,
              real t_best) {
    real t0 = 0, t1 = t_best;
    for (int a = 0; a < 3; ++a) {
        real ta = (bb_min[a] - o[a]) * inv_d[a];
        real tb = (bb_max[a] - o[a]) * inv_d[a];
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
    }
    return t0 <= t1;
}

}  // namespace

std::optional<real> ray_mesh_hit(const ProxyMesh& mesh, const Vec3& origin, const Vec3& unit_dir) {
    if (mesh.nodes.empty()) return std::nullopt;
    Vec3 inv_d{1 / unit_dir.x, 1 / unit_dir.y, 1 / unit_dir.z};
    real best = std::numeric_limits<real>::infinity();
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const auto& node = mesh.nodes[stack[--sp]];
        if (!slab_hit(origin, inv_d, node.bb_min, node.bb_max, best)) continue;
        if (node.is_leaf()) {
            for (int k = node.first; k < node.first + node.count; ++k) {
                const Triangle& tr = mesh.triangles[mesh.tri_order[k]];
                auto t = tri_hit(origin, unit_dir, mesh.vertices[tr.v[0]], mesh.vertices[tr.v[1]],
                                 mesh.vertices[tr.v[2]]);
                if (t && *t < best) best = *t;
            }
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right;
        }
    }
    if (std::isinf(best)) return std::nullopt;
    return best;
}

std::optional<real> ray_mesh_hit_brute(const ProxyMesh& mesh, const Vec3& origin,
                                       const Vec3& unit_dir) {
    real best = std::numeric_limits<real>::infinity();
    for (const Triangle& tr : mesh.triangles) {
        auto t = tri_hit(origin, unit_dir, mesh.vertices[tr.v[0]], mesh.vertices[tr.v[1]],
                         mesh.vertices[tr.v[2]]);
        if (t && *t < best) best = *t;
    }
    if (std::isinf(best)) return std::nullopt;
    return best;
}

std::vector<real> hybrid_sample(real t_hit, real delta_t, int n) {
    if (n < 1 || !(delta_t > 0)) throw std::invalid_argument("hybrid_sample: bad arguments");
    std::vector<real> out(static_cast<size_t>(n));
    real step = 2 * delta_t / n;
    for (int k = 0; k < n; ++k)
        out[static_cast<size_t>(k)] = std::max(t_hit - delta_t + (k + real(0.5)) * step, real(1e-6));
    return out;
}

PixelResult render_pixel_hybrid(const Cone& cone, const ProxyMesh& mesh,
                                const TriMipEncoding& enc, const FieldParams& params,
                                const HybridOptions& opts) {
    PixelResult out;
    out.rgb = opts.background;
    auto hit = ray_mesh_hit(mesh, cone.origin, cone.axis());
    if (!hit) return out;

    std::vector<real> ts = hybrid_sample(*hit, opts.delta_t, opts.n_samples);
    real step = 2 * opts.delta_t / opts.n_samples;
    std::vector<real> feat(enc.feat_dim());
    Vec3 dir = cone.axis();
    FieldScratch scratch;

    real T = 1, opacity = 0, depth_sum = 0;
    Vec3 accum{0, 0, 0};
    size_t n = ts.size();
    for (size_t i = 0; i < n; ++i) {
        SphereSample sph = sphere_at(cone, ts[i]);
        encode(sph, enc, feat.data());
        FieldOutput fo = field_eval_cached(feat.data(), dir, params, scratch);
        ++out.n_field_evals;
        real delta = i + 1 < n ? ts[i + 1] - ts[i] : step;
        real alpha = 1 - std::exp(-fo.tau * delta);
        real w = T * alpha;
        accum += fo.rgb * w;
        depth_sum += w * ts[i];
        opacity += w;
        T *= 1 - alpha;
    }
    out.rgb = accum + opts.background * (1 - opacity);
    out.opacity = opacity;
    out.depth = depth_sum / std::max(opacity, real(1e-10));
    return out;
}

Image render_image_hybrid(const Camera& camera, const ProxyMesh& mesh, const TriMipEncoding& enc,
                          const FieldParams& params, const HybridOptions& opts,
                          RenderStats* stats, std::vector<real>* depth) {
    camera.validate();
    Image img(camera.width, camera.height);
    if (depth) depth->assign(static_cast<size_t>(camera.width) * camera.height, real(0));
    long long evals = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : evals)
#endif
    for (int j = 0; j < camera.height; ++j) {
        for (int i = 0; i < camera.width; ++i) {
            Cone cone = cone_for_pixel(camera, i, j);
            PixelResult p = render_pixel_hybrid(cone, mesh, enc, params, opts);
            img.set(i, j, p.rgb, p.opacity);
            if (depth) (*depth)[static_cast<size_t>(j) * camera.width + i] = p.depth;
            evals += p.n_field_evals;
        }
    }
    if (stats) {
        stats->n_field_evals += evals;
        stats->n_pixels += static_cast<long long>(camera.width) * camera.height;
    }
    return img;
}

void save_obj(const ProxyMesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_obj: cannot open " + path);
    os << "# proxy mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
       << " triangles\n";
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        os << buf;
    }
    for (const Triangle& t : mesh.triangles)
        os << "f " << t.v[0] + 1 << " " << t.v[1] + 1 << " " << t.v[2] + 1 << "\n";
    if (!os) throw std::runtime_error("save_obj: write failed for " + path);
}

}  // namespace trimip
