#include "trimip/renderer.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trimip {

CompositeResult composite(std::span<const real> taus, std::span<const Vec3> colors,
                          std::span<const real> ts, real trailing_step, const Vec3& background,
                          real early_stop_T) {
    size_t n = ts.size();
    if (taus.size() != n || colors.size() != n)
        throw std::invalid_argument("composite: length mismatch");
    for (size_t i = 1; i < n; ++i)
        if (ts[i] < ts[i - 1]) throw std::invalid_argument("composite: ts not sorted");

    CompositeResult res;
    res.weights.assign(n, real(0));
    real T = 1;
    real depth_sum = 0;
    for (size_t i = 0; i < n; ++i) {
        if (early_stop_T > 0 && T < early_stop_T) break;
        real delta = i + 1 < n ? ts[i + 1] - ts[i] : trailing_step;
        real alpha = 1 - std::exp(-taus[i] * delta);
        real w = T * alpha;
        res.weights[i] = w;
        res.rgb += colors[i] * w;
        depth_sum += w * ts[i];
        res.opacity += w;
        T *= 1 - alpha;
    }
    res.rgb += background * (1 - res.opacity);
    res.depth = depth_sum / std::max(res.opacity, real(1e-10));
    return res;
}

void composite_backward(std::span<const real> taus, std::span<const Vec3> colors,
                        std::span<const real> ts, real trailing_step, const Vec3& background,
                        const Vec3& d_rgb, std::span<real> d_taus, std::span<Vec3> d_colors) {
    size_t n = ts.size();
    // Replay the forward pass; no early stop on gradient paths.
    std::vector<real> delta(n), w(n), t_after(n);
    real T = 1;
    for (size_t i = 0; i < n; ++i) {
        delta[i] = i + 1 < n ? ts[i + 1] - ts[i] : trailing_step;
        real alpha = 1 - std::exp(-taus[i] * delta[i]);
        w[i] = T * alpha;
        T *= 1 - alpha;
        t_after[i] = T;  // prod_{k<=i} (1-alpha_k)
    }
    // rgb = sum w_i c_i + (1 - sum w_i) bg gives dL/dw_i = d_rgb . (c_i - bg);
    // with w_i = alpha_i prod_{k<i}(1-alpha_k) and 1-alpha = exp(-tau delta):
    // dL/dtau_j = delta_j (dL/dw_j prod_{k<=j}(1-alpha_k) - sum_{i>j} dL/dw_i w_i).
    std::vector<real> dLdw(n);
    for (size_t i = 0; i < n; ++i) {
        dLdw[i] = dot(d_rgb, colors[i] - background);
        d_colors[i] = d_rgb * w[i];
    }
    real suffix = 0;
    for (size_t j = n; j-- > 0;) {
        d_taus[j] = delta[j] * (dLdw[j] * t_after[j] - suffix);
        suffix += dLdw[j] * w[j];
    }
}

PixelResult render_pixel(const Cone& cone, const TriMipEncoding& enc, const FieldParams& params,
                         const RenderOptions& opts) {
    std::vector<real> ts = sample_distances(cone, enc.aabb, opts.step, opts.grid);
    PixelResult out;
    out.rgb = opts.background;
    if (ts.empty()) return out;

    std::vector<real> feat(enc.feat_dim());
    Vec3 dir = cone.axis();
    FieldScratch scratch;

    real T = 1;
    real depth_sum = 0;
    size_t n = ts.size();
    Vec3 accum{0, 0, 0};
    real opacity = 0;
    for (size_t i = 0; i < n; ++i) {
        if (opts.early_stop_T > 0 && T < opts.early_stop_T) break;
        SphereSample sph = sphere_at(cone, ts[i]);
        encode(sph, enc, feat.data());
        FieldOutput fo = field_eval_cached(feat.data(), dir, params, scratch);
        ++out.n_field_evals;
        real delta = i + 1 < n ? ts[i + 1] - ts[i] : opts.step;
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

namespace {

Image render_image_impl(const Camera& camera, const TriMipEncoding& enc, const FieldParams& params,
                        const RenderOptions& opts, RenderStats* stats, std::vector<real>* depth,
                        bool parallel) {
    camera.validate();
    Image img(camera.width, camera.height);
    if (depth) depth->assign(static_cast<size_t>(camera.width) * camera.height, real(0));
    long long evals = 0;

#ifdef _OPENMP
    int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#else
    int nthreads = 1;
#endif
    (void)nthreads;

    auto run_row = [&](int j, long long& row_evals) {
        for (int i = 0; i < camera.width; ++i) {
            Cone cone = cone_for_pixel(camera, i, j);
            PixelResult p = render_pixel(cone, enc, params, opts);
            img.set(i, j, p.rgb, p.opacity);
            if (depth) (*depth)[static_cast<size_t>(j) * camera.width + i] = p.depth;
            row_evals += p.n_field_evals;
        }
    };

    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : evals) num_threads(nthreads)
        for (int j = 0; j < camera.height; ++j) {
            long long row_evals = 0;
            run_row(j, row_evals);
            evals += row_evals;
        }
#else
        for (int j = 0; j < camera.height; ++j) run_row(j, evals);
#endif
    } else {
        for (int j = 0; j < camera.height; ++j) run_row(j, evals);
    }

    if (stats) {
        stats->n_field_evals += evals;
        stats->n_pixels += static_cast<long long>(camera.width) * camera.height;
    }
    return img;
}

}  // namespace

Image render_image(const Camera& camera, const TriMipEncoding& enc, const FieldParams& params,
                   const RenderOptions& opts, RenderStats* stats, std::vector<real>* depth) {
    return render_image_impl(camera, enc, params, opts, stats, depth, true);
}

Image render_image_serial(const Camera& camera, const TriMipEncoding& enc,
                          const FieldParams& params, const RenderOptions& opts,
                          RenderStats* stats, std::vector<real>* depth) {
    return render_image_impl(camera, enc, params, opts, stats, depth, false);
}

void occupancy_update(OccupancyGrid& grid, const TriMipEncoding& enc, const FieldParams& params,
                      uint64_t seed, uint64_t step) {
    int res = grid.resolution;
    real query_radius = grid.cell_half_diagonal();
    Vec3 ext = grid.aabb.extent();
    Vec3 dir{0, 0, 1};  // density ignores direction; any fixed one works
    std::vector<real> feat(enc.feat_dim());

#ifdef _OPENMP
#pragma omp parallel for schedule(static) firstprivate(feat)
#endif
    for (int iz = 0; iz < res; ++iz) {
        FieldScratch scratch;
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                size_t idx = grid.cell_index(ix, iy, iz);
                Rng rng(hash_combine(seed, hash_combine(step, idx)));
                Vec3 p{grid.aabb.min.x + (ix + rng.uniform()) / res * ext.x,
                       grid.aabb.min.y + (iy + rng.uniform()) / res * ext.y,
                       grid.aabb.min.z + (iz + rng.uniform()) / res * ext.z};
                SphereSample sph;
                sph.center = p;
                sph.radius = query_radius;
                sph.t = 1;
                encode(sph, enc, feat.data());
                real tau = field_eval_cached(feat.data(), dir, params, scratch).tau;
                real decayed = grid.decay * grid.occupancy[idx];
                grid.occupancy[idx] = decayed > tau ? decayed : tau;
            }
    }
    grid.rebinarize();
}

}  // namespace trimip
