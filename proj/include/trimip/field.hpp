#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trimip/math.hpp"
#include "trimip/rng.hpp"
#include "trimip/tensor.hpp"

namespace trimip {

inline constexpr int kShDim = 16;   // real SH up to degree 3
inline constexpr int kGeoDim = 15;  // geometric feature passed to the color head

// Real spherical harmonics basis values, degree 0..3, graphics normalization
// (no Condon-Shortley phase). Non-unit directions are normalized internally.
void sh_encode(const Vec3& dir, real out[kShDim]);

// exp(clamp(x, -15, 15)); the gradient passes through the clamp.
real trunc_exp(real x);

struct FieldOutput {
    real tau = 0;
    Vec3 rgb;
};

// Tiny MLP head: density net feat(3C) -> width -> 1+15 (ReLU between, raw
// f_geo, truncated exp on the density), color net [f_geo, sh(dir)](31) ->
// width -> width -> 3 with ReLU between and sigmoid output.
struct FieldParams {
    int feat_dim = 0;
    int width = 0;
    Tensor d_w1, d_b1, d_w2, d_b2;
    Tensor c_w1, c_b1, c_w2, c_b2, c_w3, c_b3;

    static FieldParams glorot_init(int feat_dim, int width, Rng& rng);

    // Fixed iteration order; also the checkpoint tensor order.
    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("d_w1", d_w1); fn("d_b1", d_b1);
        fn("d_w2", d_w2); fn("d_b2", d_b2);
        fn("c_w1", c_w1); fn("c_b1", c_b1);
        fn("c_w2", c_w2); fn("c_b2", c_b2);
        fn("c_w3", c_w3); fn("c_b3", c_b3);
    }
    template <typename Fn>
    void for_each_tensor(Fn&& fn) const {
        const_cast<FieldParams*>(this)->for_each_tensor(
            [&](const char* n, Tensor& t) { fn(n, static_cast<const Tensor&>(t)); });
    }
};

// Activation cache for one evaluation, reused across samples.
struct FieldScratch {
    std::vector<real> feat;    // input copy
    real sh[kShDim];
    std::vector<real> d_h;     // density hidden, post-ReLU
    std::vector<real> d_out;   // [sigma_pre, f_geo]
    std::vector<real> c_in;    // [f_geo, sh]
    std::vector<real> c_h1;    // post-ReLU
    std::vector<real> c_h2;    // post-ReLU
    real c_pre[3];             // pre-sigmoid
    FieldOutput out;
};

FieldOutput field_eval(const real* feat, const Vec3& dir, const FieldParams& params);
FieldOutput field_eval_cached(const real* feat, const Vec3& dir, const FieldParams& params,
                              FieldScratch& scratch);

struct FieldGrads {
    Tensor d_w1, d_b1, d_w2, d_b2;
    Tensor c_w1, c_b1, c_w2, c_b2, c_w3, c_b3;

    static FieldGrads like(const FieldParams& p);
    void zero();
    void add(const FieldGrads& other);

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("d_w1", d_w1); fn("d_b1", d_b1);
        fn("d_w2", d_w2); fn("d_b2", d_b2);
        fn("c_w1", c_w1); fn("c_b1", c_b1);
        fn("c_w2", c_w2); fn("c_b2", c_b2);
        fn("c_w3", c_w3); fn("c_b3", c_b3);
    }
};

// Exact reverse pass for one sample. Accumulates parameter gradients into
// `grads` and writes d(loss)/d(feature) to d_feat (length feat_dim). The view
// direction is treated as a constant.
void field_backward(const FieldScratch& scratch, const FieldParams& params, real d_tau,
                    const Vec3& d_rgb, FieldGrads& grads, real* d_feat);

}  // namespace trimip
