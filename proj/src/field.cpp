#include "trimip/field.hpp"

#include <cmath>
#include <stdexcept>

namespace trimip {

void sh_encode(const Vec3& dir, real out[kShDim]) {
    Vec3 d = dir;
    real n = norm(d);
    if (std::abs(n - 1) > 1e-6) {
        if (!(n > 0)) throw std::invalid_argument("sh_encode: zero direction");
        d = d / n;
    }
    real x = d.x, y = d.y, z = d.z;
    real xx = x * x, yy = y * y, zz = z * z;
    out[0] = real(0.28209479177387814);
    out[1] = real(0.4886025119029199) * y;
    out[2] = real(0.4886025119029199) * z;
    out[3] = real(0.4886025119029199) * x;
    out[4] = real(1.0925484305920792) * x * y;
    out[5] = real(1.0925484305920792) * y * z;
    out[6] = real(0.31539156525252005) * (3 * zz - 1);
    out[7] = real(1.0925484305920792) * x * z;
    out[8] = real(0.5462742152960396) * (xx - yy);
    out[9] = real(0.5900435899266435) * y * (3 * xx - yy);
    out[10] = real(2.890611442640554) * x * y * z;
    out[11] = real(0.4570457994644658) * y * (5 * zz - 1);
    out[12] = real(0.3731763325901154) * z * (5 * zz - 3);
    out[13] = real(0.4570457994644658) * x * (5 * zz - 1);
    out[14] = real(1.445305721320277) * z * (xx - yy);
    out[15] = real(0.5900435899266435) * x * (xx - 3 * yy);
}

real trunc_exp(real x) { return std::exp(clamp(x, -15, 15)); }

namespace {

// out[r] = W[r,:] . in + b[r], optionally ReLU'd.
void affine(const Tensor& w, const Tensor& b, const real* in, real* out, bool relu) {
    size_t rows = w.shape[0], cols = w.shape[1];
    const real* wd = w.data();
    for (size_t r = 0; r < rows; ++r) {
        real s = b[r];
        const real* row = wd + r * cols;
        for (size_t c = 0; c < cols; ++c) s += row[c] * in[c];
        out[r] = relu && s < 0 ? 0 : s;
    }
}

// Adjoint of affine(+ReLU): given d_out (already masked by ReLU if used),
// accumulates into gw, gb and writes d_in.
void affine_backward(const Tensor& w, const real* in, const real* d_out, Tensor& gw, Tensor& gb,
                     real* d_in) {
    size_t rows = w.shape[0], cols = w.shape[1];
    const real* wd = w.data();
    real* gwd = gw.data();
    if (d_in)
        for (size_t c = 0; c < cols; ++c) d_in[c] = 0;
    for (size_t r = 0; r < rows; ++r) {
        real g = d_out[r];
        gb[r] += g;
        const real* row = wd + r * cols;
        real* grow = gwd + r * cols;
        if (g == 0) continue;
        for (size_t c = 0; c < cols; ++c) {
            grow[c] += g * in[c];
            if (d_in) d_in[c] += g * row[c];
        }
    }
}

Tensor glorot(size_t rows, size_t cols, Rng& rng) {
    Tensor t({rows, cols});
    real a = std::sqrt(real(6) / static_cast<real>(rows + cols));
    for (auto& v : t.v) v = rng.uniform(-a, a);
    return t;
}

}  // namespace

FieldParams FieldParams::glorot_init(int feat_dim, int width, Rng& rng) {
    FieldParams p;
    p.feat_dim = feat_dim;
    p.width = width;
    auto w = static_cast<size_t>(width);
    auto f = static_cast<size_t>(feat_dim);
    p.d_w1 = glorot(w, f, rng);
    p.d_b1 = Tensor({w});
    p.d_w2 = glorot(1 + kGeoDim, w, rng);
    p.d_b2 = Tensor({1 + kGeoDim});
    p.c_w1 = glorot(w, kGeoDim + kShDim, rng);
    p.c_b1 = Tensor({w});
    p.c_w2 = glorot(w, w, rng);
    p.c_b2 = Tensor({w});
    p.c_w3 = glorot(3, w, rng);
    p.c_b3 = Tensor({3});
    return p;
}

FieldOutput field_eval_cached(const real* feat, const Vec3& dir, const FieldParams& params,
                              FieldScratch& s) {
    auto w = static_cast<size_t>(params.width);
    auto f = static_cast<size_t>(params.feat_dim);
    s.feat.assign(feat, feat + f);
    sh_encode(dir, s.sh);
    s.d_h.resize(w);
    s.d_out.resize(1 + kGeoDim);
    affine(params.d_w1, params.d_b1, feat, s.d_h.data(), true);
    affine(params.d_w2, params.d_b2, s.d_h.data(), s.d_out.data(), false);
    s.out.tau = trunc_exp(s.d_out[0]);

    s.c_in.resize(kGeoDim + kShDim);
    for (int k = 0; k < kGeoDim; ++k) s.c_in[k] = s.d_out[1 + k];
    for (int k = 0; k < kShDim; ++k) s.c_in[kGeoDim + k] = s.sh[k];
    s.c_h1.resize(w);
    s.c_h2.resize(w);
    affine(params.c_w1, params.c_b1, s.c_in.data(), s.c_h1.data(), true);
    affine(params.c_w2, params.c_b2, s.c_h1.data(), s.c_h2.data(), true);
    affine(params.c_w3, params.c_b3, s.c_h2.data(), s.c_pre, false);
    for (int k = 0; k < 3; ++k) s.out.rgb[k] = real(1) / (real(1) + std::exp(-s.c_pre[k]));
    return s.out;
}

FieldOutput field_eval(const real* feat, const Vec3& dir, const FieldParams& params) {
    FieldScratch s;
    return field_eval_cached(feat, dir, params, s);
}

FieldGrads FieldGrads::like(const FieldParams& p) {
    FieldGrads g;
    g.d_w1 = Tensor(p.d_w1.shape); g.d_b1 = Tensor(p.d_b1.shape);
    g.d_w2 = Tensor(p.d_w2.shape); g.d_b2 = Tensor(p.d_b2.shape);
    g.c_w1 = Tensor(p.c_w1.shape); g.c_b1 = Tensor(p.c_b1.shape);
    g.c_w2 = Tensor(p.c_w2.shape); g.c_b2 = Tensor(p.c_b2.shape);
    g.c_w3 = Tensor(p.c_w3.shape); g.c_b3 = Tensor(p.c_b3.shape);
    return g;
}

void FieldGrads::zero() {
    for_each_tensor([](const char*, Tensor& t) { t.zero(); });
}

void FieldGrads::add(const FieldGrads& other) {
    d_w1.add(other.d_w1); d_b1.add(other.d_b1);
    d_w2.add(other.d_w2); d_b2.add(other.d_b2);
    c_w1.add(other.c_w1); c_b1.add(other.c_b1);
    c_w2.add(other.c_w2); c_b2.add(other.c_b2);
    c_w3.add(other.c_w3); c_b3.add(other.c_b3);
}

void field_backward(const FieldScratch& s, const FieldParams& params, real d_tau,
                    const Vec3& d_rgb, FieldGrads& grads, real* d_feat) {
    auto w = static_cast<size_t>(params.width);

    // Color head, sigmoid first.
    real d_cpre[3];
    for (int k = 0; k < 3; ++k) {
        real sv = s.out.rgb[k];
        d_cpre[k] = d_rgb[k] * sv * (1 - sv);
    }
    std::vector<real> d_ch2(w), d_ch1(w), d_cin(kGeoDim + kShDim);
    affine_backward(params.c_w3, s.c_h2.data(), d_cpre, grads.c_w3, grads.c_b3, d_ch2.data());
    for (size_t r = 0; r < w; ++r)
        if (s.c_h2[r] == 0) d_ch2[r] = 0;
    affine_backward(params.c_w2, s.c_h1.data(), d_ch2.data(), grads.c_w2, grads.c_b2, d_ch1.data());
    for (size_t r = 0; r < w; ++r)
        if (s.c_h1[r] == 0) d_ch1[r] = 0;
    affine_backward(params.c_w1, s.c_in.data(), d_ch1.data(), grads.c_w1, grads.c_b1, d_cin.data());

    // Density head. d_out[0] feeds trunc_exp (pass-through clamp gradient),
    // d_out[1..] is f_geo feeding the color head.
    std::vector<real> d_dout(1 + kGeoDim), d_dh(w);
    d_dout[0] = d_tau * s.out.tau;
    for (int k = 0; k < kGeoDim; ++k) d_dout[1 + k] = d_cin[k];
    affine_backward(params.d_w2, s.d_h.data(), d_dout.data(), grads.d_w2, grads.d_b2, d_dh.data());
    for (size_t r = 0; r < w; ++r)
        if (s.d_h[r] == 0) d_dh[r] = 0;
    affine_backward(params.d_w1, s.feat.data(), d_dh.data(), grads.d_w1, grads.d_b1, d_feat);
}

}  // namespace trimip
