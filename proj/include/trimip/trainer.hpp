#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trimip/dataset.hpp"
#include "trimip/encoding.hpp"
#include "trimip/field.hpp"
#include "trimip/occupancy.hpp"
#include "trimip/renderer.hpp"

namespace trimip {

struct TrainConfig {
    real base_lr = 2e-3;
    real enc_lr_scale = 10;
    real weight_decay = 1e-5;
    long long total_steps = 25000;
    std::vector<long long> lr_decay_steps{12000, 18000, 20000, 22000};
    real lr_decay_factor = 0.6;
    long long target_spheres_per_batch = 262144;

    void validate() const;
};

// Learning rates at `step`: (mlp, encoding). Decay boundaries are inclusive.
std::pair<real, real> lr_at(long long step, const TrainConfig& cfg);

// weight * mean over 3 channels of (pred-gt)^2; writes d(loss)/d(pred)
// (unnormalized; the batch divides by the weight sum).
real photometric_loss(const Vec3& pred, const Vec3& gt, real weight, Vec3& d_pred);

// Number of rays that keeps spheres-per-batch near the target.
long long dynamic_batch(real rolling_spheres_per_ray, const TrainConfig& cfg);

struct AdamMoments {
    Tensor m, v;
};

// Decoupled weight decay (applied before the update), then a bias-corrected
// Adam step with the given global step t >= 1.
void adamw_update(Tensor& tensor, const Tensor& grad, AdamMoments& moments, real lr, real wd,
                  long long t, real beta1 = 0.9, real beta2 = 0.999, real eps = 1e-8);

struct TrainState {
    TriMipEncoding enc;
    FieldParams params;
    OccupancyGrid grid;
    bool grid_enabled = true;
    long long grid_update_every = 16;

    TrainConfig cfg;
    real march_step = 0;
    Vec3 background{1, 1, 1};
    uint64_t seed = 0;
    uint64_t config_hash = 0;

    long long step = 0;
    real rolling_spheres_per_ray = 128;
    std::map<std::string, AdamMoments> adam;

    // Per-step gradient scratch; reused, never serialized.
    struct Scratch;
    std::shared_ptr<Scratch> scratch;

    // All trainable tensors in fixed order: the three mipmap bases (the
    // encoding group) then the MLP tensors.
    template <typename Fn>
    void for_each_param(Fn&& fn) {
        fn("mip_xy", enc.planes[0].base(), true);
        fn("mip_xz", enc.planes[1].base(), true);
        fn("mip_yz", enc.planes[2].base(), true);
        params.for_each_tensor([&](const char* n, Tensor& t) { fn(n, t, false); });
    }
};

struct StepStats {
    real loss = 0;
    real psnr = 0;
    long long n_rays = 0;
    long long n_spheres = 0;
    real lr_mlp = 0;
};

// One optimization step: sample rays uniformly over every frame's pixels,
// render, backpropagate through compositing, the field and the encoding,
// apply AdamW with per-group learning rates, rebuild the pyramids, refresh
// the occupancy grid on schedule. Bit-deterministic for any thread count.
// Throws on a non-finite loss.
StepStats train_step(TrainState& state, const Dataset& dataset);

// Versioned binary container (magic TRIMIP01, named little-endian tensors).
// Load validates shapes against `state` and restores optimizer state, the
// occupancy grid, step counter and batch statistics bit-exactly.
void checkpoint_save(const TrainState& state, const std::string& path);
void checkpoint_load(TrainState& state, const std::string& path);

}  // namespace trimip
