#pragma once

#include <cstdint>
#include <string>

#include "trimip/dataset.hpp"
#include "trimip/trainer.hpp"

namespace trimip {

// One declarative document covering every module's knobs. Unknown keys are
// rejected on load; flag overrides go through `apply_override`.
struct RunConfig {
    uint64_t seed = 0;

    // mipmap
    int mip_size = 64;
    int mip_channels = 8;
    bool single_level = false;

    // mlp
    int mlp_width = 128;

    // render
    real step_divisor = 256;
    Vec3 background{1, 1, 1};
    real early_stop_T = 1e-4;

    // occupancy grid
    bool grid_enabled = true;
    int grid_resolution = 64;
    real grid_decay = 0.95;
    long long grid_update_every = 16;
    real grid_threshold = 0.01;

    // train
    TrainConfig train;
    long long eval_every = 0;        // 0 = no periodic val eval
    long long checkpoint_every = 0;  // 0 = final checkpoint only

    // hybrid renderer
    real hybrid_delta_t_steps = 3;  // delta_t in units of the marching step
    int hybrid_n_samples = 8;
    real hybrid_iso_alpha = 0.05;   // iso chosen so per-step alpha matches
    int hybrid_mesh_resolution = 96;

    void validate() const;

    // Hash of everything that fixes checkpoint geometry (mipmap, mlp, grid
    // resolution, marching step rule); embedded in checkpoints so eval can
    // refuse silently drifted configurations.
    uint64_t geometry_hash() const;

    // Dotted-path override, value parsed as JSON (e.g. "train.total_steps=100").
    void apply_override(const std::string& keyvalue);

    std::string to_json() const;
};

RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text);

// Builds a fresh training state for a dataset AABB under this config.
TrainState make_train_state(const RunConfig& cfg, const Aabb& aabb);

}  // namespace trimip
