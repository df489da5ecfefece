#include "trimip/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace trimip {

using nlohmann::json;

namespace {

Vec3 parse_background(const json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "white") return {1, 1, 1};
        if (s == "black") return {0, 0, 0};
        throw std::invalid_argument("config: background must be white/black or [r,g,b]");
    }
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("config: background must be white/black or [r,g,b]");
    return {j[0].get<real>(), j[1].get<real>(), j[2].get<real>()};
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j[key].get<T>();
}

}  // namespace

void RunConfig::validate() const {
    auto pow2 = [](int v) { return v >= 2 && (v & (v - 1)) == 0; };
    if (!pow2(mip_size)) throw std::invalid_argument("config: mipmap.size must be a power of two");
    if (mip_channels < 1) throw std::invalid_argument("config: mipmap.channels must be >= 1");
    if (mlp_width < 4) throw std::invalid_argument("config: mlp.width must be >= 4");
    if (!(step_divisor > 0)) throw std::invalid_argument("config: render.step_divisor must be > 0");
    if (grid_resolution < 4) throw std::invalid_argument("config: grid.resolution must be >= 4");
    if (!(grid_decay > 0 && grid_decay < 1))
        throw std::invalid_argument("config: grid.decay must be in (0,1)");
    if (grid_update_every < 1)
        throw std::invalid_argument("config: grid.update_every must be >= 1");
    if (hybrid_n_samples < 1 || !(hybrid_delta_t_steps > 0) ||
        !(hybrid_iso_alpha > 0 && hybrid_iso_alpha < 1) || hybrid_mesh_resolution < 8)
        throw std::invalid_argument("config: bad hybrid settings");
    train.validate();
}

uint64_t RunConfig::geometry_hash() const {
    std::ostringstream os;
    os << "mip:" << mip_size << "x" << mip_channels << ":" << (single_level ? 1 : 0)
       << "|mlp:" << mlp_width << "|grid:" << grid_resolution << "|stepdiv:" << step_divisor;
    std::string s = os.str();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h == 0 ? 1 : h;  // 0 means "unchecked" in checkpoint_load
}

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: parse error: " + std::string(e.what()));
    }
    require_keys(j, {"seed", "mipmap", "mlp", "render", "grid", "train", "hybrid"}, "top level");
    RunConfig c;
    get_if(j, "seed", c.seed);
    if (j.contains("mipmap")) {
        const auto& m = j["mipmap"];
        require_keys(m, {"size", "channels", "single_level"}, "mipmap");
        get_if(m, "size", c.mip_size);
        get_if(m, "channels", c.mip_channels);
        get_if(m, "single_level", c.single_level);
    }
    if (j.contains("mlp")) {
        const auto& m = j["mlp"];
        require_keys(m, {"width"}, "mlp");
        get_if(m, "width", c.mlp_width);
    }
    if (j.contains("render")) {
        const auto& m = j["render"];
        require_keys(m, {"step_divisor", "background", "early_stop_T"}, "render");
        get_if(m, "step_divisor", c.step_divisor);
        if (m.contains("background")) c.background = parse_background(m["background"]);
        get_if(m, "early_stop_T", c.early_stop_T);
    }
    if (j.contains("grid")) {
        const auto& m = j["grid"];
        require_keys(m, {"enabled", "resolution", "decay", "update_every", "threshold"}, "grid");
        get_if(m, "enabled", c.grid_enabled);
        get_if(m, "resolution", c.grid_resolution);
        get_if(m, "decay", c.grid_decay);
        get_if(m, "update_every", c.grid_update_every);
        get_if(m, "threshold", c.grid_threshold);
    }
    if (j.contains("train")) {
        const auto& m = j["train"];
        require_keys(m,
                     {"base_lr", "enc_lr_scale", "weight_decay", "total_steps", "lr_decay_steps",
                      "lr_decay_factor", "target_spheres_per_batch", "eval_every",
                      "checkpoint_every"},
                     "train");
        get_if(m, "base_lr", c.train.base_lr);
        get_if(m, "enc_lr_scale", c.train.enc_lr_scale);
        get_if(m, "weight_decay", c.train.weight_decay);
        get_if(m, "total_steps", c.train.total_steps);
        if (m.contains("lr_decay_steps"))
            c.train.lr_decay_steps = m["lr_decay_steps"].get<std::vector<long long>>();
        get_if(m, "lr_decay_factor", c.train.lr_decay_factor);
        get_if(m, "target_spheres_per_batch", c.train.target_spheres_per_batch);
        get_if(m, "eval_every", c.eval_every);
        get_if(m, "checkpoint_every", c.checkpoint_every);
    }
    if (j.contains("hybrid")) {
        const auto& m = j["hybrid"];
        require_keys(m, {"delta_t_steps", "n_samples", "iso_alpha", "mesh_resolution"}, "hybrid");
        get_if(m, "delta_t_steps", c.hybrid_delta_t_steps);
        get_if(m, "n_samples", c.hybrid_n_samples);
        get_if(m, "iso_alpha", c.hybrid_iso_alpha);
        get_if(m, "mesh_resolution", c.hybrid_mesh_resolution);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str());
}

void RunConfig::apply_override(const std::string& keyvalue) {
    auto eq = keyvalue.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like section.key=value: " + keyvalue);
    std::string key = keyvalue.substr(0, eq);
    std::string value = keyvalue.substr(eq + 1);
    // Round-trip through the json form so overrides share the loader's
    // validation and unknown-key handling.
    json j = json::parse(to_json());
    json v;
    try {
        v = json::parse(value);
    } catch (const json::exception&) {
        v = value;  // bare strings allowed (e.g. background=white)
    }
    auto dotpos = key.find('.');
    if (dotpos == std::string::npos) {
        j[key] = v;
    } else {
        j[key.substr(0, dotpos)][key.substr(dotpos + 1)] = v;
    }
    *this = config_from_json_text(j.dump());
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["mipmap"] = {{"size", mip_size}, {"channels", mip_channels}, {"single_level", single_level}};
    j["mlp"] = {{"width", mlp_width}};
    j["render"] = {{"step_divisor", step_divisor},
                   {"background", {background.x, background.y, background.z}},
                   {"early_stop_T", early_stop_T}};
    j["grid"] = {{"enabled", grid_enabled},
                 {"resolution", grid_resolution},
                 {"decay", grid_decay},
                 {"update_every", grid_update_every},
                 {"threshold", grid_threshold}};
    j["train"] = {{"base_lr", train.base_lr},
                  {"enc_lr_scale", train.enc_lr_scale},
                  {"weight_decay", train.weight_decay},
                  {"total_steps", train.total_steps},
                  {"lr_decay_steps", train.lr_decay_steps},
                  {"lr_decay_factor", train.lr_decay_factor},
                  {"target_spheres_per_batch", train.target_spheres_per_batch},
                  {"eval_every", eval_every},
                  {"checkpoint_every", checkpoint_every}};
    j["hybrid"] = {{"delta_t_steps", hybrid_delta_t_steps},
                   {"n_samples", hybrid_n_samples},
                   {"iso_alpha", hybrid_iso_alpha},
                   {"mesh_resolution", hybrid_mesh_resolution}};
    return j.dump(1);
}

TrainState make_train_state(const RunConfig& cfg, const Aabb& aabb) {
    cfg.validate();
    TrainState st;
    Rng rng(hash_combine(cfg.seed, 0x1817));
    st.enc = TriMipEncoding::create(cfg.mip_size, cfg.mip_channels, aabb, cfg.single_level, rng);
    st.params = FieldParams::glorot_init(3 * cfg.mip_channels, cfg.mlp_width, rng);
    st.march_step = aabb.diagonal() / cfg.step_divisor;
    st.grid = OccupancyGrid(cfg.grid_resolution, aabb, st.march_step, cfg.grid_threshold,
                            cfg.grid_decay);
    st.grid_enabled = cfg.grid_enabled;
    st.grid_update_every = cfg.grid_update_every;
    st.cfg = cfg.train;
    st.background = cfg.background;
    st.seed = cfg.seed;
    st.config_hash = cfg.geometry_hash();
    st.rolling_spheres_per_ray = std::max<real>(1, cfg.step_divisor / 2);
    return st;
}

}  // namespace trimip
