#include "trimip/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trimip/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trimip {

namespace {
// Fixed chunk count decouples gradient reduction order from the number of
// worker threads: rays map to chunks by index, chunks reduce in index order.
constexpr int kGradChunks = 32;
}  // namespace

void TrainConfig::validate() const {
    if (!(base_lr > 0) || !(enc_lr_scale > 0) || weight_decay < 0 || total_steps <= 0 ||
        !(lr_decay_factor > 0) || target_spheres_per_batch <= 0)
        throw std::invalid_argument("train config: non-positive entries");
    for (size_t i = 0; i < lr_decay_steps.size(); ++i) {
        if (lr_decay_steps[i] >= total_steps)
            throw std::invalid_argument("train config: decay step beyond total_steps");
        if (i > 0 && lr_decay_steps[i] <= lr_decay_steps[i - 1])
            throw std::invalid_argument("train config: decay steps must ascend");
    }
}

std::pair<real, real> lr_at(long long step, const TrainConfig& cfg) {
    int decays = 0;
    for (long long s : cfg.lr_decay_steps)
        if (s <= step) ++decays;
    real lr = cfg.base_lr * std::pow(cfg.lr_decay_factor, decays);
    return {lr, cfg.enc_lr_scale * lr};
}

real photometric_loss(const Vec3& pred, const Vec3& gt, real weight, Vec3& d_pred) {
    if (!(weight > 0)) throw std::invalid_argument("photometric_loss: weight must be positive");
    Vec3 diff = pred - gt;
    d_pred = diff * (2 * weight / 3);
    return weight * dot(diff, diff) / 3;
}

long long dynamic_batch(real rolling_spheres_per_ray, const TrainConfig& cfg) {
    if (!(rolling_spheres_per_ray > 0))
        throw std::invalid_argument("dynamic_batch: rolling average must be positive");
    auto n = static_cast<long long>(
        std::llround(static_cast<double>(cfg.target_spheres_per_batch) / rolling_spheres_per_ray));
    return std::clamp(n, 64ll, 1ll << 18);
}

void adamw_update(Tensor& tensor, const Tensor& grad, AdamMoments& moments, real lr, real wd,
                  long long t, real beta1, real beta2, real eps) {
    if (!tensor.same_shape(grad)) throw std::invalid_argument("adamw_update: shape mismatch");
    if (moments.m.v.empty()) {
        moments.m = Tensor(tensor.shape);
        moments.v = Tensor(tensor.shape);
    }
    real bc1 = 1 - std::pow(beta1, static_cast<real>(t));
    real bc2 = 1 - std::pow(beta2, static_cast<real>(t));
    for (size_t i = 0; i < tensor.size(); ++i) {
        tensor[i] -= lr * wd * tensor[i];
        real g = grad[i];
        real m = moments.m[i] = beta1 * moments.m[i] + (1 - beta1) * g;
        real v = moments.v[i] = beta2 * moments.v[i] + (1 - beta2) * g * g;
        tensor[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
}

struct TrainState::Scratch {
    struct Chunk {
        EncGradAccum enc;
        FieldGrads mlp;
        real loss_sum = 0;
        long long n_spheres = 0;
    };
    std::vector<Chunk> chunks;
};

namespace {

struct RayRef {
    int frame = 0;
    int px = 0, py = 0;
    real weight = 1;
};

// Reused per-ray buffers for the forward/backward pass.
struct RayWork {
    std::vector<SphereSample> spheres;
    std::vector<real> feats;  // n * feat_dim
    std::vector<FieldScratch> scratch;
    std::vector<real> taus;
    std::vector<Vec3> colors;
    std::vector<real> d_taus;
    std::vector<Vec3> d_colors;
    std::vector<real> d_feat;
};

void process_ray(const RayRef& ray, const Dataset& data, TrainState& st, real inv_weight_sum,
                 TrainState::Scratch::Chunk& chunk, RayWork& wk) {
    const Frame& frame = data.frames[ray.frame];
    Cone cone = cone_for_pixel(frame.camera, ray.px, ray.py);
    Vec3 gt = composite_over(frame.image.at(ray.px, ray.py), st.background);
    std::vector<real> ts = sample_distances(cone, st.enc.aabb, st.march_step,
                                            st.grid_enabled ? &st.grid : nullptr);
    size_t n = ts.size();
    chunk.n_spheres += static_cast<long long>(n);

    if (n == 0) {
        Vec3 unused;
        chunk.loss_sum += photometric_loss(st.background, gt, ray.weight, unused);
        return;  // prediction is the constant background; nothing to backprop
    }

    int fd = st.enc.feat_dim();
    wk.spheres.resize(n);
    wk.feats.resize(n * fd);
    if (wk.scratch.size() < n) wk.scratch.resize(n);
    wk.taus.resize(n);
    wk.colors.resize(n);
    wk.d_taus.resize(n);
    wk.d_colors.resize(n);
    wk.d_feat.resize(fd);

    Vec3 dir = cone.axis();
    for (size_t i = 0; i < n; ++i) {
        wk.spheres[i] = sphere_at(cone, ts[i]);
        encode(wk.spheres[i], st.enc, wk.feats.data() + i * fd);
        FieldOutput fo = field_eval_cached(wk.feats.data() + i * fd, dir, st.params, wk.scratch[i]);
        wk.taus[i] = fo.tau;
        wk.colors[i] = fo.rgb;
    }
    CompositeResult comp = composite(wk.taus, wk.colors, ts, st.march_step, st.background, 0);

    Vec3 d_pred;
    chunk.loss_sum += photometric_loss(comp.rgb, gt, ray.weight, d_pred);
    d_pred *= inv_weight_sum;

    composite_backward(wk.taus, wk.colors, ts, st.march_step, st.background, d_pred, wk.d_taus,
                       wk.d_colors);
    for (size_t i = 0; i < n; ++i) {
        field_backward(wk.scratch[i], st.params, wk.d_taus[i], wk.d_colors[i], chunk.mlp,
                       wk.d_feat.data());
        chunk.enc.scatter(wk.spheres[i], st.enc, wk.d_feat.data());
    }
}

}  // namespace

StepStats train_step(TrainState& state, const Dataset& dataset) {
    if (dataset.frames.empty()) throw std::invalid_argument("train_step: empty dataset");
    state.cfg.validate();

    if (!state.scratch) {
        state.scratch = std::make_shared<TrainState::Scratch>();
        state.scratch->chunks.resize(kGradChunks);
        for (auto& c : state.scratch->chunks) {
            c.enc = EncGradAccum::like(state.enc);
            c.mlp = FieldGrads::like(state.params);
        }
    }
    auto& chunks = state.scratch->chunks;
    for (auto& c : chunks) {
        c.enc.zero();
        c.mlp.zero();
        c.loss_sum = 0;
        c.n_spheres = 0;
    }

    // Ray sampling: uniform over the union of every frame's pixels (all
    // scales concatenated). One serial stream keeps it thread-independent.
    size_t total_pixels = dataset.total_pixels();
    if (total_pixels == 0 || total_pixels > 0xffffffffull)
        throw std::invalid_argument("train_step: pixel count out of supported range");
    long long n_rays = dynamic_batch(state.rolling_spheres_per_ray, state.cfg);

    Rng rng(hash_combine(state.seed, hash_mix(static_cast<uint64_t>(state.step) + 0x7261795f)));
    std::vector<RayRef> rays(static_cast<size_t>(n_rays));
    real weight_sum = 0;
    // Per-scale footprint weight (r_pixel / r_fullres)^2 = scale^2.
    for (auto& r : rays) {
        size_t pick = rng.below(static_cast<uint32_t>(total_pixels));
        size_t f = 0;
        while (true) {
            size_t np = static_cast<size_t>(dataset.frames[f].image.width) *
                        dataset.frames[f].image.height;
            if (pick < np) break;
            pick -= np;
            ++f;
        }
        const Frame& fr = dataset.frames[f];
        r.frame = static_cast<int>(f);
        r.px = static_cast<int>(pick % fr.image.width);
        r.py = static_cast<int>(pick / fr.image.width);
        r.weight = static_cast<real>(fr.scale) * fr.scale;
        weight_sum += r.weight;
    }
    real inv_weight_sum = 1 / weight_sum;

    long long per_chunk = (n_rays + kGradChunks - 1) / kGradChunks;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int c = 0; c < kGradChunks; ++c) {
        RayWork wk;
        long long lo = c * per_chunk;
        long long hi = std::min<long long>(n_rays, lo + per_chunk);
        for (long long r = lo; r < hi; ++r)
            process_ray(rays[static_cast<size_t>(r)], dataset, state, inv_weight_sum, chunks[c],
                        wk);
    }

    // Fixed-order reduction into chunk 0.
    real loss_sum = 0;
    long long n_spheres = 0;
    for (int c = 0; c < kGradChunks; ++c) {
        loss_sum += chunks[c].loss_sum;
        n_spheres += chunks[c].n_spheres;
        if (c > 0) {
            chunks[0].enc.add(chunks[c].enc);
            chunks[0].mlp.add(chunks[c].mlp);
        }
    }
    real loss = loss_sum * inv_weight_sum;

    for (int p = 0; p < 3; ++p) pyramid_grad_to_base(chunks[0].enc.levels[p]);

    if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train_step: non-finite loss at step " << state.step;
        auto [lm, le] = lr_at(state.step, state.cfg);
        os << " (lr_mlp=" << lm << ", lr_enc=" << le << ", grad norms:";
        for (int p = 0; p < 3; ++p) {
            real s = 0;
            for (real g : chunks[0].enc.levels[p][0].v) s += g * g;
            os << " enc[" << p << "]=" << std::sqrt(s);
        }
        os << ")";
        throw std::runtime_error(os.str());
    }

    // Parameter updates, per-group learning rates, then re-derive pyramids.
    auto [lr_mlp, lr_enc] = lr_at(state.step, state.cfg);
    std::vector<const Tensor*> grads;
    grads.push_back(&chunks[0].enc.levels[0][0]);
    grads.push_back(&chunks[0].enc.levels[1][0]);
    grads.push_back(&chunks[0].enc.levels[2][0]);
    chunks[0].mlp.for_each_tensor([&](const char*, Tensor& t) { grads.push_back(&t); });

    long long t = state.step + 1;
    size_t gi = 0;
    state.for_each_param([&](const char* name, Tensor& tensor, bool is_enc) {
        adamw_update(tensor, *grads[gi++], state.adam[name], is_enc ? lr_enc : lr_mlp,
                     state.cfg.weight_decay, t);
    });
    state.enc.rebuild_pyramids();

    state.rolling_spheres_per_ray = real(0.9) * state.rolling_spheres_per_ray +
                                    real(0.1) * (static_cast<real>(n_spheres) / n_rays);
    state.step += 1;

    if (state.grid_enabled && state.step % state.grid_update_every == 0)
        occupancy_update(state.grid, state.enc, state.params, state.seed,
                         static_cast<uint64_t>(state.step));

    StepStats stats;
    stats.loss = loss;
    stats.psnr = loss > 0 ? 10 * std::log10(real(1) / loss)
                          : std::numeric_limits<real>::infinity();
    stats.n_rays = n_rays;
    stats.n_spheres = n_spheres;
    stats.lr_mlp = lr_mlp;
    return stats;
}

// ---------------------------------------------------------------------------
// Checkpoint container.

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'M', 'I', 'P', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint8_t>(os, 1);  // f64
    write_pod<uint32_t>(os, static_cast<uint32_t>(t.shape.size()));
    for (size_t d : t.shape) write_pod<uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.v.data()),
             static_cast<std::streamsize>(t.v.size() * sizeof(real)));
}

std::pair<std::string, Tensor> read_tensor(std::istream& is) {
    auto name_len = read_pod<uint32_t>(is);
    if (name_len > 4096) throw std::runtime_error("checkpoint: absurd tensor name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated tensor name");
    auto dtype = read_pod<uint8_t>(is);
    if (dtype > 1) throw std::runtime_error("checkpoint: unknown dtype for tensor " + name);
    auto ndims = read_pod<uint32_t>(is);
    if (ndims > 8) throw std::runtime_error("checkpoint: too many dims for tensor " + name);
    std::vector<size_t> dims(ndims);
    uint64_t count = 1;
    for (auto& d : dims) {
        uint64_t v = read_pod<uint64_t>(is);
        if (v == 0 || v > (1ull << 32) || count > (1ull << 40) / std::max<uint64_t>(v, 1))
            throw std::runtime_error("checkpoint: dim overflow in tensor " + name);
        d = static_cast<size_t>(v);
        count *= v;
    }
    Tensor t(dims);
    if (dtype == 1) {
        is.read(reinterpret_cast<char*>(t.v.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        std::vector<float> tmp(count);
        is.read(reinterpret_cast<char*>(tmp.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        for (uint64_t i = 0; i < count; ++i) t.v[i] = tmp[i];
    }
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data in " + name);
    return {name, std::move(t)};
}

template <typename Fn>
void for_each_state_tensor(TrainState& state, Fn&& fn) {
    state.for_each_param([&](const char* name, Tensor& t, bool) { fn(std::string(name), t); });
    state.for_each_param([&](const char* name, Tensor& t, bool) {
        auto& mom = state.adam[name];
        if (mom.m.v.empty()) {
            mom.m = Tensor(t.shape);
            mom.v = Tensor(t.shape);
        }
        fn("adam_m." + std::string(name), mom.m);
        fn("adam_v." + std::string(name), mom.v);
    });
}

}  // namespace

void checkpoint_save(const TrainState& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint_save: cannot open " + path);
    os.write(kMagic, 8);
    write_pod<uint64_t>(os, static_cast<uint64_t>(state.step));
    write_pod<uint64_t>(os, state.config_hash);

    auto& st = const_cast<TrainState&>(state);
    uint32_t n = 0;
    for_each_state_tensor(st, [&](const std::string&, Tensor&) { ++n; });
    n += 3;  // occupancy, rolling, aabb
    write_pod<uint32_t>(os, n);

    for_each_state_tensor(st, [&](const std::string& name, Tensor& t) {
        write_tensor(os, name, t);
    });

    Tensor occ({state.grid.occupancy.size()});
    occ.v = state.grid.occupancy;
    write_tensor(os, "occupancy", occ);
    Tensor rolling({1});
    rolling[0] = state.rolling_spheres_per_ray;
    write_tensor(os, "rolling_spheres_per_ray", rolling);
    Tensor aabb({2, 3});
    for (int c = 0; c < 3; ++c) {
        aabb.at(0, c) = state.enc.aabb.min[c];
        aabb.at(1, c) = state.enc.aabb.max[c];
    }
    write_tensor(os, "aabb", aabb);
    if (!os) throw std::runtime_error("checkpoint_save: write failed for " + path);
}

void checkpoint_load(TrainState& state, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint_load: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint_load: bad magic/version in " + path);
    auto step = read_pod<uint64_t>(is);
    auto hash = read_pod<uint64_t>(is);
    if (state.config_hash != 0 && hash != state.config_hash)
        throw std::runtime_error("checkpoint_load: config hash mismatch (checkpoint geometry "
                                 "differs from the run configuration)");
    auto n = read_pod<uint32_t>(is);
    std::map<std::string, Tensor> tensors;
    for (uint32_t i = 0; i < n; ++i) {
        auto [name, t] = read_tensor(is);
        tensors.emplace(std::move(name), std::move(t));
    }

    // AABB first: it has a fixed shape and the rest only checks shapes.
    auto it = tensors.find("aabb");
    if (it == tensors.end()) throw std::runtime_error("checkpoint_load: missing tensor aabb");
    for (int c = 0; c < 3; ++c) {
        state.enc.aabb.min[c] = it->second.at(0, c);
        state.enc.aabb.max[c] = it->second.at(1, c);
    }
    state.grid.aabb = state.enc.aabb;
    tensors.erase(it);

    auto take = [&](const std::string& name, Tensor& dst) {
        auto f = tensors.find(name);
        if (f == tensors.end())
            throw std::runtime_error("checkpoint_load: missing tensor " + name);
        if (!dst.same_shape(f->second)) {
            std::ostringstream os;
            os << "checkpoint_load: shape mismatch for tensor " << name << " (expected";
            for (size_t d : dst.shape) os << " " << d;
            os << ", got";
            for (size_t d : f->second.shape) os << " " << d;
            os << ")";
            throw std::runtime_error(os.str());
        }
        dst = std::move(f->second);
        tensors.erase(f);
    };

    for_each_state_tensor(state, [&](const std::string& name, Tensor& t) { take(name, t); });

    auto occ = tensors.find("occupancy");
    if (occ == tensors.end()) throw std::runtime_error("checkpoint_load: missing tensor occupancy");
    if (occ->second.size() != state.grid.occupancy.size())
        throw std::runtime_error("checkpoint_load: shape mismatch for tensor occupancy");
    state.grid.occupancy = occ->second.v;
    state.grid.rebinarize();
    tensors.erase(occ);

    auto rolling = tensors.find("rolling_spheres_per_ray");
    if (rolling == tensors.end())
        throw std::runtime_error("checkpoint_load: missing tensor rolling_spheres_per_ray");
    state.rolling_spheres_per_ray = rolling->second[0];
    tensors.erase(rolling);

    if (!tensors.empty())
        throw std::runtime_error("checkpoint_load: unexpected tensor " + tensors.begin()->first);

    state.step = static_cast<long long>(step);
    state.enc.rebuild_pyramids();
}

}  // namespace trimip
