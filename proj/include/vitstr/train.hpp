#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vitstr/augment.hpp"
#include "vitstr/datagen.hpp"
#include "vitstr/model.hpp"
#include "vitstr/ops.hpp"
#include "vitstr/rng.hpp"
#include "vitstr/serialize.hpp"
#include "vitstr/vocab.hpp"

namespace vitstr {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mean over all B*S positions of -log softmax(logits)[target]. Every
// position is supervised, including the trailing [s] repeats.
template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, const std::vector<int>& targets) {
    if (logits.ndim() < 2) {
        throw std::invalid_argument("cross_entropy: logits must be [... x K], got " +
                                    shape_str(logits.shape()));
    }
    const size_t k = logits.shape().back();
    const size_t rows = logits.numel() / k;
    if (targets.size() != rows) {
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(rows) + " positions");
    }
    for (int t : targets) {
        if (t < 0 || static_cast<size_t>(t) >= k) {
            throw std::invalid_argument("cross_entropy: target id " + std::to_string(t) +
                                        " outside [0, " + std::to_string(k) + ")");
        }
    }
    const Real* x = logits.values().data();
    double total = 0;
    std::vector<Real> softmax_minus_onehot;  // saved for backward when recording
    const bool record = detail::should_record<Real>({&logits});
    if (record) softmax_minus_onehot.resize(logits.numel());
    for (size_t r = 0; r < rows; ++r) {
        const Real* row = x + r * k;
        Real mx = row[0];
        for (size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0;
        for (size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
        double lse = std::log(denom) + static_cast<double>(mx);
        total += lse - static_cast<double>(row[targets[r]]);
        if (record) {
            for (size_t j = 0; j < k; ++j) {
                double p = std::exp(static_cast<double>(row[j] - mx)) / denom;
                softmax_minus_onehot[r * k + j] =
                    static_cast<Real>(p) - (static_cast<size_t>(targets[r]) == j ? Real(1) : Real(0));
            }
        }
    }
    Tensor<Real> out = Tensor<Real>::scalar(static_cast<Real>(total / static_cast<double>(rows)));
    if (record) {
        detail::mark_output(out, {&logits});
        auto sl = logits.storage(), so = out.storage();
        GradTape::active().record([sl, so, rows, k, sm = std::move(softmax_minus_onehot)] {
            if (!sl->needs_grad()) return;
            const Real g = so->grad[0] / static_cast<Real>(rows);
            for (size_t i = 0; i < rows * k; ++i) sl->grad[i] += g * sm[i];
        });
    }
    return out;
}

// He initialization: internal projection weights N(0, 2/fan_in); biases and
// beta zero; gamma one. Embedding-like tensors (class token, position
// embedding) and the classification head use N(0, 0.02), the stock ViT
// convention, which keeps the initial predictions near uniform.
template <class Real>
void he_init(ModelParams<Real>& params, SplitRng& rng) {
    for (auto& [name, t] : params.named_tensors()) {
        auto ends_with = [&](const char* suffix) {
            std::string s(suffix);
            return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with(".gamma")) {
            std::fill(t->values().begin(), t->values().end(), Real(1));
        } else if (ends_with(".beta") || ends_with(".bias")) {
            std::fill(t->values().begin(), t->values().end(), Real(0));
        } else if (name == "class_token" || name == "pos_embed" || name == "head.weight") {
            for (Real& v : t->values()) v = static_cast<Real>(rng.normal(0.0, 0.02));
        } else {
            const double stddev = std::sqrt(2.0 / static_cast<double>(t->shape()[0]));
            for (Real& v : t->values()) v = static_cast<Real>(rng.normal(0.0, stddev));
        }
    }
}

// Scales all gradients by max_norm / ||g|| when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
template <class Real>
double clip_global_norm(const std::vector<Tensor<Real>*>& params, double max_norm) {
    double sq = 0;
    for (Tensor<Real>* t : params) {
        if (!t->grad_allocated()) continue;
        for (Real g : t->grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const Real f = static_cast<Real>(max_norm / norm);
        for (Tensor<Real>* t : params) {
            if (!t->grad_allocated()) continue;
            for (Real& g : t->grad()) g *= f;
        }
    }
    return norm;
}

template <class Real>
double clip_global_norm(ModelParams<Real>& params, double max_norm) {
    std::vector<Tensor<Real>*> ts;
    for (auto& [name, t] : params.named_tensors()) ts.push_back(t);
    return clip_global_norm(ts, max_norm);
}

// Per-parameter running averages of squared gradients and updates, both
// zero-initialized.
template <class Real>
struct AdadeltaState {
    std::vector<Tensor<Real>> avg_sq_grad;
    std::vector<Tensor<Real>> avg_sq_update;

    AdadeltaState() = default;
    explicit AdadeltaState(ModelParams<Real>& params) {
        for (auto& [name, t] : params.named_tensors()) {
            avg_sq_grad.emplace_back(t->shape());
            avg_sq_update.emplace_back(t->shape());
        }
    }
};

// E[g^2] <- rho E[g^2] + (1-rho) g^2
// dx     = -sqrt((E[dx^2] + eps) / (E[g^2] + eps)) * g
// E[dx^2]<- rho E[dx^2] + (1-rho) dx^2
// x      <- x + lr * dx
template <class Real>
void adadelta_update(std::vector<Real>& x, const std::vector<Real>& g, std::vector<Real>& eg2,
                     std::vector<Real>& ed2, double lr, double rho, double eps,
                     const std::string& name = "parameter") {
    for (size_t j = 0; j < x.size(); ++j) {
        const double gj = static_cast<double>(g[j]);
        const double e_g = rho * static_cast<double>(eg2[j]) + (1.0 - rho) * gj * gj;
        const double dx = -std::sqrt((static_cast<double>(ed2[j]) + eps) / (e_g + eps)) * gj;
        eg2[j] = static_cast<Real>(e_g);
        ed2[j] = static_cast<Real>(rho * static_cast<double>(ed2[j]) + (1.0 - rho) * dx * dx);
        const double xn = static_cast<double>(x[j]) + lr * dx;
        if (!std::isfinite(xn)) {
            throw std::runtime_error("adadelta: non-finite parameter in " + name);
        }
        x[j] = static_cast<Real>(xn);
    }
}

template <class Real>
void adadelta_step(ModelParams<Real>& params, AdadeltaState<Real>& state, double lr, double rho,
                   double eps) {
    auto named = params.named_tensors();
    if (state.avg_sq_grad.size() != named.size()) {
        throw std::invalid_argument("adadelta: state does not match parameter inventory");
    }
    for (size_t i = 0; i < named.size(); ++i) {
        Tensor<Real>* t = named[i].second;
        t->storage()->ensure_grad();
        adadelta_update(t->values(), t->grad(), state.avg_sq_grad[i].values(),
                        state.avg_sq_update[i].values(), lr, rho, eps, named[i].first);
    }
}

struct TrainConfig {
    size_t batch_size = 32;  // desk-scale default; the reference recipe uses 192
    size_t steps = 1000;
    double learning_rate = 1.0;
    double rho = 0.95;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    uint64_t seed = 0;
    std::optional<RandAugmentPolicy> augment;
    size_t checkpoint_interval = 0;      // 0: final checkpoint only
    double stop_at_accuracy = -1.0;      // stop early once batch accuracy reaches this (%)
};

struct StepRecord {
    size_t step;
    double loss;
    double train_accuracy;  // exact-match word accuracy on the step's batch, %
};

struct TrainResult {
    std::vector<StepRecord> records;
    size_t final_step = 0;
    std::filesystem::path metrics_path;
    std::filesystem::path final_checkpoint;
};

template <class Real>
void save_checkpoint(const std::filesystem::path& path, ModelParams<Real>& params,
                     const AdadeltaState<Real>* state, const Vocabulary& vocab, size_t step);

template <class Real>
struct Checkpoint {
    ViTSTRConfig config;
    ModelParams<Real> params;
    AdadeltaState<Real> state;
    bool has_state = false;
    Vocabulary vocab;
    size_t step = 0;
};

// Per step: sample a batch, optionally augment, preprocess, forward, loss,
// backward, clip, Adadelta update. Batch sampling and augmentation draw from
// streams split per (seed, step), so a resumed run replays the same batches.
template <class Real>
TrainResult train_loop(ModelParams<Real>& params, AdadeltaState<Real>& state,
                       const std::vector<WordImage>& dataset, const Vocabulary& vocab,
                       const TrainConfig& cfg, const std::filesystem::path& out_dir = {},
                       size_t start_step = 0) {
    const ViTSTRConfig& mc = params.config;
    if (dataset.empty()) throw DataError("train_loop: empty dataset");
    if (vocab.size() != mc.num_classes) {
        throw ConfigError("train_loop: vocabulary size " + std::to_string(vocab.size()) +
                          " != num_classes " + std::to_string(mc.num_classes));
    }
    for (const auto& s : dataset) {
        if (s.label.size() > mc.max_text_len() || !vocab.valid_label(s.label)) {
            throw DataError("train_loop: label \"" + s.label + "\" does not fit S=" +
                            std::to_string(mc.seq_len) + " and the vocabulary");
        }
    }

    TrainResult result;
    std::ofstream metrics;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        result.metrics_path = out_dir / "metrics.tsv";
        metrics.open(result.metrics_path, start_step == 0 ? std::ios::trunc : std::ios::app);
        if (!metrics) throw DataError("train_loop: cannot write " + result.metrics_path.string());
        if (start_step == 0) metrics << "step\tloss\ttrain_acc\n";
    }

    const SplitRng root(cfg.seed);
    const size_t batch = std::max<size_t>(1, cfg.batch_size);
    for (size_t step = start_step; step < cfg.steps; ++step) {
        SplitRng step_rng = root.split(step + 1);

        // batch indices: whole set when it fits, else a shuffled prefix
        std::vector<size_t> indices;
        if (batch >= dataset.size()) {
            indices.resize(dataset.size());
            for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        } else {
            indices.resize(dataset.size());
            for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
            for (size_t i = 0; i < batch; ++i) {
                size_t j = static_cast<size_t>(step_rng.uniform_int(
                    static_cast<int64_t>(i), static_cast<int64_t>(indices.size()) - 1));
                std::swap(indices[i], indices[j]);
            }
            indices.resize(batch);
        }

        std::vector<Tensor<Real>> images;
        std::vector<int> targets;
        std::vector<std::string> labels;
        images.reserve(indices.size());
        for (size_t bi = 0; bi < indices.size(); ++bi) {
            const WordImage& s = dataset[indices[bi]];
            GrayImage pixels = s.pixels;
            if (cfg.augment) {
                SplitRng aug_rng = SplitRng(cfg.augment->seed).split(step + 1).split(bi);
                pixels = rand_augment(*cfg.augment, pixels, aug_rng);
            }
            images.push_back(reshape(preprocess<Real>(pixels, mc),
                                     {size_t{1}, mc.in_channels, mc.image_height, mc.image_width}));
            auto ids = vocab.encode(s.label, mc.seq_len);
            targets.insert(targets.end(), ids.begin(), ids.end());
            labels.push_back(s.label);
        }
        Tensor<Real> batch_tensor;
        {
            GradTape::NoGrad pause;  // input assembly is not differentiated
            batch_tensor = concat(images, 0);
        }

        params.zero_grads();
        GradTape::active().clear();
        Tensor<Real> logits = forward(batch_tensor, params, mc);
        Tensor<Real> loss = cross_entropy(logits, targets);
        const double loss_val = static_cast<double>(loss.value());
        if (!std::isfinite(loss_val)) {
            throw std::runtime_error("train_loop: non-finite loss at step " + std::to_string(step));
        }

        size_t correct = 0;
        for (size_t bi = 0; bi < labels.size(); ++bi) {
            Tensor<Real> row({mc.seq_len, mc.num_classes});
            std::copy(logits.values().begin() +
                          static_cast<long>(bi * mc.seq_len * mc.num_classes),
                      logits.values().begin() +
                          static_cast<long>((bi + 1) * mc.seq_len * mc.num_classes),
                      row.values().begin());
            if (vocab.decode_greedy(row).text == labels[bi]) ++correct;
        }
        const double acc = 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());

        backward(loss);
        clip_global_norm(params, cfg.clip_norm);
        adadelta_step(params, state, cfg.learning_rate, cfg.rho, cfg.epsilon);

        result.records.push_back({step, loss_val, acc});
        result.final_step = step;
        if (metrics.is_open()) {
            char line[96];
            std::snprintf(line, sizeof(line), "%zu\t%.9g\t%.4f\n", step, loss_val, acc);
            metrics << line;
        }

        const bool hit_target = cfg.stop_at_accuracy >= 0 && acc >= cfg.stop_at_accuracy;
        const bool last = step + 1 == cfg.steps || hit_target;
        if (!out_dir.empty() && cfg.checkpoint_interval > 0 && !last &&
            (step + 1) % cfg.checkpoint_interval == 0) {
            save_checkpoint(out_dir / ("checkpoint_" + std::to_string(step + 1) + ".ckpt"), params,
                            &state, vocab, step + 1);
        }
        if (last) {
            if (!out_dir.empty()) {
                result.final_checkpoint = out_dir / "checkpoint_final.ckpt";
                save_checkpoint(result.final_checkpoint, params, &state, vocab, step + 1);
            }
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// checkpoint container: UTF-8 metadata header, then named tensors
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr const char* kCheckpointMagic = "vitstr-checkpoint v1";

inline void put_meta(std::ostream& os, const std::string& key, const std::string& value) {
    os << key << " = " << value << "\n";
}

}  // namespace detail

template <class Real>
void save_checkpoint(const std::filesystem::path& path, ModelParams<Real>& params,
                     const AdadeltaState<Real>* state, const Vocabulary& vocab, size_t step) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("checkpoint: cannot write " + path.string());
    const ViTSTRConfig& c = params.config;
    os << detail::kCheckpointMagic << "\n";
    detail::put_meta(os, "patch_size", std::to_string(c.patch_size));
    detail::put_meta(os, "depth", std::to_string(c.depth));
    detail::put_meta(os, "embed_dim", std::to_string(c.embed_dim));
    detail::put_meta(os, "num_heads", std::to_string(c.num_heads));
    detail::put_meta(os, "seq_len", std::to_string(c.seq_len));
    detail::put_meta(os, "image_height", std::to_string(c.image_height));
    detail::put_meta(os, "image_width", std::to_string(c.image_width));
    detail::put_meta(os, "in_channels", std::to_string(c.in_channels));
    detail::put_meta(os, "num_classes", std::to_string(c.num_classes));
    detail::put_meta(os, "mlp_ratio", std::to_string(c.mlp_ratio));
    detail::put_meta(os, "charset", vocab.charset());
    detail::put_meta(os, "step", std::to_string(step));
    detail::put_meta(os, "optimizer_state", state ? "1" : "0");
    os << "---\n";

    auto named = params.named_tensors();
    for (auto& [name, t] : named) write_named_tensor(os, name, *t);
    if (state) {
        for (size_t i = 0; i < named.size(); ++i) {
            write_named_tensor(os, "opt.avg_sq_grad." + named[i].first, state->avg_sq_grad[i]);
            write_named_tensor(os, "opt.avg_sq_update." + named[i].first, state->avg_sq_update[i]);
        }
    }
    if (!os) throw CheckpointError("checkpoint: failed writing " + path.string());
}

// Loads a checkpoint; when expected is given, every tensor must match the
// inventory of that config exactly (the first mismatch is reported by name).
template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<ViTSTRConfig>& expected = std::nullopt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != detail::kCheckpointMagic) {
        throw CheckpointError("checkpoint: " + path.string() + " is not a checkpoint file");
    }
    std::map<std::string, std::string> meta;
    while (std::getline(is, line) && line != "---") {
        size_t eq = line.find(" = ");
        if (eq == std::string::npos) {
            throw CheckpointError("checkpoint: malformed metadata line \"" + line + "\"");
        }
        meta[line.substr(0, eq)] = line.substr(eq + 3);
    }
    auto meta_num = [&](const char* key) -> size_t {
        auto it = meta.find(key);
        if (it == meta.end()) throw CheckpointError(std::string("checkpoint: missing key ") + key);
        return static_cast<size_t>(std::stoull(it->second));
    };
    ViTSTRConfig c;
    c.patch_size = meta_num("patch_size");
    c.depth = meta_num("depth");
    c.embed_dim = meta_num("embed_dim");
    c.num_heads = meta_num("num_heads");
    c.seq_len = meta_num("seq_len");
    c.image_height = meta_num("image_height");
    c.image_width = meta_num("image_width");
    c.in_channels = meta_num("in_channels");
    c.num_classes = meta_num("num_classes");
    c.mlp_ratio = meta_num("mlp_ratio");
    auto cs = meta.find("charset");
    if (cs == meta.end()) throw CheckpointError("checkpoint: missing key charset");

    const ViTSTRConfig target = expected.value_or(c);
    Checkpoint<Real> out{target, ModelParams<Real>(target), AdadeltaState<Real>(), false,
                         Vocabulary(cs->second), meta_num("step")};
    if (out.vocab.size() != target.num_classes) {
        throw CheckpointError("checkpoint: charset size " + std::to_string(out.vocab.size()) +
                              " does not match num_classes " + std::to_string(target.num_classes));
    }
    const bool want_state = meta_num("optimizer_state") == 1;
    if (want_state) out.state = AdadeltaState<Real>(out.params);

    std::map<std::string, RawTensor> raw;
    while (is.peek() != EOF) {
        RawTensor r = read_named_tensor(is);
        raw[r.name] = std::move(r);
    }
    auto take = [&](const std::string& name, Tensor<Real>& dst) {
        auto it = raw.find(name);
        if (it == raw.end()) throw CheckpointError("checkpoint: missing tensor '" + name + "'");
        if (it->second.shape != dst.shape()) {
            throw CheckpointError("checkpoint: tensor '" + name + "' has shape " +
                                  shape_str(it->second.shape) + ", expected " +
                                  shape_str(dst.shape()));
        }
        Tensor<Real> loaded = it->second.template to_tensor<Real>();
        dst.values() = loaded.values();
    };
    auto named = out.params.named_tensors();
    for (auto& [name, t] : named) take(name, *t);
    if (want_state) {
        for (size_t i = 0; i < named.size(); ++i) {
            take("opt.avg_sq_grad." + named[i].first, out.state.avg_sq_grad[i]);
            take("opt.avg_sq_update." + named[i].first, out.state.avg_sq_update[i]);
        }
        out.has_state = true;
    }
    return out;
}

}  // namespace vitstr
