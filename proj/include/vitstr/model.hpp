#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vitstr/ops.hpp"
#include "vitstr/tensor.hpp"

namespace vitstr {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kLayerNormEps = 1e-6;

// Architecture hyperparameters. tiny/small/base follow the published
// configurations (P=16, L=12, S=27, D/H scaling), grayscale 224x224 input,
// 96 output classes.
struct ViTSTRConfig {
    size_t patch_size = 16;
    size_t depth = 12;
    size_t embed_dim = 192;
    size_t num_heads = 3;
    size_t seq_len = 27;
    size_t image_height = 224;
    size_t image_width = 224;
    size_t in_channels = 1;
    size_t num_classes = 96;
    size_t mlp_ratio = 4;

    static ViTSTRConfig tiny() { return {}; }
    static ViTSTRConfig small() {
        ViTSTRConfig c;
        c.embed_dim = 384;
        c.num_heads = 6;
        return c;
    }
    static ViTSTRConfig base() {
        ViTSTRConfig c;
        c.embed_dim = 768;
        c.num_heads = 12;
        return c;
    }

    size_t patches() const {
        return (image_height / patch_size) * (image_width / patch_size);
    }
    size_t tokens() const { return patches() + 1; }
    size_t head_dim() const { return embed_dim / num_heads; }
    size_t patch_dim() const { return patch_size * patch_size * in_channels; }
    size_t mlp_hidden() const { return mlp_ratio * embed_dim; }
    size_t max_text_len() const { return seq_len - 2; }

    void validate() const {
        if (patch_size == 0 || depth == 0 || embed_dim == 0 || num_heads == 0 || in_channels == 0 ||
            mlp_ratio == 0 || num_classes < 3) {
            throw ConfigError("config: zero or degenerate field");
        }
        if (embed_dim % num_heads != 0) {
            throw ConfigError("config: embed_dim " + std::to_string(embed_dim) +
                              " not divisible by num_heads " + std::to_string(num_heads));
        }
        if (image_height % patch_size != 0 || image_width % patch_size != 0) {
            throw ConfigError("config: image " + std::to_string(image_height) + "x" +
                              std::to_string(image_width) + " not divisible by patch size " +
                              std::to_string(patch_size));
        }
        if (seq_len < 2) throw ConfigError("config: seq_len must be >= 2");
        if (seq_len > tokens()) {
            throw ConfigError("config: seq_len " + std::to_string(seq_len) + " exceeds token count " +
                              std::to_string(tokens()));
        }
    }

    bool operator==(const ViTSTRConfig&) const = default;
};

template <class Real>
struct BlockParams {
    Tensor<Real> ln1_gamma, ln1_beta;
    Tensor<Real> qkv_weight, qkv_bias;          // [D x 3D] fused projection
    Tensor<Real> attn_out_weight, attn_out_bias;
    Tensor<Real> ln2_gamma, ln2_beta;
    Tensor<Real> fc1_weight, fc1_bias;
    Tensor<Real> fc2_weight, fc2_bias;
};

// Every learnable weight of the network. The named inventory is the single
// source of order for initialization, counting, optimizer state and
// checkpoints.
template <class Real>
struct ModelParams {
    ViTSTRConfig config;
    Tensor<Real> patch_weight, patch_bias;  // [P^2 C x D]
    Tensor<Real> class_token;               // [D]
    Tensor<Real> pos_embed;                 // [(N+1) x D]
    std::vector<BlockParams<Real>> blocks;
    Tensor<Real> final_gamma, final_beta;
    Tensor<Real> head_weight, head_bias;    // [D x K]

    explicit ModelParams(const ViTSTRConfig& cfg) : config(cfg) {
        cfg.validate();
        const size_t d = cfg.embed_dim, k = cfg.num_classes, hid = cfg.mlp_hidden();
        auto p = [](std::vector<size_t> shape) { return Tensor<Real>(std::move(shape), Real(0), true); };
        patch_weight = p({cfg.patch_dim(), d});
        patch_bias = p({d});
        class_token = p({d});
        pos_embed = p({cfg.tokens(), d});
        blocks.resize(cfg.depth);
        for (auto& b : blocks) {
            b.ln1_gamma = p({d});
            b.ln1_beta = p({d});
            b.qkv_weight = p({d, 3 * d});
            b.qkv_bias = p({3 * d});
            b.attn_out_weight = p({d, d});
            b.attn_out_bias = p({d});
            b.ln2_gamma = p({d});
            b.ln2_beta = p({d});
            b.fc1_weight = p({d, hid});
            b.fc1_bias = p({hid});
            b.fc2_weight = p({hid, d});
            b.fc2_bias = p({d});
        }
        final_gamma = p({d});
        final_beta = p({d});
        head_weight = p({d, k});
        head_bias = p({k});
    }

    std::vector<std::pair<std::string, Tensor<Real>*>> named_tensors() {
        std::vector<std::pair<std::string, Tensor<Real>*>> out;
        out.emplace_back("patch_proj.weight", &patch_weight);
        out.emplace_back("patch_proj.bias", &patch_bias);
        out.emplace_back("class_token", &class_token);
        out.emplace_back("pos_embed", &pos_embed);
        for (size_t i = 0; i < blocks.size(); ++i) {
            const std::string p = "blocks." + std::to_string(i) + ".";
            auto& b = blocks[i];
            out.emplace_back(p + "ln1.gamma", &b.ln1_gamma);
            out.emplace_back(p + "ln1.beta", &b.ln1_beta);
            out.emplace_back(p + "qkv.weight", &b.qkv_weight);
            out.emplace_back(p + "qkv.bias", &b.qkv_bias);
            out.emplace_back(p + "attn_out.weight", &b.attn_out_weight);
            out.emplace_back(p + "attn_out.bias", &b.attn_out_bias);
            out.emplace_back(p + "ln2.gamma", &b.ln2_gamma);
            out.emplace_back(p + "ln2.beta", &b.ln2_beta);
            out.emplace_back(p + "mlp_fc1.weight", &b.fc1_weight);
            out.emplace_back(p + "mlp_fc1.bias", &b.fc1_bias);
            out.emplace_back(p + "mlp_fc2.weight", &b.fc2_weight);
            out.emplace_back(p + "mlp_fc2.bias", &b.fc2_bias);
        }
        out.emplace_back("final_ln.gamma", &final_gamma);
        out.emplace_back("final_ln.beta", &final_beta);
        out.emplace_back("head.weight", &head_weight);
        out.emplace_back("head.bias", &head_bias);
        return out;
    }

    size_t parameter_count() {
        size_t n = 0;
        for (auto& [name, t] : named_tensors()) n += t->numel();
        return n;
    }

    bool all_finite() {
        for (auto& [name, t] : named_tensors()) {
            if (!t->all_finite()) return false;
        }
        return true;
    }

    void zero_grads() {
        for (auto& [name, t] : named_tensors()) {
            t->storage()->ensure_grad();
            t->zero_grad();
        }
    }
};

// [C x H x W] -> [N x P^2 C]; patches ordered row-major over the patch grid,
// each row one flattened patch ((c, py, px) order).
template <class Real>
Tensor<Real> patchify(const Tensor<Real>& image, size_t patch) {
    if (image.ndim() != 3) {
        throw std::invalid_argument("patchify: expected [C x H x W], got " + shape_str(image.shape()));
    }
    const size_t c = image.shape()[0], h = image.shape()[1], w = image.shape()[2];
    if (patch == 0 || h % patch != 0 || w % patch != 0) {
        throw std::invalid_argument("patchify: image " + shape_str(image.shape()) +
                                    " not divisible by patch size " + std::to_string(patch));
    }
    const size_t gh = h / patch, gw = w / patch;
    const size_t n = gh * gw, pd = patch * patch * c;
    Tensor<Real> out({n, pd});
    std::vector<size_t> map(n * pd);
    size_t f = 0;
    for (size_t gy = 0; gy < gh; ++gy) {
        for (size_t gx = 0; gx < gw; ++gx) {
            for (size_t ch = 0; ch < c; ++ch) {
                for (size_t py = 0; py < patch; ++py) {
                    for (size_t px = 0; px < patch; ++px) {
                        map[f++] = (ch * h + gy * patch + py) * w + gx * patch + px;
                    }
                }
            }
        }
    }
    for (size_t i = 0; i < map.size(); ++i) out.values()[i] = image.values()[map[i]];
    if (detail::should_record<Real>({&image})) {
        detail::mark_output(out, {&image});
        auto si = image.storage(), so = out.storage();
        GradTape::active().record([si, so, map = std::move(map)] {
            if (!si->needs_grad()) return;
            for (size_t i = 0; i < map.size(); ++i) si->grad[map[i]] += so->grad[i];
        });
    }
    return out;
}

// z0 = [class token; patch embeddings] + position embedding  -> [(N+1) x D]
template <class Real>
Tensor<Real> embed_input(const Tensor<Real>& image, const ModelParams<Real>& params,
                         const ViTSTRConfig& cfg) {
    if (image.ndim() != 3 || image.shape()[0] != cfg.in_channels ||
        image.shape()[1] != cfg.image_height || image.shape()[2] != cfg.image_width) {
        throw std::invalid_argument("embed_input: image " + shape_str(image.shape()) +
                                    " does not match configured " +
                                    shape_str({cfg.in_channels, cfg.image_height, cfg.image_width}));
    }
    Tensor<Real> patches = patchify(image, cfg.patch_size);
    Tensor<Real> proj = add_bias(matmul(patches, params.patch_weight), params.patch_bias);
    Tensor<Real> cls = reshape(params.class_token, {size_t{1}, cfg.embed_dim});
    Tensor<Real> z = concat<Real>({cls, proj}, 0);
    return add(z, params.pos_embed);
}

// Pre-norm multi-head self-attention with residual:
// z' = MSA(LN(z)) + z. Attention weights [H x T x T] are retrievable.
template <class Real>
Tensor<Real> msa_forward(const Tensor<Real>& z, const BlockParams<Real>& blk, size_t num_heads,
                         Tensor<Real>* attn_out = nullptr) {
    const size_t t = z.shape()[0], d = z.shape()[1];
    if (d % num_heads != 0) {
        throw ConfigError("msa: embed dim " + std::to_string(d) + " not divisible by " +
                          std::to_string(num_heads) + " heads");
    }
    const size_t dh = d / num_heads;
    Tensor<Real> ln = layer_norm(z, blk.ln1_gamma, blk.ln1_beta, Real(kLayerNormEps));
    Tensor<Real> qkv = add_bias(matmul(ln, blk.qkv_weight), blk.qkv_bias);
    auto heads = [&](size_t offset) {
        return permute(reshape(narrow(qkv, 1, offset, d), {t, num_heads, dh}), {1, 0, 2});
    };
    Tensor<Real> q = heads(0), k = heads(d), v = heads(2 * d);
    Tensor<Real> scores =
        scale(matmul(q, permute(k, {0, 2, 1})), Real(1) / std::sqrt(static_cast<Real>(dh)));
    Tensor<Real> attn = softmax(scores, 2);  // [H x T x T]
    if (attn_out) *attn_out = attn;
    Tensor<Real> ctx = reshape(permute(matmul(attn, v), {1, 0, 2}), {t, d});
    Tensor<Real> proj = add_bias(matmul(ctx, blk.attn_out_weight), blk.attn_out_bias);
    return add(proj, z);
}

// One encoder block: z_l = MLP(LN(z')) + z' after the MSA residual.
template <class Real>
Tensor<Real> block_forward(const Tensor<Real>& z, const BlockParams<Real>& blk, size_t num_heads,
                           Tensor<Real>* attn_out = nullptr) {
    Tensor<Real> zp = msa_forward(z, blk, num_heads, attn_out);
    Tensor<Real> ln = layer_norm(zp, blk.ln2_gamma, blk.ln2_beta, Real(kLayerNormEps));
    Tensor<Real> h = gelu(add_bias(matmul(ln, blk.fc1_weight), blk.fc1_bias));
    Tensor<Real> m = add_bias(matmul(h, blk.fc2_weight), blk.fc2_bias);
    return add(m, zp);
}

// Single image [C x H x W] -> logits [S x K]. The head reads the first S
// encoder outputs after a final layer norm; row 0 is the class-token
// position serving as [GO].
template <class Real>
Tensor<Real> forward_single(const Tensor<Real>& image, const ModelParams<Real>& params,
                            const ViTSTRConfig& cfg,
                            std::vector<Tensor<Real>>* attn_layers = nullptr) {
    cfg.validate();
    Tensor<Real> z = embed_input(image, params, cfg);
    if (attn_layers) attn_layers->assign(cfg.depth, Tensor<Real>());
    for (size_t l = 0; l < cfg.depth; ++l) {
        z = block_forward(z, params.blocks[l], cfg.num_heads,
                          attn_layers ? &(*attn_layers)[l] : nullptr);
    }
    Tensor<Real> zf = layer_norm(z, params.final_gamma, params.final_beta, Real(kLayerNormEps));
    Tensor<Real> first = narrow(zf, 0, 0, cfg.seq_len);
    return add_bias(matmul(first, params.head_weight), params.head_bias);
}

// Batch [B x C x H x W] -> logits [B x S x K].
template <class Real>
Tensor<Real> forward(const Tensor<Real>& images, const ModelParams<Real>& params,
                     const ViTSTRConfig& cfg) {
    if (images.ndim() != 4) {
        throw std::invalid_argument("forward: expected [B x C x H x W], got " +
                                    shape_str(images.shape()));
    }
    const size_t b = images.shape()[0];
    std::vector<Tensor<Real>> per_image;
    per_image.reserve(b);
    for (size_t i = 0; i < b; ++i) {
        Tensor<Real> img = reshape(narrow(images, 0, i, 1),
                                   {cfg.in_channels, cfg.image_height, cfg.image_width});
        per_image.push_back(
            reshape(forward_single(img, params, cfg), {size_t{1}, cfg.seq_len, cfg.num_classes}));
    }
    return concat(per_image, 0);
}

struct HeatmapImage {
    size_t width = 0;
    size_t height = 0;
    std::vector<double> values;  // min-max normalized to [0, 1]
};

template <class Real>
struct AttentionMaps {
    Tensor<Real> raw;                    // [L x H x (N+1) x (N+1)]
    std::vector<HeatmapImage> heatmaps;  // one per head position, image-sized
    Tensor<Real> logits;                 // [S x K]
};

// Per-position readout: mean over heads of the last layer's attention row,
// restricted to patch columns, reshaped to the patch grid, bilinearly
// upsampled to image size and min-max normalized.
template <class Real>
AttentionMaps<Real> attention_maps(const Tensor<Real>& image, const ModelParams<Real>& params,
                                   const ViTSTRConfig& cfg) {
    GradTape::NoGrad pause;
    AttentionMaps<Real> out;
    std::vector<Tensor<Real>> layers;
    out.logits = forward_single(image, params, cfg, &layers);
    const size_t t = cfg.tokens(), h = cfg.num_heads;
    std::vector<Tensor<Real>> stacked;
    stacked.reserve(layers.size());
    for (auto& a : layers) stacked.push_back(reshape(a, {size_t{1}, h, t, t}));
    out.raw = concat(stacked, 0);

    const size_t gh = cfg.image_height / cfg.patch_size;
    const size_t gw = cfg.image_width / cfg.patch_size;
    const Tensor<Real>& last = layers.back();  // [H x T x T]
    out.heatmaps.resize(cfg.seq_len);
    for (size_t pos = 0; pos < cfg.seq_len; ++pos) {
        std::vector<double> grid(gh * gw, 0.0);
        for (size_t head = 0; head < h; ++head) {
            const Real* row = last.values().data() + (head * t + pos) * t;
            for (size_t p = 0; p < gh * gw; ++p) grid[p] += static_cast<double>(row[p + 1]);
        }
        for (double& v : grid) v /= static_cast<double>(h);

        HeatmapImage hm;
        hm.width = cfg.image_width;
        hm.height = cfg.image_height;
        hm.values.resize(hm.width * hm.height);
        const double sx = static_cast<double>(gw) / static_cast<double>(hm.width);
        const double sy = static_cast<double>(gh) / static_cast<double>(hm.height);
        for (size_t y = 0; y < hm.height; ++y) {
            double gy = (static_cast<double>(y) + 0.5) * sy - 0.5;
            double fy = std::clamp(gy, 0.0, static_cast<double>(gh - 1));
            size_t y0 = static_cast<size_t>(fy);
            size_t y1 = std::min(y0 + 1, gh - 1);
            double ay = fy - static_cast<double>(y0);
            for (size_t x = 0; x < hm.width; ++x) {
                double gx = (static_cast<double>(x) + 0.5) * sx - 0.5;
                double fx = std::clamp(gx, 0.0, static_cast<double>(gw - 1));
                size_t x0 = static_cast<size_t>(fx);
                size_t x1 = std::min(x0 + 1, gw - 1);
                double ax = fx - static_cast<double>(x0);
                double top = grid[y0 * gw + x0] * (1 - ax) + grid[y0 * gw + x1] * ax;
                double bot = grid[y1 * gw + x0] * (1 - ax) + grid[y1 * gw + x1] * ax;
                hm.values[y * hm.width + x] = top * (1 - ay) + bot * ay;
            }
        }
        double lo = hm.values[0], hi = hm.values[0];
        for (double v : hm.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double span = hi - lo;
        for (double& v : hm.values) v = span > 0 ? (v - lo) / span : 0.0;
        out.heatmaps[pos] = std::move(hm);
    }
    return out;
}

}  // namespace vitstr
