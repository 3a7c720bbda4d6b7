#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vitstr/datagen.hpp"
#include "vitstr/model.hpp"
#include "vitstr/rng.hpp"
#include "vitstr/threading.hpp"

namespace vitstr {

// Fraction of exact full-string matches, as a percentage. Evaluation is
// case-insensitive by default; training logs use exact matches.
inline double word_accuracy(const std::vector<std::string>& predictions,
                            const std::vector<std::string>& ground_truths,
                            bool case_insensitive = true) {
    if (predictions.size() != ground_truths.size()) {
        throw std::invalid_argument("word_accuracy: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(ground_truths.size()) +
                                    " ground truths");
    }
    if (predictions.empty()) return 0.0;
    auto lower = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (case_insensitive ? lower(predictions[i]) == lower(ground_truths[i])
                             : predictions[i] == ground_truths[i]) {
            ++hits;
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// Closed-form parameter count; must equal the runtime inventory exactly.
inline uint64_t count_params(const ViTSTRConfig& c) {
    c.validate();
    const uint64_t d = c.embed_dim, k = c.num_classes, hid = c.mlp_hidden();
    const uint64_t pd = c.patch_dim(), t = c.tokens(), l = c.depth;
    uint64_t patch = pd * d + d;
    uint64_t embed = d + t * d;  // class token + position embedding
    uint64_t block = 2 * (2 * d)            // two layer norms
                     + d * 3 * d + 3 * d    // fused qkv
                     + d * d + d            // attention output projection
                     + d * hid + hid        // mlp fc1
                     + hid * d + d;         // mlp fc2
    uint64_t head = 2 * d + d * k + k;      // final layer norm + head
    return patch + embed + l * block + head;
}

// Analytic multiply-accumulate count per image (one MAC = 1). Element-wise
// softmax/LN/GELU costs (< 3% of the total) are excluded.
inline uint64_t estimate_flops(const ViTSTRConfig& c) {
    c.validate();
    const uint64_t d = c.embed_dim, hid = c.mlp_hidden();
    const uint64_t n = c.patches(), t = c.tokens(), l = c.depth;
    uint64_t patch = n * c.patch_dim() * d;
    uint64_t block = t * d * 3 * d        // qkv projection
                     + 2 * t * t * d      // attention scores + context
                     + t * d * d          // output projection
                     + 2 * t * d * hid;   // mlp fc1 + fc2
    uint64_t head = static_cast<uint64_t>(c.seq_len) * d * c.num_classes;
    return patch + l * block + head;
}

inline std::string flops_formula(const ViTSTRConfig& c) {
    std::ostringstream os;
    os << "MACs = N*P^2*C*D + L*(3*T*D^2 + 2*T^2*D + T*D^2 + 2*T*D*" << c.mlp_ratio
       << "D) + S*D*K with N=" << c.patches() << " T=" << c.tokens() << " P=" << c.patch_size
       << " C=" << c.in_channels << " D=" << c.embed_dim << " L=" << c.depth
       << " S=" << c.seq_len << " K=" << c.num_classes;
    return os.str();
}

struct LatencyStats {
    double median_ms = 0;
    double p25_ms = 0;
    double p75_ms = 0;
    size_t iters = 0;
    size_t threads = 0;
    std::string precision;

    double iqr_ms() const { return p75_ms - p25_ms; }
};

// Median and quartiles of per-image times after discarding warmup samples.
inline LatencyStats latency_stats(std::vector<double> samples_ms, size_t warmup) {
    if (samples_ms.size() <= warmup) {
        throw std::invalid_argument("latency_stats: no samples left after warmup");
    }
    samples_ms.erase(samples_ms.begin(), samples_ms.begin() + static_cast<long>(warmup));
    std::sort(samples_ms.begin(), samples_ms.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(samples_ms.size() - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, samples_ms.size() - 1);
        double frac = pos - static_cast<double>(lo);
        return samples_ms[lo] * (1 - frac) + samples_ms[hi] * frac;
    };
    LatencyStats out;
    out.median_ms = quantile(0.5);
    out.p25_ms = quantile(0.25);
    out.p75_ms = quantile(0.75);
    out.iters = samples_ms.size();
    out.threads = worker_threads();
    return out;
}

// Wall-clock msec per image for single-image forward passes; warmup
// iterations run first and are excluded.
template <class Real>
LatencyStats benchmark_latency(const ModelParams<Real>& params, const ViTSTRConfig& cfg,
                               size_t warmup, size_t iters, uint64_t seed = 0) {
    if (iters < 1) throw std::invalid_argument("benchmark_latency: iters must be >= 1");
    GradTape::NoGrad pause;
    SplitRng rng(seed);
    Tensor<Real> image({cfg.in_channels, cfg.image_height, cfg.image_width});
    for (Real& v : image.values()) v = static_cast<Real>(rng.uniform(-1.0, 1.0));

    std::vector<double> samples;
    samples.reserve(warmup + iters);
    for (size_t i = 0; i < warmup + iters; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Tensor<Real> logits = forward_single(image, params, cfg);
        auto t1 = std::chrono::steady_clock::now();
        (void)logits;
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    LatencyStats out = latency_stats(std::move(samples), warmup);
    out.precision = sizeof(Real) == 4 ? "f32" : "f64";
    return out;
}

// One row of the accounting table.
struct CostReport {
    std::string name;
    double accuracy_percent = 0;
    double msec_per_image = 0;
    uint64_t params = 0;
    uint64_t flops = 0;
};

enum class CostAxis { Params, Msec, Flops };

inline const char* cost_axis_name(CostAxis a) {
    switch (a) {
        case CostAxis::Params: return "params";
        case CostAxis::Msec: return "msec";
        case CostAxis::Flops: return "flops";
    }
    throw std::logic_error("cost_axis_name: unknown axis");
}

inline CostAxis cost_axis_from_name(const std::string& s) {
    if (s == "params") return CostAxis::Params;
    if (s == "msec") return CostAxis::Msec;
    if (s == "flops") return CostAxis::Flops;
    throw std::invalid_argument("cost axis must be one of params|msec|flops, got \"" + s + "\"");
}

inline double cost_of(const CostReport& r, CostAxis axis) {
    switch (axis) {
        case CostAxis::Params: return static_cast<double>(r.params);
        case CostAxis::Msec: return r.msec_per_image;
        case CostAxis::Flops: return static_cast<double>(r.flops);
    }
    throw std::logic_error("cost_of: unknown axis");
}

// Point of the accuracy-vs-cost plane with its dominance flag. A point is
// dominated when another has accuracy >= and cost <=, at least one strict.
struct FrontierPoint {
    std::string name;
    double accuracy = 0;
    double cost = 0;
    bool dominated = false;
};

// Annotates every point; sort by cost ascending with accuracy descending as
// the tie break, then a single sweep marks dominated points.
inline std::vector<FrontierPoint> annotate_dominance(const std::vector<CostReport>& reports,
                                                     CostAxis axis) {
    std::vector<FrontierPoint> pts(reports.size());
    std::vector<size_t> order(reports.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        pts[i] = {reports[i].name, reports[i].accuracy_percent, cost_of(reports[i], axis), false};
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (pts[a].cost != pts[b].cost) return pts[a].cost < pts[b].cost;
        return pts[a].accuracy > pts[b].accuracy;
    });
    double best_acc = -1.0;        // best accuracy at strictly lower cost
    double group_best_acc = -1.0;  // best accuracy within the current cost group
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        group_best_acc = best_acc;
        while (j < order.size() && pts[order[j]].cost == pts[order[i]].cost) {
            FrontierPoint& p = pts[order[j]];
            // dominated by a cheaper point with >= accuracy, or by an
            // equal-cost point with strictly higher accuracy
            p.dominated = p.accuracy <= best_acc || p.accuracy < pts[order[i]].accuracy;
            group_best_acc = std::max(group_best_acc, p.accuracy);
            ++j;
        }
        best_acc = group_best_acc;
        i = j;
    }
    return pts;
}

// Non-dominated subset in stable order by cost.
inline std::vector<FrontierPoint> pareto_frontier(const std::vector<CostReport>& reports,
                                                  CostAxis axis) {
    std::vector<FrontierPoint> all = annotate_dominance(reports, axis);
    std::vector<FrontierPoint> out;
    for (const auto& p : all) {
        if (!p.dominated) out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FrontierPoint& a, const FrontierPoint& b) { return a.cost < b.cost; });
    return out;
}

// Reference results TSV: name, accuracy %, msec/image, params (1e6),
// FLOPS (1e9). '#' lines are comments.
inline std::vector<CostReport> load_baselines_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("baselines: cannot open " + path.string());
    std::vector<CostReport> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        CostReport r;
        double params_e6 = 0, flops_e9 = 0;
        if (!(ss >> r.name >> r.accuracy_percent >> r.msec_per_image >> params_e6 >> flops_e9)) {
            throw DataError("baselines: " + path.string() + ":" + std::to_string(lineno) +
                            ": expected 5 fields");
        }
        r.params = static_cast<uint64_t>(std::llround(params_e6 * 1e6));
        r.flops = static_cast<uint64_t>(std::llround(flops_e9 * 1e9));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace vitstr
