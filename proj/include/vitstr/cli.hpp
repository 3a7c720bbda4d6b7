#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vitstr/augment.hpp"
#include "vitstr/config.hpp"
#include "vitstr/datagen.hpp"
#include "vitstr/evalbench.hpp"
#include "vitstr/model.hpp"
#include "vitstr/train.hpp"
#include "vitstr/vocab.hpp"

namespace vitstr::cli {

namespace fs = std::filesystem;

// Default scalar type for command-line runs; tests instantiate double where
// gradient checking needs it.
using Real = float;

namespace detail {

inline void write_run_meta(const fs::path& out_dir, const std::string& command,
                           const std::vector<std::string>& args,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
    fs::create_directories(out_dir);
    std::ofstream meta(out_dir / "run.meta");
    if (!meta) throw DataError("run.meta: cannot write in " + out_dir.string());
    meta << "command = " << command << "\n";
    std::string argv_line;
    for (const auto& a : args) {
        if (!argv_line.empty()) argv_line += ' ';
        argv_line += a;
    }
    meta << "argv = " << argv_line << "\n";
    meta << "threads = " << worker_threads() << "\n";
    for (const auto& [k, v] : entries) meta << k << " = " << v << "\n";
}

inline std::string filename_safe(char c) {
    if (std::isalnum(static_cast<unsigned char>(c))) return std::string(1, c);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "x%02X", static_cast<unsigned char>(c));
    return buf;
}

inline RunConfig load_run_config(const std::string& config_path, uint64_t seed_override,
                                 bool seed_given, const std::vector<std::string>& overrides) {
    KeyValueConfig kv;
    if (!config_path.empty()) {
        if (config_path == "tiny" || config_path == "small" || config_path == "base") {
            kv.set("model.variant", config_path);
        } else {
            kv = KeyValueConfig::from_file(config_path);
        }
    }
    for (const auto& ov : overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: --set expects key=value, got \"" + ov + "\"");
        }
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (seed_given) kv.set("seed", std::to_string(seed_override));
    return RunConfig::resolve(kv);
}

inline GrayImage contact_sheet(const std::vector<GrayImage>& tiles, size_t cols, size_t gap) {
    size_t rows = (tiles.size() + cols - 1) / cols;
    size_t tw = tiles.front().width, th = tiles.front().height;
    GrayImage sheet(cols * tw + (cols + 1) * gap, rows * th + (rows + 1) * gap, 255);
    for (size_t i = 0; i < tiles.size(); ++i) {
        size_t ox = gap + (i % cols) * (tw + gap);
        size_t oy = gap + (i / cols) * (th + gap);
        for (size_t y = 0; y < th; ++y) {
            for (size_t x = 0; x < tw; ++x) sheet.at(ox + x, oy + y) = tiles[i].at(x, y);
        }
    }
    return sheet;
}

inline void write_frontier_dat(const fs::path& path, const std::vector<FrontierPoint>& all,
                               CostAxis axis) {
    std::ofstream dat(path);
    if (!dat) throw DataError("frontier: cannot write " + path.string());
    dat << "# accuracy(%) vs " << cost_axis_name(axis) << "\n";
    dat << "# cost accuracy frontier name\n";
    for (const auto& p : all) {
        dat << p.cost << ' ' << p.accuracy << ' ' << (p.dominated ? 0 : 1) << ' ' << p.name << "\n";
    }
    dat << "\n\n# frontier only, sorted by cost\n";
    std::vector<FrontierPoint> frontier;
    for (const auto& p : all) {
        if (!p.dominated) frontier.push_back(p);
    }
    std::sort(frontier.begin(), frontier.end(),
              [](const FrontierPoint& a, const FrontierPoint& b) { return a.cost < b.cost; });
    for (const auto& p : frontier) dat << p.cost << ' ' << p.accuracy << " 1 " << p.name << "\n";
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

struct GenerateDataArgs {
    size_t count = 0;
    std::string charset = "default";
    uint64_t seed = 0;
    std::string out;
    size_t height = 32;
    size_t min_len = 1;
    size_t max_len = 10;
};

inline int run_generate_data(const GenerateDataArgs& a, const std::vector<std::string>& argv,
                             std::ostream& out) {
    Vocabulary vocab =
        a.charset == "default" ? Vocabulary::default_latin() : Vocabulary::from_file(a.charset);
    auto samples = generate_dataset(a.count, vocab, a.seed, a.height, a.min_len, a.max_len);
    auto manifest = save_dataset(a.out, samples);
    write_run_meta(a.out, "generate-data", argv,
                   {{"seed", std::to_string(a.seed)},
                    {"count", std::to_string(a.count)},
                    {"charset", a.charset},
                    {"height", std::to_string(a.height)},
                    {"min_len", std::to_string(a.min_len)},
                    {"max_len", std::to_string(a.max_len)}});
    out << "wrote " << manifest.records.size() << " samples under " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> overrides;
    std::string resume;
};

inline int run_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    RunConfig rc = load_run_config(a.config, a.seed, a.seed_given, a.overrides);
    Vocabulary vocab = rc.make_vocabulary();
    if (vocab.size() != rc.model.num_classes) {
        throw ConfigError("config: charset yields " + std::to_string(vocab.size()) +
                          " classes but model.num_classes is " +
                          std::to_string(rc.model.num_classes));
    }
    auto dataset = load_dataset(a.data, &vocab);

    size_t start_step = 0;
    std::optional<ModelParams<Real>> params;
    AdadeltaState<Real> state;
    if (!a.resume.empty()) {
        auto ckpt = load_checkpoint<Real>(a.resume, rc.model);
        params.emplace(std::move(ckpt.params));
        state = std::move(ckpt.state);
        start_step = ckpt.step;
        if (!ckpt.has_state) state = AdadeltaState<Real>(*params);
    } else {
        params.emplace(rc.model);
        SplitRng init_rng = SplitRng(rc.seed).split(1);
        he_init(*params, init_rng);
        state = AdadeltaState<Real>(*params);
    }

    write_run_meta(a.out, "train", argv, rc.resolved_entries());
    TrainResult result = train_loop(*params, state, dataset, vocab, rc.train, a.out, start_step);
    if (!result.records.empty()) {
        const auto& last = result.records.back();
        out << "final step " << last.step << ": loss " << last.loss << ", train accuracy "
            << last.train_accuracy << "%\n";
    }
    out << "metrics: " << result.metrics_path.string() << "\n";
    out << "checkpoint: " << result.final_checkpoint.string() << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    bool case_sensitive = false;
};

inline int run_eval(const EvalArgs& a, std::ostream& out) {
    auto ckpt = load_checkpoint<Real>(a.checkpoint);
    auto dataset = load_dataset(a.data, &ckpt.vocab);
    GradTape::NoGrad pause;
    std::vector<std::string> predictions, truths;
    predictions.reserve(dataset.size());
    for (const auto& sample : dataset) {
        Tensor<Real> img = preprocess<Real>(sample, ckpt.config);
        Tensor<Real> logits = forward_single(img, ckpt.params, ckpt.config);
        predictions.push_back(ckpt.vocab.decode_greedy(logits).text);
        truths.push_back(sample.label);
    }
    double acc = word_accuracy(predictions, truths, !a.case_sensitive);
    std::string name = fs::path(a.data).stem().string();
    char line[256];
    std::snprintf(line, sizeof(line), "%s\t%zu\t%.4f\n", name.c_str(), dataset.size(), acc);
    out << line;
    return 0;
}

struct BenchArgs {
    std::string config = "tiny";
    std::string checkpoint;
    std::string axis = "msec";
    std::string baselines;
    std::string out;
    size_t iters = 5;
    size_t warmup = 2;
    double accuracy = -1.0;  // known accuracy of the benched model, if any
    uint64_t seed = 0;
};

inline int run_bench(const BenchArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    CostAxis axis = cost_axis_from_name(a.axis);
    std::string name;
    std::optional<ModelParams<Real>> params;
    if (!a.checkpoint.empty()) {
        auto ckpt = load_checkpoint<Real>(a.checkpoint);
        params.emplace(std::move(ckpt.params));
        name = fs::path(a.checkpoint).stem().string();
    } else {
        RunConfig rc = load_run_config(a.config, 0, false, {});
        params.emplace(rc.model);
        SplitRng rng(a.seed);
        he_init(*params, rng);
        name = "vitstr-" + rc.variant;
    }
    const ViTSTRConfig& cfg = params->config;

    CostReport report;
    report.name = name;
    report.params = count_params(cfg);
    report.flops = estimate_flops(cfg);
    LatencyStats lat = benchmark_latency(*params, cfg, a.warmup, a.iters, a.seed);
    report.msec_per_image = lat.median_ms;
    report.accuracy_percent = a.accuracy >= 0 ? a.accuracy : 0.0;

    out << "# " << flops_formula(cfg) << "\n";
    out << "# environment: threads=" << lat.threads << " precision=" << lat.precision
        << " iters=" << lat.iters << "\n";
    out << "name\tparams\tflops\tmsec_median\tmsec_iqr\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%s\t%llu\t%llu\t%.3f\t%.3f\n", report.name.c_str(),
                  static_cast<unsigned long long>(report.params),
                  static_cast<unsigned long long>(report.flops), lat.median_ms, lat.iqr_ms());
    out << line;

    if (!a.baselines.empty()) {
        auto rows = load_baselines_tsv(a.baselines);
        if (a.accuracy >= 0) rows.push_back(report);
        auto annotated = annotate_dominance(rows, axis);
        out << "\nname\taccuracy\t" << cost_axis_name(axis) << "\tfrontier\n";
        for (const auto& p : annotated) {
            std::snprintf(line, sizeof(line), "%s\t%.1f\t%.6g\t%d\n", p.name.c_str(), p.accuracy,
                          p.cost, p.dominated ? 0 : 1);
            out << line;
        }
        if (!a.out.empty()) {
            fs::create_directories(a.out);
            write_frontier_dat(fs::path(a.out) / ("frontier_" + a.axis + ".dat"), annotated, axis);
        }
    }
    if (!a.out.empty()) {
        write_run_meta(a.out, "bench", argv,
                       {{"seed", std::to_string(a.seed)},
                        {"axis", a.axis},
                        {"iters", std::to_string(a.iters)},
                        {"warmup", std::to_string(a.warmup)}});
    }
    return 0;
}

struct AugmentPreviewArgs {
    std::string image;
    std::string text = "Augment";
    std::string out;
    uint64_t seed = 0;
    double magnitude = 0.7;
};

inline int run_augment_preview(const AugmentPreviewArgs& a, const std::vector<std::string>& argv,
                               std::ostream& out) {
    GrayImage source;
    if (!a.image.empty()) {
        source = read_pgm(a.image);
    } else {
        SplitRng rng = SplitRng(a.seed).split(7);
        source = render_word(a.text, 32, rng).pixels;
    }
    fs::create_directories(a.out);
    std::vector<GrayImage> tiles;
    for (size_t i = 0; i < kAllAugKinds.size(); ++i) {
        SplitRng rng = SplitRng(a.seed).split(i);
        GrayImage img = apply(AugOp{kAllAugKinds[i], a.magnitude}, source, rng);
        write_pgm(fs::path(a.out) / ("preview_" + std::string(aug_kind_name(kAllAugKinds[i])) +
                                     ".pgm"),
                  img);
        tiles.push_back(std::move(img));
    }
    write_pgm(fs::path(a.out) / "contact_sheet.pgm", contact_sheet(tiles, 3, 2));
    write_run_meta(a.out, "augment-preview", argv,
                   {{"seed", std::to_string(a.seed)},
                    {"magnitude", std::to_string(a.magnitude)},
                    {"text", a.image.empty() ? a.text : "(file)"}});
    out << "wrote 9 op previews and contact_sheet.pgm under " << a.out << "\n";
    return 0;
}

struct AttentionMapArgs {
    std::string checkpoint;
    std::string image;
    std::string out;
};

inline int run_attention_map(const AttentionMapArgs& a, const std::vector<std::string>& argv,
                             std::ostream& out) {
    auto ckpt = load_checkpoint<Real>(a.checkpoint);
    GrayImage img = read_pgm(a.image);
    Tensor<Real> input = preprocess<Real>(img, ckpt.config);
    auto maps = attention_maps(input, ckpt.params, ckpt.config);

    const size_t k = ckpt.config.num_classes;
    const std::string stem = fs::path(a.image).stem().string();
    fs::create_directories(a.out);
    for (size_t pos = 0; pos < ckpt.config.seq_len; ++pos) {
        const Real* row = maps.logits.values().data() + pos * k;
        size_t best = 0;
        for (size_t j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = j;
        }
        std::string token;
        if (pos == 0) {
            token = "GO";
        } else if (best == static_cast<size_t>(Vocabulary::kStopId)) {
            token = "s";
        } else if (best == static_cast<size_t>(Vocabulary::kGoId)) {
            token = "GO";
        } else {
            token = filename_safe(ckpt.vocab.char_of(static_cast<int>(best)));
        }
        const HeatmapImage& hm = maps.heatmaps[pos];
        GrayImage gray(hm.width, hm.height);
        for (size_t i = 0; i < hm.values.size(); ++i) gray.pixels[i] = clamp_u8(hm.values[i] * 255.0);
        write_pgm(fs::path(a.out) /
                      (stem + "_pos" + std::to_string(pos) + "_" + token + ".pgm"),
                  gray);
    }
    write_run_meta(a.out, "attention-map", argv, {{"checkpoint", a.checkpoint}, {"image", a.image}});
    out << "decoded: \"" << ckpt.vocab.decode_greedy(maps.logits).text << "\", wrote "
        << ckpt.config.seq_len << " heatmaps under " << a.out << "\n";
    return 0;
}

struct ParetoArgs {
    std::string baselines;
    std::string axis = "msec";
    std::string out;
};

inline int run_pareto(const ParetoArgs& a, const std::vector<std::string>& argv,
                      std::ostream& out) {
    CostAxis axis = cost_axis_from_name(a.axis);
    auto rows = load_baselines_tsv(a.baselines);
    auto annotated = annotate_dominance(rows, axis);
    out << "name\taccuracy\t" << cost_axis_name(axis) << "\tfrontier\n";
    char line[256];
    for (const auto& p : annotated) {
        std::snprintf(line, sizeof(line), "%s\t%.1f\t%.6g\t%d\n", p.name.c_str(), p.accuracy, p.cost,
                      p.dominated ? 0 : 1);
        out << line;
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_frontier_dat(fs::path(a.out) / ("frontier_" + a.axis + ".dat"), annotated, axis);
        write_run_meta(a.out, "pareto", argv, {{"axis", a.axis}, {"baselines", a.baselines}});
    }
    return 0;
}

}  // namespace detail

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 2 usage error, 3 configuration error, 1 runtime failure.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"ViTSTR scene-text recognition pipeline"};
    app.require_subcommand(1);

    detail::GenerateDataArgs gen;
    auto* gen_cmd = app.add_subcommand("generate-data", "Render a synthetic word-image dataset");
    gen_cmd->add_option("--count", gen.count, "Number of samples")->required();
    gen_cmd->add_option("--charset", gen.charset, "Character set: 'default' or a vocabulary file");
    gen_cmd->add_option("--seed", gen.seed, "Root seed");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--height", gen.height, "Render height in pixels");
    gen_cmd->add_option("--min-len", gen.min_len, "Minimum label length");
    gen_cmd->add_option("--max-len", gen.max_len, "Maximum label length");

    detail::TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset manifest");
    train_cmd->add_option("--config", tr.config, "Config file or variant name (tiny|small|base)");
    train_cmd->add_option("--data", tr.data, "Dataset manifest (TSV)")->required();
    train_cmd->add_option("--out", tr.out, "Output directory")->required();
    auto* seed_opt = train_cmd->add_option("--seed", tr.seed, "Root seed (overrides config)");
    train_cmd->add_option("--set", tr.overrides, "Override a config key, e.g. --set train.steps=50");
    train_cmd->add_option("--resume", tr.resume, "Checkpoint to resume from");

    detail::EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--data", ev.data, "Dataset manifest (TSV)")->required();
    eval_cmd->add_flag("--case-sensitive", ev.case_sensitive, "Disable case-insensitive matching");

    detail::BenchArgs be;
    auto* bench_cmd = app.add_subcommand("bench", "Report parameters, FLOPS and latency");
    bench_cmd->add_option("--config", be.config, "Config file or variant name");
    bench_cmd->add_option("--checkpoint", be.checkpoint, "Checkpoint file (overrides --config)");
    bench_cmd->add_option("--axis", be.axis, "Cost axis: params|msec|flops");
    bench_cmd->add_option("--paper-baselines", be.baselines, "Reference results TSV");
    bench_cmd->add_option("--out", be.out, "Output directory for plot data");
    bench_cmd->add_option("--iters", be.iters, "Timed iterations");
    bench_cmd->add_option("--warmup", be.warmup, "Warmup iterations (excluded)");
    bench_cmd->add_option("--accuracy", be.accuracy, "Known accuracy % for frontier placement");
    bench_cmd->add_option("--seed", be.seed, "Seed for weights and probe image");

    detail::AugmentPreviewArgs ap;
    auto* aug_cmd = app.add_subcommand("augment-preview", "Write one preview PGM per transform");
    aug_cmd->add_option("--image", ap.image, "Source PGM (rendered sample when omitted)");
    aug_cmd->add_option("--text", ap.text, "Text for the rendered sample");
    aug_cmd->add_option("--out", ap.out, "Output directory")->required();
    aug_cmd->add_option("--seed", ap.seed, "Seed");
    aug_cmd->add_option("--magnitude", ap.magnitude, "Magnitude in [0, 1]");

    detail::AttentionMapArgs am;
    auto* attn_cmd = app.add_subcommand("attention-map", "Export per-position attention heatmaps");
    attn_cmd->add_option("--checkpoint", am.checkpoint, "Checkpoint file")->required();
    attn_cmd->add_option("--image", am.image, "Input PGM image")->required();
    attn_cmd->add_option("--out", am.out, "Output directory")->required();

    detail::ParetoArgs pa;
    auto* pareto_cmd = app.add_subcommand("pareto", "Frontier membership for a results table");
    pareto_cmd->add_option("--paper-baselines", pa.baselines, "Reference results TSV")->required();
    pareto_cmd->add_option("--axis", pa.axis, "Cost axis: params|msec|flops");
    pareto_cmd->add_option("--out", pa.out, "Output directory for plot data");

    std::vector<const char*> argv;
    argv.push_back("vitstr");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << "\n";
        err << app.help();
        return 2;
    }

    try {
        if (gen_cmd->parsed()) return detail::run_generate_data(gen, args, out);
        if (train_cmd->parsed()) {
            tr.seed_given = seed_opt->count() > 0;
            return detail::run_train(tr, args, out);
        }
        if (eval_cmd->parsed()) return detail::run_eval(ev, out);
        if (bench_cmd->parsed()) return detail::run_bench(be, args, out);
        if (aug_cmd->parsed()) return detail::run_augment_preview(ap, args, out);
        if (attn_cmd->parsed()) return detail::run_attention_map(am, args, out);
        if (pareto_cmd->parsed()) return detail::run_pareto(pa, args, out);
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: runtime: " << e.what() << "\n";
        return 1;
    }
    err << "error: usage: no subcommand\n";
    return 2;
}

}  // namespace vitstr::cli
