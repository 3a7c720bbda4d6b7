// Acceptance suite: runs every criterion at its pinned tolerance and prints
// one [PASS]/[FAIL] line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "vitstr/cli.hpp"
#include "vitstr/evalbench.hpp"
#include "vitstr/train.hpp"

using namespace vitstr;
namespace fs = std::filesystem;

namespace {

struct Checker {
    std::vector<std::string> failures;
    std::string note;

    void expect(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }
    void expect_near(double got, double want, double rel_tol, const std::string& what) {
        double err = std::fabs(got - want) / std::fabs(want);
        if (err > rel_tol) {
            std::ostringstream os;
            os << what << ": got " << got << ", want " << want << " (rel err " << err << " > "
               << rel_tol << ")";
            failures.push_back(os.str());
        }
    }
};

fs::path work_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "vitstr_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ViTSTRConfig gradcheck_config() {
    ViTSTRConfig c;
    c.patch_size = 16;
    c.depth = 2;
    c.embed_dim = 32;
    c.num_heads = 2;
    c.seq_len = 4;
    c.image_height = 32;
    c.image_width = 32;
    c.num_classes = 5;
    return c;
}

ViTSTRConfig overfit_config() {
    ViTSTRConfig c;
    c.patch_size = 16;
    c.depth = 4;
    c.embed_dim = 64;
    c.num_heads = 4;
    c.seq_len = 12;
    c.image_height = 64;
    c.image_width = 64;
    c.num_classes = 96;
    return c;
}

// --------------------------------------------------------------------------

void criterion_param_counts(Checker& c) {
    struct Row {
        const char* name;
        ViTSTRConfig cfg;
        double published;
    };
    const Row rows[] = {{"tiny", ViTSTRConfig::tiny(), 5.4e6},
                        {"small", ViTSTRConfig::small(), 21.5e6},
                        {"base", ViTSTRConfig::base(), 85.8e6}};
    std::ostringstream note;
    for (const auto& row : rows) {
        uint64_t analytic = count_params(row.cfg);
        c.expect_near(static_cast<double>(analytic), row.published, 0.02,
                      std::string(row.name) + " parameter count vs published");
        ModelParams<float> params(row.cfg);
        c.expect(analytic == params.parameter_count(),
                 std::string(row.name) + ": closed form " + std::to_string(analytic) +
                     " != runtime inventory " + std::to_string(params.parameter_count()));
        note << row.name << "=" << analytic << " ";
    }
    c.note = note.str();
}

void criterion_flops(Checker& c) {
    struct Row {
        const char* name;
        ViTSTRConfig cfg;
        double published;
    };
    const Row rows[] = {{"tiny", ViTSTRConfig::tiny(), 1.3e9},
                        {"small", ViTSTRConfig::small(), 4.6e9},
                        {"base", ViTSTRConfig::base(), 17.6e9}};
    std::ostringstream note;
    for (const auto& row : rows) {
        uint64_t macs = estimate_flops(row.cfg);
        c.expect_near(static_cast<double>(macs), row.published, 0.15,
                      std::string(row.name) + " MAC estimate vs published");
        note << row.name << "=" << static_cast<double>(macs) / 1e9 << "e9 ";
    }
    c.note = note.str();
}

void criterion_gradcheck(Checker& c) {
    ViTSTRConfig cfg = gradcheck_config();
    Vocabulary vocab("abc");
    ModelParams<double> params(cfg);
    SplitRng rng(77);
    he_init(params, rng);

    auto dataset = generate_dataset(2, vocab, 7, 32, 1, cfg.max_text_len());
    Tensor<double> batch({2, 1, cfg.image_height, cfg.image_width});
    std::vector<int> targets;
    for (size_t i = 0; i < 2; ++i) {
        auto img = preprocess<double>(dataset[i], cfg);
        std::copy(img.values().begin(), img.values().end(),
                  batch.values().begin() + static_cast<long>(i * img.numel()));
        auto ids = vocab.encode(dataset[i].label, cfg.seq_len);
        targets.insert(targets.end(), ids.begin(), ids.end());
    }
    auto loss_fn = [&] { return cross_entropy(forward(batch, params, cfg), targets); };

    double worst = 0;
    std::string worst_group;
    for (auto& [name, tensor] : params.named_tensors()) {
        double err = oracles::max_grad_rel_error({tensor}, loss_fn);
        if (err > worst) {
            worst = err;
            worst_group = name;
        }
        c.expect(err < 1e-4, "gradient of " + name + ": max relative error " +
                                 std::to_string(err) + " >= 1e-4");
    }
    std::ostringstream note;
    note << params.parameter_count() << " parameters checked, worst " << worst << " ("
         << worst_group << ")";
    c.note = note.str();
}

TrainResult run_overfit(const fs::path& out_dir) {
    ViTSTRConfig cfg = overfit_config();
    Vocabulary vocab = Vocabulary::default_latin();
    auto dataset = generate_dataset(32, vocab, 2024, 32, 1, cfg.max_text_len());
    TrainConfig tc;
    tc.steps = 3000;
    tc.batch_size = 32;
    tc.seed = 5;
    tc.stop_at_accuracy = 100.0;
    ModelParams<float> params(cfg);
    SplitRng rng = SplitRng(tc.seed).split(1);
    he_init(params, rng);
    AdadeltaState<float> state(params);
    return train_loop(params, state, dataset, vocab, tc, out_dir);
}

void criterion_overfit(Checker& c, TrainResult& first_run, fs::path& first_dir) {
    first_dir = work_dir("overfit_a");
    first_run = run_overfit(first_dir);
    const double lnk = std::log(96.0);
    c.expect(!first_run.records.empty(), "no training records produced");
    if (first_run.records.empty()) return;
    double initial = first_run.records.front().loss;
    c.expect(std::fabs(initial - lnk) / lnk <= 0.15,
             "initial loss " + std::to_string(initial) + " outside ln(96) +/- 15%");
    const auto& last = first_run.records.back();
    c.expect(last.train_accuracy >= 100.0,
             "train accuracy " + std::to_string(last.train_accuracy) + "% after " +
                 std::to_string(last.step + 1) + " steps, never reached 100%");
    c.expect(last.step < 3000, "needed more than 3000 steps");

    // eval on the written checkpoint reports the final record's accuracy
    auto dataset = generate_dataset(32, Vocabulary::default_latin(), 2024, 32, 1,
                                    overfit_config().max_text_len());
    fs::path data_dir = work_dir("overfit_data");
    save_dataset(data_dir, dataset);
    std::ostringstream out, err;
    int code = cli::dispatch({"eval", "--checkpoint",
                              (first_dir / "checkpoint_final.ckpt").string(), "--data",
                              (data_dir / "manifest.tsv").string()},
                             out, err);
    c.expect(code == 0, "eval CLI exited " + std::to_string(code) + ": " + err.str());
    if (code == 0) {
        std::istringstream line(out.str());
        std::string name;
        size_t n = 0;
        double eval_acc = -1;
        line >> name >> n >> eval_acc;
        c.expect(n == 32 && eval_acc == last.train_accuracy,
                 "eval reports " + std::to_string(eval_acc) + "% on " + std::to_string(n) +
                     " samples, train log ended at " + std::to_string(last.train_accuracy) + "%");
    }
    std::ostringstream note;
    note << "initial loss " << initial << ", 100% at step " << last.step << ", eval agrees";
    c.note = note.str();
}

void criterion_shapes_protocol(Checker& c) {
    // tiny forward emits (B, 27, 96) at 224x224
    ViTSTRConfig cfg = ViTSTRConfig::tiny();
    ModelParams<float> params(cfg);
    SplitRng rng(21);
    he_init(params, rng);
    Tensor<float> batch({2, 1, 224, 224});
    SplitRng img_rng(22);
    for (float& v : batch.values()) v = static_cast<float>(img_rng.uniform(-1.0, 1.0));
    GradTape::NoGrad pause;
    auto logits = forward(batch, params, cfg);
    c.expect(logits.shape() == std::vector<size_t>{2, 27, 96},
             "tiny forward shape is " + shape_str(logits.shape()) + ", want [2 x 27 x 96]");
    c.expect(logits.all_finite(), "tiny forward produced non-finite logits");

    // tokenizer roundtrip over 10,000 random strings
    Vocabulary vocab = Vocabulary::default_latin();
    const size_t s = cfg.seq_len;
    SplitRng trng(23);
    size_t failures = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        size_t len = static_cast<size_t>(trng.uniform_int(0, static_cast<int64_t>(s - 2)));
        std::string text;
        for (size_t i = 0; i < len; ++i) {
            text.push_back(vocab.charset()[static_cast<size_t>(
                trng.uniform_int(0, static_cast<int64_t>(vocab.charset().size()) - 1))]);
        }
        auto ids = vocab.encode(text, s);
        bool ok = ids.size() == s && ids[0] == Vocabulary::kGoId;
        for (size_t i = len + 1; i < s && ok; ++i) ok = ids[i] == Vocabulary::kStopId;
        if (ok) {
            Tensor<float> logits_oh({s, vocab.size()}, -2.0f);
            for (size_t i = 0; i < s; ++i) logits_oh.at(i, static_cast<size_t>(ids[i])) = 9.0f;
            ok = vocab.decode_greedy(logits_oh).text == text;
        }
        if (!ok) ++failures;
    }
    c.expect(failures == 0, std::to_string(failures) + " of 10000 roundtrips failed");
    c.note = "forward (2,27,96) ok, 10000 roundtrips ok";
}

void criterion_attention(Checker& c) {
    ViTSTRConfig cfg = gradcheck_config();
    Vocabulary vocab("abc");
    ModelParams<float> params(cfg);
    SplitRng rng(31);
    he_init(params, rng);

    SplitRng img_rng(32);
    WordImage sample = render_word("ab", 32, img_rng);
    auto input = preprocess<float>(sample, cfg);
    auto maps = attention_maps(input, params, cfg);

    const size_t t = cfg.tokens();
    size_t bad_rows = 0;
    for (size_t l = 0; l < cfg.depth; ++l) {
        for (size_t h = 0; h < cfg.num_heads; ++h) {
            for (size_t i = 0; i < t; ++i) {
                double total = 0;
                for (size_t j = 0; j < t; ++j)
                    total += static_cast<double>(maps.raw.at(l, h, i, j));
                if (std::fabs(total - 1.0) > 1e-5) ++bad_rows;
            }
        }
    }
    c.expect(bad_rows == 0, std::to_string(bad_rows) + " attention rows do not sum to 1 +/- 1e-5");

    // heatmap export through the CLI: S well-formed PGM files
    fs::path dir = work_dir("attention");
    save_checkpoint<float>(dir / "model.ckpt", params, nullptr, vocab, 0);
    write_pgm(dir / "sample.pgm", sample.pixels);
    std::ostringstream out, err;
    int code = cli::dispatch({"attention-map", "--checkpoint", (dir / "model.ckpt").string(),
                              "--image", (dir / "sample.pgm").string(), "--out",
                              (dir / "maps").string()},
                             out, err);
    c.expect(code == 0, "attention-map CLI exited " + std::to_string(code) + ": " + err.str());
    size_t pgms = 0;
    if (code == 0) {
        for (const auto& entry : fs::directory_iterator(dir / "maps")) {
            if (entry.path().extension() != ".pgm") continue;
            GrayImage hm = read_pgm(entry.path());  // throws if malformed
            if (hm.width == cfg.image_width && hm.height == cfg.image_height) ++pgms;
        }
    }
    c.expect(pgms == cfg.seq_len, "expected " + std::to_string(cfg.seq_len) +
                                      " heatmap PGMs, found " + std::to_string(pgms));
    c.note = "all rows sum to 1, " + std::to_string(pgms) + " heatmap files";
}

void criterion_augment(Checker& c) {
    SplitRng img_rng(41);
    GrayImage img = render_word("Check01", 32, img_rng).pixels;

    SplitRng inv_rng(42);
    AugOp invert{AugKind::Invert, 1.0};
    GrayImage twice = apply(invert, apply(invert, img, inv_rng), inv_rng);
    c.expect(twice == img, "Invert twice is not the identity");

    for (AugKind kind : kAllAugKinds) {
        if (kind == AugKind::Invert) continue;
        SplitRng rng(43);
        GrayImage out = apply(AugOp{kind, 0.0}, img, rng);
        c.expect(out == img,
                 std::string("magnitude 0 ") + aug_kind_name(kind) + " is not the identity");
    }

    RandAugmentPolicy policy;
    SplitRng root(44);
    size_t dim_failures = 0, det_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        SplitRng r1 = root.split(static_cast<uint64_t>(i));
        SplitRng r2 = root.split(static_cast<uint64_t>(i));
        GrayImage a = rand_augment(policy, img, r1);
        GrayImage b = rand_augment(policy, img, r2);
        if (a.width != img.width || a.height != img.height) ++dim_failures;
        if (!(a == b)) ++det_failures;
    }
    c.expect(dim_failures == 0, std::to_string(dim_failures) + " draws changed dimensions");
    c.expect(det_failures == 0, std::to_string(det_failures) + " draws were not reproducible");
    c.note = "9 ops, 1000 draws, dims and determinism hold";
}

void criterion_optimizer(Checker& c) {
    std::vector<double> x = {1.0}, g = {1.0}, eg2 = {0.0}, ed2 = {0.0};
    adadelta_update(x, g, eg2, ed2, 1.0, 0.95, 1e-8);
    const double dx = x[0] - 1.0;
    const double hand = -std::sqrt((0.0 + 1e-8) / (0.05 + 1e-8));  // -4.4721e-4
    c.expect(std::fabs(dx - (-4.4721e-4)) < 1e-8,
             "Adadelta step " + std::to_string(dx) + " not within 1e-8 of -4.4721e-4");
    c.expect(std::fabs(dx - hand) < 1e-12, "Adadelta step drifts from the update rule");
    c.expect(std::fabs(x[0] - 0.9995528) < 1e-7, "updated parameter != 0.9995528");

    Tensor<double> a({1}, {0.0}, true), b({1}, {0.0}, true);
    a.storage()->ensure_grad();
    b.storage()->ensure_grad();
    a.grad()[0] = 3.0;
    b.grad()[0] = 4.0;
    clip_global_norm<double>({&a, &b}, 5.0);
    c.expect(a.grad()[0] == 3.0 && b.grad()[0] == 4.0, "norm-5 gradients were clipped at limit 5");
    a.grad()[0] = 6.0;
    b.grad()[0] = 8.0;
    clip_global_norm<double>({&a, &b}, 5.0);
    c.expect(std::fabs(a.grad()[0] - 3.0) < 1e-12 && std::fabs(b.grad()[0] - 4.0) < 1e-12,
             "(6,8) did not clip to (3,4)");

    std::vector<double> x2 = {2.5}, g0 = {0.0}, eg = {0.7}, ed = {0.1};
    const std::vector<double> before = x2;
    adadelta_update(x2, g0, eg, ed, 1.0, 0.95, 1e-8);
    c.expect(x2 == before, "zero-gradient step changed parameters");
    c.note = "hand value, clipping and zero-grad identity exact";
}

void criterion_frontier(Checker& c) {
    // brute-force oracle agreement on 100 random point sets
    SplitRng rng(51);
    size_t mismatches = 0;
    for (int set = 0; set < 100; ++set) {
        size_t n = static_cast<size_t>(rng.uniform_int(1, 100));
        std::vector<CostReport> pts(n);
        for (size_t i = 0; i < n; ++i) {
            pts[i].name = "p";
            pts[i].accuracy_percent = rng.uniform(50.0, 90.0);
            pts[i].msec_per_image = rng.uniform(1.0, 30.0);
            if (i > 0 && rng.next_double() < 0.2) pts[i].msec_per_image = pts[i - 1].msec_per_image;
        }
        auto fast = annotate_dominance(pts, CostAxis::Msec);
        for (size_t i = 0; i < n; ++i) {
            bool dominated = false;
            for (size_t j = 0; j < n && !dominated; ++j) {
                if (i == j) continue;
                dominated = pts[j].accuracy_percent >= pts[i].accuracy_percent &&
                            pts[j].msec_per_image <= pts[i].msec_per_image &&
                            (pts[j].accuracy_percent > pts[i].accuracy_percent ||
                             pts[j].msec_per_image < pts[i].msec_per_image);
            }
            if (fast[i].dominated != dominated) ++mismatches;
        }
    }
    c.expect(mismatches == 0,
             std::to_string(mismatches) + " dominance flags disagree with the brute-force oracle");

    // every published ViTSTR row is non-dominated on at least one cost axis;
    // each augmentation family is its own series against the seven baseline
    // models (the two families are separate plot lines)
    auto all = load_baselines_tsv(fs::path(VITSTR_DATA_DIR) / "paper_baselines.tsv");
    auto is_vitstr = [](const CostReport& r) { return r.name.rfind("ViTSTR", 0) == 0; };
    auto is_aug = [](const CostReport& r) { return r.name.find("+Aug") != std::string::npos; };
    size_t vitstr_rows = 0, ok_rows = 0;
    for (bool aug_family : {false, true}) {
        std::vector<CostReport> series;
        for (const auto& r : all) {
            if (!is_vitstr(r) || is_aug(r) == aug_family) series.push_back(r);
        }
        std::vector<bool> on_some_frontier(series.size(), false);
        for (CostAxis axis : {CostAxis::Params, CostAxis::Msec, CostAxis::Flops}) {
            auto annotated = annotate_dominance(series, axis);
            for (size_t i = 0; i < series.size(); ++i) {
                if (!annotated[i].dominated) on_some_frontier[i] = true;
            }
        }
        for (size_t i = 0; i < series.size(); ++i) {
            if (!is_vitstr(series[i])) continue;
            ++vitstr_rows;
            if (on_some_frontier[i]) {
                ++ok_rows;
            } else {
                c.failures.push_back(series[i].name + " is dominated on every cost axis");
            }
        }
    }
    c.expect(vitstr_rows == 6, "expected 6 ViTSTR rows, found " + std::to_string(vitstr_rows));
    c.note = "oracle agrees on 100 sets; " + std::to_string(ok_rows) + "/" +
             std::to_string(vitstr_rows) + " ViTSTR rows on some frontier";
}

void criterion_determinism(Checker& c, const TrainResult& first_run, const fs::path& first_dir) {
    fs::path second_dir = work_dir("overfit_b");
    TrainResult second = run_overfit(second_dir);
    c.expect(first_run.records.size() == second.records.size(),
             "run lengths differ: " + std::to_string(first_run.records.size()) + " vs " +
                 std::to_string(second.records.size()));
    auto read_all = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    std::string log_a = read_all(first_dir / "metrics.tsv");
    std::string log_b = read_all(second_dir / "metrics.tsv");
    c.expect(!log_a.empty(), "first metrics log is empty");
    c.expect(log_a == log_b, "metrics logs differ between identically seeded runs");
    c.note = "two runs, byte-identical metrics logs (" + std::to_string(log_a.size()) + " bytes)";
}

}  // namespace

int main() {
    struct Result {
        int id;
        std::string name;
        Checker checker;
        double seconds = 0.0;
    };
    std::vector<Result> results;
    TrainResult overfit_result;
    fs::path overfit_dir;

    auto run = [&](int id, const std::string& name, const std::function<void(Checker&)>& fn) {
        Result r{id, name, {}, 0.0};
        auto t0 = std::chrono::steady_clock::now();
        try {
            fn(r.checker);
        } catch (const std::exception& e) {
            r.checker.failures.push_back(std::string("exception: ") + e.what());
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results.push_back(std::move(r));
    };

    run(1, "parameter-count oracle", criterion_param_counts);
    run(2, "FLOPS oracle", criterion_flops);
    run(3, "gradient correctness", criterion_gradcheck);
    run(4, "overfit sanity",
        [&](Checker& c) { criterion_overfit(c, overfit_result, overfit_dir); });
    run(5, "shape/protocol suite", criterion_shapes_protocol);
    run(6, "attention invariants", criterion_attention);
    run(7, "augmentation suite", criterion_augment);
    run(8, "optimizer conformance", criterion_optimizer);
    run(9, "frontier oracle", criterion_frontier);
    run(10, "determinism",
        [&](Checker& c) { criterion_determinism(c, overfit_result, overfit_dir); });

    int failures = 0;
    for (const auto& r : results) {
        if (r.checker.failures.empty()) {
            std::printf("[PASS] %2d %-24s (%.1fs) %s\n", r.id, r.name.c_str(), r.seconds,
                        r.checker.note.c_str());
        } else {
            ++failures;
            std::printf("[FAIL] %2d %-24s (%.1fs)\n", r.id, r.name.c_str(), r.seconds);
            for (const auto& f : r.checker.failures) std::printf("       - %s\n", f.c_str());
        }
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
