#include <catch2/catch_amalgamated.hpp>

#include "vitstr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vitstr;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("vitstr_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    int code = cli::dispatch(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

// Micro model config file shared by the pipeline tests (K=96 matches the
// default charset).
fs::path write_micro_config(const fs::path& dir) {
    fs::path path = dir / "micro.conf";
    std::ofstream f(path);
    f << "seed = 9\n"
      << "[model]\n"
      << "variant = custom\n"
      << "patch_size = 16\n"
      << "depth = 1\n"
      << "embed_dim = 16\n"
      << "num_heads = 2\n"
      << "seq_len = 4\n"
      << "image_height = 32\n"
      << "image_width = 32\n"
      << "[train]\n"
      << "steps = 2\n"
      << "batch_size = 4\n";
    return path;
}

}  // namespace

TEST_CASE("key-value config parsing", "[cli]") {
    auto dir = temp_dir("conf");
    {
        std::ofstream f(dir / "a.conf");
        f << "# comment\n"
          << "seed = 7\n"
          << "[model]\n"
          << "variant = small\n"
          << "\n"
          << "[train]\n"
          << "steps = 12\n";
    }
    auto kv = KeyValueConfig::from_file(dir / "a.conf");
    CHECK(kv.get("model.variant", "") == "small");
    CHECK(kv.get_u64("train.steps", 0) == 12);
    CHECK(kv.get_u64("seed", 0) == 7);

    auto rc = RunConfig::resolve(kv);
    CHECK(rc.model.embed_dim == 384);
    CHECK(rc.train.steps == 12);
    CHECK(rc.seed == 7);

    {
        std::ofstream f(dir / "bad.conf");
        f << "train.stepz = 12\n";
    }
    CHECK_THROWS_AS(RunConfig::resolve(KeyValueConfig::from_file(dir / "bad.conf")), ConfigError);
    {
        std::ofstream f(dir / "noeq.conf");
        f << "[model]\nvariant small\n";
    }
    CHECK_THROWS_AS(KeyValueConfig::from_file(dir / "noeq.conf"), ConfigError);
    {
        std::ofstream f(dir / "badval.conf");
        f << "[train]\nsteps = soon\n";
    }
    CHECK_THROWS_AS(RunConfig::resolve(KeyValueConfig::from_file(dir / "badval.conf")), ConfigError);
}

TEST_CASE("usage errors exit 2", "[cli]") {
    std::string err;
    CHECK(run({}, nullptr, &err) == 2);
    CHECK(err.find("error: usage") != std::string::npos);
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"eval", "--bogus-flag"}) == 2);
    CHECK(run({"eval"}) == 2);  // missing required options
    std::string out;
    CHECK(run({"--help"}, &out) == 0);
    CHECK(out.find("generate-data") != std::string::npos);
}

TEST_CASE("config validation failures exit 3", "[cli]") {
    auto dir = temp_dir("exit3");
    {
        std::ofstream f(dir / "unknown.conf");
        f << "[model]\nvariant = tiny\nwarp_factor = 9\n";
    }
    // a data manifest is required for train to parse, content irrelevant here
    std::ofstream(dir / "empty.tsv");
    std::string err;
    int code = run({"train", "--config", (dir / "unknown.conf").string(), "--data",
                    (dir / "empty.tsv").string(), "--out", (dir / "out").string()},
                   nullptr, &err);
    CHECK(code == 3);
    CHECK(err.find("error: config") != std::string::npos);
    CHECK(err.find("warp_factor") != std::string::npos);

    // invalid dimension combination
    int code2 = run({"train", "--config", (dir / "unknown.conf").string(), "--set",
                     "model.num_heads=5", "--data", (dir / "empty.tsv").string(), "--out",
                     (dir / "out").string()},
                    nullptr, &err);
    CHECK(code2 == 3);
}

TEST_CASE("runtime failures exit 1 with a one-line error", "[cli]") {
    std::string err;
    int code = run({"eval", "--checkpoint", "/nonexistent.ckpt", "--data", "/nonexistent.tsv"},
                   nullptr, &err);
    CHECK(code == 1);
    CHECK(err.rfind("error: runtime:", 0) == 0);
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);
}

TEST_CASE("generate-data writes a loadable dataset and run.meta", "[cli]") {
    auto dir = temp_dir("gen");
    std::string out;
    int code = run({"generate-data", "--count", "6", "--seed", "3", "--out", dir.string(),
                    "--max-len", "2"},
                   &out);
    REQUIRE(code == 0);
    CHECK(fs::exists(dir / "manifest.tsv"));
    CHECK(fs::exists(dir / "run.meta"));
    Vocabulary vocab = Vocabulary::default_latin();
    auto samples = load_dataset(dir / "manifest.tsv", &vocab);
    CHECK(samples.size() == 6);
    for (const auto& s : samples) CHECK(s.label.size() <= 2);

    std::ifstream meta(dir / "run.meta");
    std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
    CHECK(text.find("command = generate-data") != std::string::npos);
    CHECK(text.find("seed = 3") != std::string::npos);
}

TEST_CASE("pipeline: train, eval, attention-map, bench, pareto, preview", "[cli]") {
    auto dir = temp_dir("pipeline");
    fs::path conf = write_micro_config(dir);

    REQUIRE(run({"generate-data", "--count", "6", "--seed", "4", "--out",
                 (dir / "data").string(), "--max-len", "2"}) == 0);

    fs::path run_dir = dir / "run";
    std::string out;
    REQUIRE(run({"train", "--config", conf.string(), "--data",
                 (dir / "data" / "manifest.tsv").string(), "--out", run_dir.string()},
                &out) == 0);
    CHECK(fs::exists(run_dir / "metrics.tsv"));
    CHECK(fs::exists(run_dir / "checkpoint_final.ckpt"));
    CHECK(fs::exists(run_dir / "run.meta"));

    // eval prints dataset<TAB>n<TAB>accuracy
    std::string eval_out;
    REQUIRE(run({"eval", "--checkpoint", (run_dir / "checkpoint_final.ckpt").string(), "--data",
                 (dir / "data" / "manifest.tsv").string()},
                &eval_out) == 0);
    std::istringstream line(eval_out);
    std::string dataset_name;
    size_t n = 0;
    double acc = -1;
    line >> dataset_name >> n >> acc;
    CHECK(dataset_name == "manifest");
    CHECK(n == 6);
    CHECK(acc >= 0.0);
    CHECK(acc <= 100.0);

    // attention-map writes S heatmap PGMs named <stem>_pos<i>_<char>.pgm
    fs::path attn_dir = dir / "attn";
    REQUIRE(run({"attention-map", "--checkpoint", (run_dir / "checkpoint_final.ckpt").string(),
                 "--image", (dir / "data" / "images" / "000000.pgm").string(), "--out",
                 attn_dir.string()}) == 0);
    size_t pgms = 0;
    for (const auto& entry : fs::directory_iterator(attn_dir)) {
        if (entry.path().extension() == ".pgm") {
            ++pgms;
            GrayImage hm = read_pgm(entry.path());
            CHECK(hm.width == 32);
            CHECK(hm.height == 32);
            CHECK(entry.path().filename().string().rfind("000000_pos", 0) == 0);
        }
    }
    CHECK(pgms == 4);  // seq_len of the micro config

    // bench prints the cost report and the frontier table with baselines
    std::string bench_out;
    REQUIRE(run({"bench", "--config", conf.string(), "--iters", "2", "--warmup", "1",
                 "--paper-baselines",
                 (fs::path(VITSTR_DATA_DIR) / "paper_baselines.tsv").string(), "--axis", "msec"},
                &bench_out) == 0);
    CHECK(bench_out.find("MACs =") != std::string::npos);
    CHECK(bench_out.find("threads=") != std::string::npos);
    CHECK(bench_out.find("ViTSTR-Tiny") != std::string::npos);

    // pareto emits frontier membership per row
    std::string pareto_out;
    REQUIRE(run({"pareto", "--paper-baselines",
                 (fs::path(VITSTR_DATA_DIR) / "paper_baselines.tsv").string(), "--axis", "msec",
                 "--out", (dir / "pareto").string()},
                &pareto_out) == 0);
    CHECK(pareto_out.find("CRNN\t76.7\t3.7\t1") != std::string::npos);
    CHECK(fs::exists(dir / "pareto" / "frontier_msec.dat"));

    // augment-preview writes one PGM per op plus the contact sheet
    fs::path prev_dir = dir / "preview";
    REQUIRE(run({"augment-preview", "--out", prev_dir.string(), "--seed", "5"}) == 0);
    for (AugKind kind : kAllAugKinds) {
        CHECK(fs::exists(prev_dir / ("preview_" + std::string(aug_kind_name(kind)) + ".pgm")));
    }
    CHECK(fs::exists(prev_dir / "contact_sheet.pgm"));
}

TEST_CASE("train --set overrides the config file", "[cli]") {
    auto dir = temp_dir("override");
    fs::path conf = write_micro_config(dir);
    REQUIRE(run({"generate-data", "--count", "4", "--seed", "6", "--out",
                 (dir / "data").string(), "--max-len", "2"}) == 0);
    fs::path run_dir = dir / "run";
    REQUIRE(run({"train", "--config", conf.string(), "--set", "train.steps=1", "--seed", "77",
                 "--data", (dir / "data" / "manifest.tsv").string(), "--out",
                 run_dir.string()}) == 0);
    std::ifstream metrics(run_dir / "metrics.tsv");
    std::string header, first, second;
    std::getline(metrics, header);
    std::getline(metrics, first);
    CHECK_FALSE(std::getline(metrics, second));  // exactly one step

    std::ifstream meta(run_dir / "run.meta");
    std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
    CHECK(text.find("seed = 77") != std::string::npos);
}
