#include <catch2/catch_amalgamated.hpp>

#include "vitstr/evalbench.hpp"
#include "vitstr/train.hpp"

using namespace vitstr;

namespace {

// O(n^2) dominance oracle, straight from the definition.
std::vector<bool> brute_dominated(const std::vector<CostReport>& pts, CostAxis axis) {
    std::vector<bool> out(pts.size(), false);
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            double ai = pts[i].accuracy_percent, aj = pts[j].accuracy_percent;
            double ci = cost_of(pts[i], axis), cj = cost_of(pts[j], axis);
            if (aj >= ai && cj <= ci && (aj > ai || cj < ci)) {
                out[i] = true;
                break;
            }
        }
    }
    return out;
}

CostReport point(std::string name, double acc, double msec) {
    CostReport r;
    r.name = std::move(name);
    r.accuracy_percent = acc;
    r.msec_per_image = msec;
    return r;
}

}  // namespace

TEST_CASE("word accuracy rules", "[evalbench]") {
    CHECK(word_accuracy({"Hello"}, {"hello"}) == 100.0);
    CHECK(word_accuracy({"ab"}, {"abc"}) == 0.0);
    CHECK(word_accuracy({"Hello"}, {"hello"}, false) == 0.0);
    CHECK(word_accuracy({"a", "b", "c", "d"}, {"a", "b", "x", "y"}) == 50.0);
    CHECK_THROWS_AS(word_accuracy({"a"}, {"a", "b"}), std::invalid_argument);

    // permutation invariance over pairs
    std::vector<std::string> p = {"one", "two", "three", "four"};
    std::vector<std::string> t = {"one", "xxx", "three", "yyy"};
    double base = word_accuracy(p, t);
    std::vector<size_t> perm = {2, 0, 3, 1};
    std::vector<std::string> p2, t2;
    for (size_t i : perm) {
        p2.push_back(p[i]);
        t2.push_back(t[i]);
    }
    CHECK(word_accuracy(p2, t2) == base);
}

TEST_CASE("parameter counts match the published footprints", "[evalbench]") {
    CHECK(count_params(ViTSTRConfig::tiny()) == 5444640ull);
    const double small_count = static_cast<double>(count_params(ViTSTRConfig::small()));
    const double base_count = static_cast<double>(count_params(ViTSTRConfig::base()));
    CHECK(std::fabs(small_count - 21.5e6) / 21.5e6 < 0.02);
    CHECK(std::fabs(base_count - 85.8e6) / 85.8e6 < 0.02);
}

TEST_CASE("closed-form count equals the runtime inventory on random configs", "[evalbench]") {
    SplitRng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        ViTSTRConfig c;
        c.num_heads = static_cast<size_t>(rng.uniform_int(1, 4));
        c.embed_dim = c.num_heads * static_cast<size_t>(rng.uniform_int(1, 8));
        c.depth = static_cast<size_t>(rng.uniform_int(1, 3));
        c.patch_size = static_cast<size_t>(rng.uniform_int(2, 8));
        c.image_height = c.patch_size * static_cast<size_t>(rng.uniform_int(1, 4));
        c.image_width = c.patch_size * static_cast<size_t>(rng.uniform_int(1, 4));
        c.seq_len = std::min<size_t>(c.tokens(),
                                     static_cast<size_t>(rng.uniform_int(2, 8)));
        c.num_classes = static_cast<size_t>(rng.uniform_int(3, 50));
        c.mlp_ratio = static_cast<size_t>(rng.uniform_int(1, 4));
        ModelParams<float> params(c);
        CHECK(count_params(c) == params.parameter_count());
    }
    // the reference configs as well
    for (auto c : {ViTSTRConfig::tiny(), ViTSTRConfig::small(), ViTSTRConfig::base()}) {
        ModelParams<float> params(c);
        CHECK(count_params(c) == params.parameter_count());
    }
}

TEST_CASE("FLOPS estimates land near the published numbers", "[evalbench]") {
    const double tiny = static_cast<double>(estimate_flops(ViTSTRConfig::tiny()));
    const double small_f = static_cast<double>(estimate_flops(ViTSTRConfig::small()));
    const double base_f = static_cast<double>(estimate_flops(ViTSTRConfig::base()));
    CHECK(std::fabs(tiny - 1.3e9) / 1.3e9 < 0.15);
    CHECK(std::fabs(small_f - 4.6e9) / 4.6e9 < 0.15);
    CHECK(std::fabs(base_f - 17.6e9) / 17.6e9 < 0.15);
}

TEST_CASE("FLOPS model is monotone and roughly quadratic in D", "[evalbench]") {
    ViTSTRConfig c = ViTSTRConfig::tiny();
    auto bump = [&](auto field_setter) {
        ViTSTRConfig c2 = c;
        field_setter(c2);
        return c2;
    };
    CHECK(estimate_flops(bump([](ViTSTRConfig& x) { x.depth += 4; })) > estimate_flops(c));
    CHECK(estimate_flops(bump([](ViTSTRConfig& x) { x.embed_dim += 192; })) > estimate_flops(c));
    CHECK(estimate_flops(bump([](ViTSTRConfig& x) {
              x.image_height += 32;
              x.image_width += 32;
          })) > estimate_flops(c));
    CHECK(estimate_flops(bump([](ViTSTRConfig& x) { x.num_classes += 32; })) > estimate_flops(c));

    // doubling D at fixed L multiplies per-block MACs by ~4
    ViTSTRConfig d2 = c;
    d2.embed_dim *= 2;
    d2.num_heads *= 2;
    const double t = static_cast<double>(c.tokens());
    const double d = static_cast<double>(c.embed_dim);
    auto block_macs = [&](const ViTSTRConfig& cc) {
        double dd = static_cast<double>(cc.embed_dim);
        return static_cast<double>(cc.depth) * (12.0 * t * dd * dd + 2.0 * t * t * dd);
    };
    double ratio = block_macs(d2) / block_macs(c);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
    (void)d;
}

TEST_CASE("latency statistics", "[evalbench]") {
    auto s = latency_stats({9.0, 2.0, 2.0, 2.0, 2.0}, 1);  // warmup sample dropped
    CHECK(s.median_ms == 2.0);
    CHECK(s.iqr_ms() == 0.0);
    CHECK(s.iters == 4);

    auto spread = latency_stats({100.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 1);
    CHECK(spread.median_ms == 3.0);
    CHECK_THROWS_AS(latency_stats({1.0}, 1), std::invalid_argument);
}

TEST_CASE("latency benchmark contract and monotonicity", "[evalbench]") {
    ViTSTRConfig small_img = ViTSTRConfig::tiny();
    small_img.image_height = small_img.image_width = 96;
    ViTSTRConfig big = ViTSTRConfig::base();
    big.image_height = big.image_width = 96;

    ModelParams<float> tiny_params(small_img);
    ModelParams<float> base_params(big);
    SplitRng rng(33);
    he_init(tiny_params, rng);
    he_init(base_params, rng);

    CHECK_THROWS_AS(benchmark_latency(tiny_params, small_img, 0, 0), std::invalid_argument);
    auto lt = benchmark_latency(tiny_params, small_img, 1, 3);
    auto lb = benchmark_latency(base_params, big, 1, 3);
    CHECK(lt.median_ms > 0.0);
    CHECK(lt.precision == "f32");
    CHECK(lt.threads == worker_threads());
    CHECK(lt.median_ms < lb.median_ms);
}

TEST_CASE("pareto frontier agrees with the brute-force oracle", "[evalbench]") {
    SplitRng rng(34);
    for (int set = 0; set < 100; ++set) {
        size_t n = static_cast<size_t>(rng.uniform_int(1, 100));
        std::vector<CostReport> pts;
        for (size_t i = 0; i < n; ++i) {
            CostReport r;
            r.name = "p" + std::to_string(i);
            r.accuracy_percent = rng.uniform(50.0, 90.0);
            r.msec_per_image = rng.uniform(1.0, 30.0);
            // duplicates and ties happen
            if (i > 1 && rng.next_double() < 0.15) {
                r.msec_per_image = pts[i - 1].msec_per_image;
            }
            if (i > 1 && rng.next_double() < 0.1) {
                r.accuracy_percent = pts[i - 2].accuracy_percent;
            }
            pts.push_back(std::move(r));
        }
        auto annotated = annotate_dominance(pts, CostAxis::Msec);
        auto want = brute_dominated(pts, CostAxis::Msec);
        for (size_t i = 0; i < n; ++i) {
            INFO("set " << set << " point " << i);
            CHECK(annotated[i].dominated == want[i]);
        }
    }
}

TEST_CASE("speed frontier on published rows", "[evalbench]") {
    std::vector<CostReport> pts = {point("CRNN", 76.7, 3.7), point("ViTSTR-Tiny", 80.3, 9.3),
                                   point("TRBA", 84.3, 22.8)};
    auto frontier = pareto_frontier(pts, CostAxis::Msec);
    CHECK(frontier.size() == 3);  // all three on the speed frontier

    pts.push_back(point("slowpoke", 76.0, 10.0));
    auto att = annotate_dominance(pts, CostAxis::Msec);
    CHECK(att[3].dominated);  // dominated by ViTSTR-Tiny
    CHECK_FALSE(att[0].dominated);
    CHECK_FALSE(att[1].dominated);
    CHECK_FALSE(att[2].dominated);

    auto single = pareto_frontier({point("only", 50.0, 1.0)}, CostAxis::Msec);
    CHECK(single.size() == 1);
    CHECK(pareto_frontier({}, CostAxis::Msec).empty());
}

TEST_CASE("baselines file loads with counts scaled to units", "[evalbench]") {
    auto rows = load_baselines_tsv(std::filesystem::path(VITSTR_DATA_DIR) / "paper_baselines.tsv");
    REQUIRE(rows.size() == 13);
    CHECK(rows[0].name == "CRNN");
    CHECK(rows[0].params == 8500000ull);
    CHECK(rows[0].flops == 1400000000ull);
    auto tiny = std::find_if(rows.begin(), rows.end(),
                             [](const CostReport& r) { return r.name == "ViTSTR-Tiny"; });
    REQUIRE(tiny != rows.end());
    CHECK(tiny->accuracy_percent == 80.3);
    CHECK(tiny->msec_per_image == 9.3);
}
