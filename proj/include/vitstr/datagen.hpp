#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vitstr/font8x8.hpp"
#include "vitstr/image.hpp"
#include "vitstr/model.hpp"
#include "vitstr/rng.hpp"
#include "vitstr/tensor.hpp"
#include "vitstr/vocab.hpp"

namespace vitstr {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One training/evaluation sample: grayscale word image plus its label.
struct WordImage {
    GrayImage pixels;
    std::string label;
};

// Renders a label with the embedded bitmap font at randomized scale, offset
// and foreground/background contrast onto a noise-textured background.
// Deterministic for a given rng state; width grows with label length.
inline WordImage render_word(const std::string& label, size_t height, SplitRng& rng) {
    if (label.empty()) throw DataError("render_word: empty label");
    if (height < 16) throw DataError("render_word: height must be >= 16");
    for (char c : label) {
        if (!font8x8::has_glyph(c)) {
            throw VocabularyError(std::string("render_word: no glyph for character '") + c + "'");
        }
    }
    const size_t max_scale = std::max<size_t>(1, height / 8);
    const size_t lo_scale = std::max<size_t>(1, (height / 2) / 8);
    const size_t k = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(lo_scale),
                                                         static_cast<int64_t>(max_scale)));
    const size_t cell = 8 * k;
    const size_t margin_l = static_cast<size_t>(rng.uniform_int(2, 8));
    const size_t margin_r = static_cast<size_t>(rng.uniform_int(2, 8));
    const size_t width = label.size() * cell + margin_l + margin_r;
    const size_t y0 = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(height - cell)));

    const double bg = rng.uniform(30.0, 225.0);
    const double dir = bg < 128.0 ? 1.0 : -1.0;
    const double contrast = rng.uniform(96.0, 160.0);
    const double fg = std::clamp(bg + dir * contrast, 0.0, 255.0);
    const double noise_sigma = rng.uniform(2.0, 8.0);

    WordImage out;
    out.label = label;
    out.pixels = GrayImage(width, height);
    std::vector<double> canvas(width * height, bg);
    for (size_t ci = 0; ci < label.size(); ++ci) {
        const size_t x0 = margin_l + ci * cell;
        for (size_t gy = 0; gy < 8; ++gy) {
            for (size_t gx = 0; gx < 8; ++gx) {
                if (!font8x8::glyph_pixel(label[ci], gx, gy)) continue;
                for (size_t dy = 0; dy < k; ++dy) {
                    for (size_t dx = 0; dx < k; ++dx) {
                        canvas[(y0 + gy * k + dy) * width + x0 + gx * k + dx] = fg;
                    }
                }
            }
        }
    }
    for (size_t i = 0; i < canvas.size(); ++i) {
        out.pixels.pixels[i] = clamp_u8(canvas[i] + noise_sigma * rng.normal());
    }
    return out;
}

// Bilinear resize to the configured input size, then map to [-1, 1] via
// x / 127.5 - 1. Output is [C x H x W] with identical channels for C > 1.
template <class Real>
Tensor<Real> preprocess(const GrayImage& img, const ViTSTRConfig& cfg) {
    if (img.width == 0 || img.height == 0) throw DataError("preprocess: zero-area image");
    const size_t h = cfg.image_height, w = cfg.image_width;
    Tensor<Real> out({cfg.in_channels, h, w});
    const double sx = static_cast<double>(img.width) / static_cast<double>(w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(h);
    for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
            double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
            double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
            double v = sample_bilinear(img, src_x, src_y);
            out.values()[y * w + x] = static_cast<Real>(v / 127.5 - 1.0);
        }
    }
    for (size_t c = 1; c < cfg.in_channels; ++c) {
        std::copy(out.values().begin(), out.values().begin() + h * w,
                  out.values().begin() + c * h * w);
    }
    return out;
}

template <class Real>
Tensor<Real> preprocess(const WordImage& sample, const ViTSTRConfig& cfg) {
    return preprocess<Real>(sample.pixels, cfg);
}

struct DatasetManifest {
    struct Record {
        std::string relative_path;
        std::string label;
    };
    std::filesystem::path root;
    std::string split;
    std::vector<Record> records;
};

// Writes images as PGM files plus a UTF-8 TSV manifest
// (relative_path<TAB>label), and returns the manifest.
inline DatasetManifest save_dataset(const std::filesystem::path& dir,
                                    const std::vector<WordImage>& samples,
                                    const std::string& split = "train") {
    std::filesystem::create_directories(dir / "images");
    DatasetManifest manifest;
    manifest.root = dir;
    manifest.split = split;
    std::ofstream tsv(dir / "manifest.tsv");
    if (!tsv) throw DataError("save_dataset: cannot write manifest in " + dir.string());
    char name[32];
    for (size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "images/%06zu.pgm", i);
        write_pgm(dir / name, samples[i].pixels);
        tsv << name << '\t' << samples[i].label << '\n';
        manifest.records.push_back({name, samples[i].label});
    }
    if (!tsv) throw DataError("save_dataset: failed writing manifest in " + dir.string());
    return manifest;
}

// Parses and validates a manifest; every referenced file must exist and all
// labels must be valid for the vocabulary (when one is given).
inline DatasetManifest load_manifest(const std::filesystem::path& manifest_path,
                                     const Vocabulary* vocab = nullptr) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("load_dataset: cannot open " + manifest_path.string());
    DatasetManifest manifest;
    manifest.root = manifest_path.parent_path();
    manifest.split = manifest_path.stem().string();
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = manifest_path.string() + ":" + std::to_string(lineno);
        size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw DataError("load_dataset: " + where + ": expected exactly 2 tab-separated fields");
        }
        DatasetManifest::Record rec{line.substr(0, tab), line.substr(tab + 1)};
        if (rec.relative_path.empty() || rec.label.empty()) {
            throw DataError("load_dataset: " + where + ": empty field");
        }
        if (!std::filesystem::exists(manifest.root / rec.relative_path)) {
            throw DataError("load_dataset: " + where + ": missing file " + rec.relative_path);
        }
        if (vocab && !vocab->valid_label(rec.label)) {
            throw DataError("load_dataset: " + where + ": label \"" + rec.label +
                            "\" has characters outside the vocabulary");
        }
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

inline std::vector<WordImage> load_dataset(const std::filesystem::path& manifest_path,
                                           const Vocabulary* vocab = nullptr) {
    DatasetManifest manifest = load_manifest(manifest_path, vocab);
    std::vector<WordImage> samples;
    samples.reserve(manifest.records.size());
    for (const auto& rec : manifest.records) {
        samples.push_back({read_pgm(manifest.root / rec.relative_path), rec.label});
    }
    return samples;
}

// Desk-scale corpus generation: random labels over the vocabulary charset,
// rendered at the native height. Sample i depends only on (seed, i).
inline std::vector<WordImage> generate_dataset(size_t count, const Vocabulary& vocab, uint64_t seed,
                                               size_t height = 32, size_t min_len = 1,
                                               size_t max_len = 10) {
    if (min_len == 0 || max_len < min_len) throw DataError("generate_dataset: bad length range");
    const std::string& cs = vocab.charset();
    if (cs.empty()) throw DataError("generate_dataset: empty charset");
    SplitRng root(seed);
    std::vector<WordImage> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        SplitRng rng = root.split(i);
        size_t len = static_cast<size_t>(
            rng.uniform_int(static_cast<int64_t>(min_len), static_cast<int64_t>(max_len)));
        std::string label;
        for (size_t j = 0; j < len; ++j) {
            label.push_back(cs[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int64_t>(cs.size()) - 1))]);
        }
        out.push_back(render_word(label, height, rng));
    }
    return out;
}

}  // namespace vitstr
