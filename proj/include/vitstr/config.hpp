#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vitstr/augment.hpp"
#include "vitstr/model.hpp"
#include "vitstr/train.hpp"

namespace vitstr {

// Plain UTF-8 "key = value" configuration with [section] headers. Keys are
// stored as "section.key"; keys before any section header are top-level.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path.string());
        KeyValueConfig cfg;
        std::string line, section;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            const std::string where = path.string() + ":" + std::to_string(lineno);
            if (t.front() == '[') {
                if (t.back() != ']' || t.size() < 3) {
                    throw ConfigError("config: " + where + ": malformed section header");
                }
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            size_t eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config: " + where + ": expected key = value");
            }
            std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("config: " + where + ": empty key");
            cfg.set(section.empty() ? key : section + "." + key, value);
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    uint64_t get_u64(const std::string& key, uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoull(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' expects an unsigned integer, got \"" +
                              it->second + "\"");
        }
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' expects a number, got \"" + it->second +
                              "\"");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
        if (it->second == "false" || it->second == "0" || it->second == "no") return false;
        throw ConfigError("config: key '" + key + "' expects a boolean, got \"" + it->second + "\"");
    }

    void require_known(const std::set<std::string>& schema) const {
        for (const auto& [key, value] : values_) {
            if (!schema.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

// Fully resolved run configuration: model variant, train settings, data
// options and the root seed. Validated against the schema before any work.
struct RunConfig {
    ViTSTRConfig model;
    std::string variant = "tiny";
    TrainConfig train;
    std::string charset = "default";  // "default" or a vocabulary file path
    uint64_t seed = 0;

    static const std::set<std::string>& schema() {
        static const std::set<std::string> keys = {
            "seed",
            "model.variant",
            "model.patch_size",
            "model.depth",
            "model.embed_dim",
            "model.num_heads",
            "model.seq_len",
            "model.image_height",
            "model.image_width",
            "model.channels",
            "model.num_classes",
            "model.mlp_ratio",
            "train.steps",
            "train.batch_size",
            "train.learning_rate",
            "train.rho",
            "train.epsilon",
            "train.clip_norm",
            "train.checkpoint_interval",
            "augment.enabled",
            "augment.num_ops",
            "augment.magnitude_max",
            "data.charset",
        };
        return keys;
    }

    static RunConfig resolve(const KeyValueConfig& kv) {
        kv.require_known(schema());
        RunConfig rc;
        rc.variant = kv.get("model.variant", "tiny");
        if (rc.variant == "tiny") {
            rc.model = ViTSTRConfig::tiny();
        } else if (rc.variant == "small") {
            rc.model = ViTSTRConfig::small();
        } else if (rc.variant == "base") {
            rc.model = ViTSTRConfig::base();
        } else if (rc.variant == "custom") {
            rc.model = ViTSTRConfig::tiny();
        } else {
            throw ConfigError("config: model.variant must be tiny|small|base|custom, got \"" +
                              rc.variant + "\"");
        }
        rc.model.patch_size = kv.get_u64("model.patch_size", rc.model.patch_size);
        rc.model.depth = kv.get_u64("model.depth", rc.model.depth);
        rc.model.embed_dim = kv.get_u64("model.embed_dim", rc.model.embed_dim);
        rc.model.num_heads = kv.get_u64("model.num_heads", rc.model.num_heads);
        rc.model.seq_len = kv.get_u64("model.seq_len", rc.model.seq_len);
        rc.model.image_height = kv.get_u64("model.image_height", rc.model.image_height);
        rc.model.image_width = kv.get_u64("model.image_width", rc.model.image_width);
        rc.model.in_channels = kv.get_u64("model.channels", rc.model.in_channels);
        rc.model.num_classes = kv.get_u64("model.num_classes", rc.model.num_classes);
        rc.model.mlp_ratio = kv.get_u64("model.mlp_ratio", rc.model.mlp_ratio);
        try {
            rc.model.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }

        rc.seed = kv.get_u64("seed", 0);
        rc.train.seed = rc.seed;
        rc.train.steps = kv.get_u64("train.steps", 100);
        rc.train.batch_size = kv.get_u64("train.batch_size", 32);
        rc.train.learning_rate = kv.get_double("train.learning_rate", 1.0);
        rc.train.rho = kv.get_double("train.rho", 0.95);
        rc.train.epsilon = kv.get_double("train.epsilon", 1e-8);
        rc.train.clip_norm = kv.get_double("train.clip_norm", 5.0);
        rc.train.checkpoint_interval = kv.get_u64("train.checkpoint_interval", 0);
        if (rc.train.batch_size == 0) throw ConfigError("config: train.batch_size must be >= 1");
        if (rc.train.clip_norm <= 0) throw ConfigError("config: train.clip_norm must be > 0");

        if (kv.get_bool("augment.enabled", false)) {
            RandAugmentPolicy policy;
            policy.num_ops = kv.get_u64("augment.num_ops", 2);
            policy.magnitude_max = kv.get_double("augment.magnitude_max", 1.0);
            policy.seed = rc.seed ^ 0x617567ull;  // distinct stream from batch sampling
            rc.train.augment = policy;
        }
        rc.charset = kv.get("data.charset", "default");
        return rc;
    }

    Vocabulary make_vocabulary() const {
        return charset == "default" ? Vocabulary::default_latin() : Vocabulary::from_file(charset);
    }

    // Canonical key=value listing of the resolved state, for run.meta.
    std::vector<std::pair<std::string, std::string>> resolved_entries() const {
        std::vector<std::pair<std::string, std::string>> out;
        out.emplace_back("seed", std::to_string(seed));
        out.emplace_back("model.variant", variant);
        out.emplace_back("model.patch_size", std::to_string(model.patch_size));
        out.emplace_back("model.depth", std::to_string(model.depth));
        out.emplace_back("model.embed_dim", std::to_string(model.embed_dim));
        out.emplace_back("model.num_heads", std::to_string(model.num_heads));
        out.emplace_back("model.seq_len", std::to_string(model.seq_len));
        out.emplace_back("model.image_height", std::to_string(model.image_height));
        out.emplace_back("model.image_width", std::to_string(model.image_width));
        out.emplace_back("model.channels", std::to_string(model.in_channels));
        out.emplace_back("model.num_classes", std::to_string(model.num_classes));
        out.emplace_back("model.mlp_ratio", std::to_string(model.mlp_ratio));
        out.emplace_back("train.steps", std::to_string(train.steps));
        out.emplace_back("train.batch_size", std::to_string(train.batch_size));
        out.emplace_back("train.learning_rate", std::to_string(train.learning_rate));
        out.emplace_back("train.rho", std::to_string(train.rho));
        out.emplace_back("train.epsilon", std::to_string(train.epsilon));
        out.emplace_back("train.clip_norm", std::to_string(train.clip_norm));
        out.emplace_back("train.checkpoint_interval", std::to_string(train.checkpoint_interval));
        out.emplace_back("augment.enabled", train.augment ? "true" : "false");
        if (train.augment) {
            out.emplace_back("augment.num_ops", std::to_string(train.augment->num_ops));
            out.emplace_back("augment.magnitude_max", std::to_string(train.augment->magnitude_max));
        }
        out.emplace_back("data.charset", charset);
        return out;
    }
};

}  // namespace vitstr
