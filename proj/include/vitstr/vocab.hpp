#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "vitstr/tensor.hpp"

namespace vitstr {

class VocabularyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ordered symbol set: [GO] at index 0, [s] at index 1, then the character
// set. [GO] marks the start of a prediction; [s] marks the end and pads the
// remaining positions.
class Vocabulary {
public:
    static constexpr int kGoId = 0;
    static constexpr int kStopId = 1;

    explicit Vocabulary(std::string charset) : charset_(std::move(charset)) {
        index_.fill(-1);
        for (size_t i = 0; i < charset_.size(); ++i) {
            unsigned char c = static_cast<unsigned char>(charset_[i]);
            if (c < 0x21 || c > 0x7E) {
                throw VocabularyError("vocabulary: unsupported symbol (byte " + std::to_string(c) +
                                      "); printable ASCII expected");
            }
            if (index_[c] != -1) {
                throw VocabularyError(std::string("vocabulary: duplicate symbol '") + charset_[i] + "'");
            }
            index_[c] = static_cast<int>(i) + 2;
        }
    }

    // 94 printable ASCII characters (codes 33..126) plus the two control
    // tokens: 96 classes.
    static Vocabulary default_latin() {
        std::string cs;
        for (int c = 0x21; c <= 0x7E; ++c) cs.push_back(static_cast<char>(c));
        return Vocabulary(std::move(cs));
    }

    // UTF-8 text file, one symbol per line; control tokens are implicit.
    static Vocabulary from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw VocabularyError("vocabulary: cannot open " + path);
        std::string line, cs;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line.size() != 1) {
                throw VocabularyError("vocabulary: " + path + ":" + std::to_string(lineno) +
                                      ": expected a single character, got \"" + line + "\"");
            }
            cs.push_back(line[0]);
        }
        return Vocabulary(std::move(cs));
    }

    size_t size() const { return charset_.size() + 2; }
    const std::string& charset() const { return charset_; }

    bool contains(char c) const { return index_[static_cast<unsigned char>(c)] != -1; }

    int id_of(char c) const {
        int id = index_[static_cast<unsigned char>(c)];
        if (id == -1) throw VocabularyError(std::string("vocabulary: unknown character '") + c + "'");
        return id;
    }

    char char_of(int id) const {
        if (id < 2 || static_cast<size_t>(id) >= size()) {
            throw VocabularyError("vocabulary: id " + std::to_string(id) + " is not a character");
        }
        return charset_[static_cast<size_t>(id) - 2];
    }

    bool valid_label(const std::string& text) const {
        for (char c : text) {
            if (!contains(c)) return false;
        }
        return true;
    }

    // [GO], character ids, then [s] repeated up to length S.
    std::vector<int> encode(const std::string& text, size_t seq_len) const {
        if (seq_len < 2) throw VocabularyError("encode: sequence length must be >= 2");
        if (text.size() > seq_len - 2) {
            throw VocabularyError("encode: text of length " + std::to_string(text.size()) +
                                  " exceeds maximum " + std::to_string(seq_len - 2));
        }
        std::vector<int> ids(seq_len, kStopId);
        ids[0] = kGoId;
        for (size_t i = 0; i < text.size(); ++i) ids[i + 1] = id_of(text[i]);
        return ids;
    }

    struct Decoded {
        std::string text;
        double confidence = 1.0;
    };

    // Per-position argmax over positions 1..S-1, stopping at the first [s].
    // Confidence is the product of softmax probabilities of the chosen
    // symbols up to and including the stopping [s].
    template <class Real>
    Decoded decode_greedy(const Tensor<Real>& logits) const {
        if (logits.ndim() != 2 || logits.shape()[1] != size()) {
            throw VocabularyError("decode: logits " + shape_str(logits.shape()) + " do not match K=" +
                                  std::to_string(size()));
        }
        const size_t s = logits.shape()[0];
        const size_t k = size();
        Decoded out;
        for (size_t pos = 1; pos < s; ++pos) {
            const Real* row = logits.values().data() + pos * k;
            size_t best = 0;
            Real mx = row[0];
            for (size_t j = 1; j < k; ++j) {
                if (row[j] > mx) {
                    mx = row[j];
                    best = j;
                }
            }
            double denom = 0;
            for (size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
            out.confidence *= 1.0 / denom;  // exp(mx - mx) / sum
            if (best == static_cast<size_t>(kStopId)) return out;
            if (best != static_cast<size_t>(kGoId)) out.text.push_back(char_of(static_cast<int>(best)));
        }
        return out;
    }

private:
    std::string charset_;
    std::array<int, 256> index_{};
};

}  // namespace vitstr
