#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "vitstr/tensor.hpp"

namespace vitstr {

// Named-tensor wire format, little-endian throughout:
//   u16 name length | name bytes | u8 scalar width (4|8) | u8 rank |
//   u64 extents[rank] | raw scalar bytes
namespace wire {

inline void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <class T>
inline void put_le(std::ostream& os, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    put_bytes(os, buf, sizeof(T));
}

template <class T>
inline T get_le(std::istream& is) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw std::runtime_error("named tensor: truncated stream");
    T v = 0;
    for (size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | buf[i]);
    return v;
}

}  // namespace wire

template <class Real>
void write_named_tensor(std::ostream& os, const std::string& name, const Tensor<Real>& t) {
    static_assert(sizeof(Real) == 4 || sizeof(Real) == 8);
    if (name.size() > 0xFFFF) throw std::invalid_argument("named tensor: name too long");
    wire::put_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
    wire::put_bytes(os, name.data(), name.size());
    wire::put_le<uint8_t>(os, static_cast<uint8_t>(sizeof(Real)));
    wire::put_le<uint8_t>(os, static_cast<uint8_t>(t.ndim()));
    for (size_t e : t.shape()) wire::put_le<uint64_t>(os, static_cast<uint64_t>(e));
    for (Real v : t.values()) {
        if constexpr (sizeof(Real) == 4) {
            wire::put_le<uint32_t>(os, std::bit_cast<uint32_t>(static_cast<float>(v)));
        } else {
            wire::put_le<uint64_t>(os, std::bit_cast<uint64_t>(static_cast<double>(v)));
        }
    }
}

// Type-erased record; values carried as double (lossless for both widths).
struct RawTensor {
    std::string name;
    std::vector<size_t> shape;
    int scalar_width = 4;
    std::vector<double> values;

    template <class Real>
    Tensor<Real> to_tensor() const {
        std::vector<Real> out(values.size());
        for (size_t i = 0; i < values.size(); ++i) out[i] = static_cast<Real>(values[i]);
        return Tensor<Real>(shape, std::move(out));
    }
};

inline RawTensor read_named_tensor(std::istream& is) {
    RawTensor r;
    uint16_t name_len = wire::get_le<uint16_t>(is);
    r.name.resize(name_len);
    is.read(r.name.data(), name_len);
    if (!is) throw std::runtime_error("named tensor: truncated name");
    uint8_t width = wire::get_le<uint8_t>(is);
    if (width != 4 && width != 8) {
        throw std::runtime_error("named tensor '" + r.name + "': bad scalar width " +
                                 std::to_string(width));
    }
    r.scalar_width = width;
    uint8_t rank = wire::get_le<uint8_t>(is);
    size_t n = 1;
    for (uint8_t i = 0; i < rank; ++i) {
        uint64_t e = wire::get_le<uint64_t>(is);
        if (e == 0 || e > (uint64_t{1} << 32)) {
            throw std::runtime_error("named tensor '" + r.name + "': bad extent");
        }
        r.shape.push_back(static_cast<size_t>(e));
        n *= static_cast<size_t>(e);
    }
    r.values.resize(n);
    for (size_t i = 0; i < n; ++i) {
        if (width == 4) {
            r.values[i] = static_cast<double>(std::bit_cast<float>(wire::get_le<uint32_t>(is)));
        } else {
            r.values[i] = std::bit_cast<double>(wire::get_le<uint64_t>(is));
        }
    }
    return r;
}

}  // namespace vitstr
