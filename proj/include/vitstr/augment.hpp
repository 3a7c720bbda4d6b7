#pragma once

#include <array>
#include <cmath>
#include <string>

#include "vitstr/datagen.hpp"
#include "vitstr/image.hpp"
#include "vitstr/rng.hpp"

namespace vitstr {

// The nine label-preserving transforms. All keep the image dimensions and
// 8-bit range; geometric ops are inverse warps with bilinear sampling and
// edge replication. Magnitude 0 is the identity for every kind except
// Invert, which is a parameterless involution.
enum class AugKind {
    Invert,
    Curve,
    Blur,
    Noise,
    Distort,
    Rotate,
    StretchCompress,
    Perspective,
    Shrink,
};

inline constexpr std::array<AugKind, 9> kAllAugKinds = {
    AugKind::Invert,   AugKind::Curve,           AugKind::Blur,
    AugKind::Noise,    AugKind::Distort,         AugKind::Rotate,
    AugKind::StretchCompress, AugKind::Perspective, AugKind::Shrink,
};

inline const char* aug_kind_name(AugKind k) {
    switch (k) {
        case AugKind::Invert: return "invert";
        case AugKind::Curve: return "curve";
        case AugKind::Blur: return "blur";
        case AugKind::Noise: return "noise";
        case AugKind::Distort: return "distort";
        case AugKind::Rotate: return "rotate";
        case AugKind::StretchCompress: return "stretch_compress";
        case AugKind::Perspective: return "perspective";
        case AugKind::Shrink: return "shrink";
    }
    throw std::logic_error("aug_kind_name: unknown kind");
}

inline AugKind aug_kind_from_name(const std::string& name) {
    for (AugKind k : kAllAugKinds) {
        if (name == aug_kind_name(k)) return k;
    }
    throw std::invalid_argument("augment: unknown op \"" + name + "\"");
}

struct AugOp {
    AugKind kind;
    double magnitude = 0.0;  // in [0, 1]
};

namespace detail {

// Magnitude calibration, chosen to keep labels human-legible.
inline constexpr double kMaxRotateDeg = 15.0;
inline constexpr double kMaxCurveFrac = 0.25;        // of image height
inline constexpr double kMaxBlurSigma = 2.5;         // px
inline constexpr double kMaxNoiseSigma = 25.0;       // gray levels
inline constexpr double kMaxPerspectiveFrac = 0.15;  // of each dimension
inline constexpr double kMinShrinkScale = 0.70;
inline constexpr double kMaxStretchDelta = 0.40;     // horizontal scale in [0.6, 1.4]
inline constexpr double kMaxDistortFrac = 0.10;      // of control-grid cell size

inline GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    if (sigma < 1e-3) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    const long w = static_cast<long>(src.width), h = static_cast<long>(src.height);
    std::vector<double> tmp(src.pixels.size());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                long sx = std::clamp(x + i, 0L, w - 1);
                acc += kernel[i + radius] * src.pixels[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    GrayImage out(src.width, src.height);
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                long sy = std::clamp(y + i, 0L, h - 1);
                acc += kernel[i + radius] * tmp[sy * w + x];
            }
            out.pixels[y * w + x] = clamp_u8(acc);
        }
    }
    return out;
}

// Homography mapping the unit square corners (order: TL, TR, BR, BL) of the
// destination onto the given source quad; solved as an 8x8 linear system.
struct Homography {
    std::array<double, 9> h;
    std::pair<double, double> apply(double x, double y) const {
        double d = h[6] * x + h[7] * y + h[8];
        return {(h[0] * x + h[1] * y + h[2]) / d, (h[3] * x + h[4] * y + h[5]) / d};
    }
};

inline Homography solve_homography(const std::array<std::pair<double, double>, 4>& dst,
                                   const std::array<std::pair<double, double>, 4>& src) {
    double a[8][9] = {};
    for (int i = 0; i < 4; ++i) {
        double x = dst[i].first, y = dst[i].second;
        double u = src[i].first, v = src[i].second;
        double* r0 = a[2 * i];
        double* r1 = a[2 * i + 1];
        r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -u * x; r0[7] = -u * y; r0[8] = u;
        r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -v * x; r1[7] = -v * y; r1[8] = v;
    }
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        if (std::fabs(a[col][col]) < 1e-12) throw std::runtime_error("perspective: degenerate quad");
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
        }
    }
    Homography out;
    for (int i = 0; i < 8; ++i) out.h[i] = a[i][8] / a[i][i];
    out.h[8] = 1.0;
    return out;
}

}  // namespace detail

inline GrayImage apply(const AugOp& op, const GrayImage& img, SplitRng& rng) {
    const double m = std::clamp(op.magnitude, 0.0, 1.0);
    const double w = static_cast<double>(img.width);
    const double h = static_cast<double>(img.height);
    const double cx = (w - 1.0) / 2.0, cy = (h - 1.0) / 2.0;
    auto sign = [&rng] { return rng.next_double() < 0.5 ? -1.0 : 1.0; };

    switch (op.kind) {
        case AugKind::Invert: {
            GrayImage out = img;
            for (auto& p : out.pixels) p = static_cast<uint8_t>(255 - p);
            return out;
        }
        case AugKind::Curve: {
            const double arc = sign() * m * detail::kMaxCurveFrac * h;
            return warp(img, [&](double x, double y) {
                double t = w > 1 ? 2.0 * x / (w - 1.0) - 1.0 : 0.0;
                return std::pair{x, y + arc * (1.0 - t * t)};
            });
        }
        case AugKind::Blur:
            return detail::gaussian_blur(img, m * detail::kMaxBlurSigma);
        case AugKind::Noise: {
            const double sigma = m * detail::kMaxNoiseSigma;
            GrayImage out = img;
            for (auto& p : out.pixels) p = clamp_u8(p + sigma * rng.normal());
            return out;
        }
        case AugKind::Distort: {
            // 4x2 control grid jittered up to a fraction of the cell size,
            // displacements interpolated bilinearly over the grid.
            constexpr size_t gx = 4, gy = 2;
            const double cell_w = w / static_cast<double>(gx - 1);
            const double cell_h = h / static_cast<double>(gy - 1);
            std::array<std::pair<double, double>, gx * gy> disp;
            for (auto& d : disp) {
                d.first = rng.uniform(-1.0, 1.0) * m * detail::kMaxDistortFrac * cell_w;
                d.second = rng.uniform(-1.0, 1.0) * m * detail::kMaxDistortFrac * cell_h;
            }
            return warp(img, [&](double x, double y) {
                double fx = std::clamp(x / cell_w, 0.0, static_cast<double>(gx - 1));
                double fy = std::clamp(y / cell_h, 0.0, static_cast<double>(gy - 1));
                size_t x0 = std::min(static_cast<size_t>(fx), gx - 2);
                size_t y0 = std::min(static_cast<size_t>(fy), gy - 2);
                double ax = fx - static_cast<double>(x0), ay = fy - static_cast<double>(y0);
                auto lerp2 = [&](auto get) {
                    double top = get(y0 * gx + x0) * (1 - ax) + get(y0 * gx + x0 + 1) * ax;
                    double bot = get((y0 + 1) * gx + x0) * (1 - ax) + get((y0 + 1) * gx + x0 + 1) * ax;
                    return top * (1 - ay) + bot * ay;
                };
                double dx = lerp2([&](size_t i) { return disp[i].first; });
                double dy = lerp2([&](size_t i) { return disp[i].second; });
                return std::pair{x + dx, y + dy};
            });
        }
        case AugKind::Rotate: {
            const double theta = sign() * m * detail::kMaxRotateDeg * M_PI / 180.0;
            const double c = std::cos(theta), s = std::sin(theta);
            return warp(img, [&](double x, double y) {
                double dx = x - cx, dy = y - cy;
                return std::pair{cx + c * dx - s * dy, cy + s * dx + c * dy};
            });
        }
        case AugKind::StretchCompress: {
            const double scale = 1.0 + sign() * m * detail::kMaxStretchDelta;
            return warp(img, [&](double x, double y) {
                return std::pair{cx + (x - cx) / scale, y};
            });
        }
        case AugKind::Perspective: {
            std::array<std::pair<double, double>, 4> dst = {
                {{0, 0}, {w - 1, 0}, {w - 1, h - 1}, {0, h - 1}}};
            std::array<std::pair<double, double>, 4> src = dst;
            for (auto& p : src) {
                p.first += rng.uniform(-1.0, 1.0) * m * detail::kMaxPerspectiveFrac * w;
                p.second += rng.uniform(-1.0, 1.0) * m * detail::kMaxPerspectiveFrac * h;
            }
            if (m == 0.0) return img;
            auto hom = detail::solve_homography(dst, src);
            return warp(img, [&](double x, double y) { return hom.apply(x, y); });
        }
        case AugKind::Shrink: {
            const double scale = 1.0 - m * (1.0 - detail::kMinShrinkScale);
            return warp(img, [&](double x, double y) {
                return std::pair{cx + (x - cx) / scale, cy + (y - cy) / scale};
            });
        }
    }
    throw std::logic_error("augment: unknown op kind");
}

inline WordImage apply(const AugOp& op, const WordImage& sample, SplitRng& rng) {
    return {apply(op, sample.pixels, rng), sample.label};
}

struct RandAugmentPolicy {
    size_t num_ops = 2;           // ops sampled per image, without replacement
    double magnitude_max = 1.0;
    uint64_t seed = 0;            // root for per-sample streams derived by callers
};

// Samples num_ops distinct kinds, each with magnitude uniform in
// (0, magnitude_max], applied in sampled order.
inline GrayImage rand_augment(const RandAugmentPolicy& policy, const GrayImage& img, SplitRng& rng) {
    std::array<AugKind, 9> kinds = kAllAugKinds;
    const size_t n = std::min(policy.num_ops, kinds.size());
    GrayImage out = img;
    for (size_t i = 0; i < n; ++i) {
        size_t j = static_cast<size_t>(
            rng.uniform_int(static_cast<int64_t>(i), static_cast<int64_t>(kinds.size()) - 1));
        std::swap(kinds[i], kinds[j]);
        double magnitude = policy.magnitude_max * (1.0 - rng.next_double());  // (0, max]
        out = apply(AugOp{kinds[i], magnitude}, out, rng);
    }
    return out;
}

inline WordImage rand_augment(const RandAugmentPolicy& policy, const WordImage& sample,
                              SplitRng& rng) {
    return {rand_augment(policy, sample.pixels, rng), sample.label};
}

}  // namespace vitstr
