#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "vitstr/tensor.hpp"
#include "vitstr/threading.hpp"

namespace vitstr {

namespace detail {

// Work (in MACs / element ops) below which kernels stay single-threaded.
inline constexpr size_t kParallelCutoff = size_t{1} << 18;

template <class Real>
inline bool should_record(std::initializer_list<const Tensor<Real>*> ins) {
    if (!GradTape::recording()) return false;
    for (const Tensor<Real>* t : ins) {
        if (t->storage()->needs_grad()) return true;
    }
    return false;
}

template <class Real>
inline void mark_output(Tensor<Real>& out, std::initializer_list<const Tensor<Real>*> ins) {
    out.storage()->tracked = true;
    out.storage()->ensure_grad();
    for (const Tensor<Real>* t : ins) {
        if (t->storage()->needs_grad()) t->storage()->ensure_grad();
    }
}

// c[m,n] = a[m,k] * b[k,n], accumulation over k in ascending order.
template <class Real>
inline void mm_rows(const Real* a, const Real* b, Real* c, size_t row_lo, size_t row_hi,
                    size_t k, size_t n) {
    for (size_t i = row_lo; i < row_hi; ++i) {
        Real* crow = c + i * n;
        std::fill(crow, crow + n, Real(0));
        const Real* arow = a + i * k;
        for (size_t p = 0; p < k; ++p) {
            Real aip = arow[p];
            const Real* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

inline void check_matmul_shapes(const std::vector<size_t>& a, const std::vector<size_t>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw std::invalid_argument("matmul: operands must have rank >= 2, got " + shape_str(a) +
                                    " and " + shape_str(b));
    }
    if (b.size() != 2 && b.size() != a.size()) {
        throw std::invalid_argument("matmul: rhs rank must be 2 or match lhs, got " + shape_str(a) +
                                    " and " + shape_str(b));
    }
    if (a.back() != b[b.size() - 2]) {
        throw std::invalid_argument("matmul: inner dimensions disagree: " + shape_str(a) + " vs " +
                                    shape_str(b));
    }
    if (b.size() == a.size()) {
        for (size_t i = 0; i + 2 < a.size(); ++i) {
            if (a[i] != b[i]) {
                throw std::invalid_argument("matmul: leading dimensions disagree: " + shape_str(a) +
                                            " vs " + shape_str(b));
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matmul: [batch..., m, k] x [k, n] or [batch..., k, n] -> [batch..., m, n]
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
    detail::check_matmul_shapes(a.shape(), b.shape());
    const size_t rank = a.ndim();
    const size_t m = a.shape()[rank - 2];
    const size_t k = a.shape()[rank - 1];
    const size_t n = b.shape()[b.ndim() - 1];
    const bool batched_b = b.ndim() == rank && rank > 2;
    size_t batch = 1;
    for (size_t i = 0; i + 2 < rank; ++i) batch *= a.shape()[i];

    std::vector<size_t> out_shape(a.shape().begin(), a.shape().end() - 1);
    out_shape.push_back(n);
    Tensor<Real> out(out_shape);

    const Real* ap = a.values().data();
    const Real* bp = b.values().data();
    Real* cp = out.values().data();
    const size_t rows = batch * m;
    parallel_for(rows, rows * k * n, detail::kParallelCutoff, [&](size_t lo, size_t hi) {
        for (size_t r = lo; r < hi; ++r) {
            size_t bi = r / m;
            const Real* bmat = batched_b ? bp + bi * k * n : bp;
            detail::mm_rows(ap + bi * m * k, bmat, cp + bi * m * n, r % m, r % m + 1, k, n);
        }
    });

    if (detail::should_record<Real>({&a, &b})) {
        detail::mark_output(out, {&a, &b});
        auto sa = a.storage(), sb = b.storage(), so = out.storage();
        GradTape::active().record([sa, sb, so, m, k, n, batch, batched_b] {
            const Real* g = so->grad.data();
            const Real* av = sa->data.data();
            const Real* bv = sb->data.data();
            if (sa->needs_grad()) {
                // dA[i,p] += sum_j dC[i,j] * B[p,j]
                Real* da = sa->grad.data();
                const size_t rows = batch * m;
                parallel_for(rows, rows * k * n, detail::kParallelCutoff, [&](size_t lo, size_t hi) {
                    for (size_t r = lo; r < hi; ++r) {
                        size_t bi = r / m, i = r % m;
                        const Real* grow = g + bi * m * n + i * n;
                        const Real* bmat = batched_b ? bv + bi * k * n : bv;
                        Real* darow = da + bi * m * k + i * k;
                        for (size_t p = 0; p < k; ++p) {
                            const Real* brow = bmat + p * n;
                            Real s = 0;
                            for (size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                            darow[p] += s;
                        }
                    }
                });
            }
            if (sb->needs_grad()) {
                // dB[p,j] += sum_(batch,i) A[i,p] * dC[i,j]
                Real* db = sb->grad.data();
                if (batched_b) {
                    parallel_for(batch, batch * m * k * n, detail::kParallelCutoff,
                                 [&](size_t lo, size_t hi) {
                                     for (size_t bi = lo; bi < hi; ++bi) {
                                         const Real* amat = av + bi * m * k;
                                         const Real* gmat = g + bi * m * n;
                                         Real* dbmat = db + bi * k * n;
                                         for (size_t i = 0; i < m; ++i) {
                                             for (size_t p = 0; p < k; ++p) {
                                                 Real aip = amat[i * k + p];
                                                 const Real* grow = gmat + i * n;
                                                 Real* dbrow = dbmat + p * n;
                                                 for (size_t j = 0; j < n; ++j) dbrow[j] += aip * grow[j];
                                             }
                                         }
                                     }
                                 });
                } else {
                    // shared rhs: partition over p so accumulation order is fixed
                    parallel_for(k, batch * m * k * n, detail::kParallelCutoff,
                                 [&](size_t lo, size_t hi) {
                                     for (size_t p = lo; p < hi; ++p) {
                                         Real* dbrow = db + p * n;
                                         for (size_t bi = 0; bi < batch; ++bi) {
                                             const Real* amat = av + bi * m * k;
                                             const Real* gmat = g + bi * m * n;
                                             for (size_t i = 0; i < m; ++i) {
                                                 Real aip = amat[i * k + p];
                                                 const Real* grow = gmat + i * n;
                                                 for (size_t j = 0; j < n; ++j) dbrow[j] += aip * grow[j];
                                             }
                                         }
                                     }
                                 });
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("add: shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    Tensor<Real> out(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + b.values()[i];
    if (detail::should_record<Real>({&a, &b})) {
        detail::mark_output(out, {&a, &b});
        auto sa = a.storage(), sb = b.storage(), so = out.storage();
        GradTape::active().record([sa, sb, so] {
            const size_t n = so->grad.size();
            if (sa->needs_grad())
                for (size_t i = 0; i < n; ++i) sa->grad[i] += so->grad[i];
            if (sb->needs_grad())
                for (size_t i = 0; i < n; ++i) sb->grad[i] += so->grad[i];
        });
    }
    return out;
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("mul: shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    Tensor<Real> out(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * b.values()[i];
    if (detail::should_record<Real>({&a, &b})) {
        detail::mark_output(out, {&a, &b});
        auto sa = a.storage(), sb = b.storage(), so = out.storage();
        GradTape::active().record([sa, sb, so] {
            const size_t n = so->grad.size();
            if (sa->needs_grad())
                for (size_t i = 0; i < n; ++i) sa->grad[i] += so->grad[i] * sb->data[i];
            if (sb->needs_grad())
                for (size_t i = 0; i < n; ++i) sb->grad[i] += so->grad[i] * sa->data[i];
        });
    }
    return out;
}

template <class Real>
Tensor<Real> scale(const Tensor<Real>& a, Real s) {
    Tensor<Real> out(a.shape());
    const size_t n = a.numel();
    for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * s;
    if (detail::should_record<Real>({&a})) {
        detail::mark_output(out, {&a});
        auto sa = a.storage(), so = out.storage();
        GradTape::active().record([sa, so, s] {
            if (!sa->needs_grad()) return;
            const size_t n = so->grad.size();
            for (size_t i = 0; i < n; ++i) sa->grad[i] += so->grad[i] * s;
        });
    }
    return out;
}

// x[..., D] + bias[D], broadcast over leading rows
template <class Real>
Tensor<Real> add_bias(const Tensor<Real>& x, const Tensor<Real>& bias) {
    if (bias.ndim() != 1 || x.ndim() < 1 || x.shape().back() != bias.numel()) {
        throw std::invalid_argument("add_bias: bias " + shape_str(bias.shape()) +
                                    " does not fit last axis of " + shape_str(x.shape()));
    }
    const size_t d = bias.numel();
    const size_t rows = x.numel() / d;
    Tensor<Real> out(x.shape());
    for (size_t r = 0; r < rows; ++r) {
        for (size_t j = 0; j < d; ++j) out.values()[r * d + j] = x.values()[r * d + j] + bias.values()[j];
    }
    if (detail::should_record<Real>({&x, &bias})) {
        detail::mark_output(out, {&x, &bias});
        auto sx = x.storage(), sb = bias.storage(), so = out.storage();
        GradTape::active().record([sx, sb, so, rows, d] {
            if (sx->needs_grad()) {
                for (size_t i = 0; i < rows * d; ++i) sx->grad[i] += so->grad[i];
            }
            if (sb->needs_grad()) {
                for (size_t r = 0; r < rows; ++r)
                    for (size_t j = 0; j < d; ++j) sb->grad[j] += so->grad[r * d + j];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> sum(const Tensor<Real>& x) {
    Real acc = 0;
    for (Real v : x.values()) acc += v;
    Tensor<Real> out = Tensor<Real>::scalar(acc);
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so] {
            if (!sx->needs_grad()) return;
            Real g = so->grad[0];
            for (Real& d : sx->grad) d += g;
        });
    }
    return out;
}

template <class Real>
Tensor<Real> mean(const Tensor<Real>& x) {
    return scale(sum(x), Real(1) / static_cast<Real>(x.numel()));
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& x, std::vector<size_t> new_shape) {
    if (detail::shape_numel(new_shape) != x.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                    shape_str(new_shape));
    }
    Tensor<Real> out(std::move(new_shape), x.values());
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so] {
            if (!sx->needs_grad()) return;
            const size_t n = so->grad.size();
            for (size_t i = 0; i < n; ++i) sx->grad[i] += so->grad[i];
        });
    }
    return out;
}

namespace detail {

inline std::vector<size_t> row_major_strides(const std::vector<size_t>& shape) {
    std::vector<size_t> strides(shape.size(), 1);
    for (size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
    return strides;
}

// For each output flat index, the corresponding input flat index.
inline std::vector<size_t> permute_index_map(const std::vector<size_t>& in_shape,
                                             const std::vector<size_t>& axes) {
    std::vector<size_t> out_shape(axes.size());
    for (size_t i = 0; i < axes.size(); ++i) out_shape[i] = in_shape[axes[i]];
    auto in_strides = row_major_strides(in_shape);
    size_t n = shape_numel(in_shape);
    std::vector<size_t> map(n);
    std::vector<size_t> idx(axes.size(), 0);
    for (size_t f = 0; f < n; ++f) {
        size_t src = 0;
        for (size_t i = 0; i < axes.size(); ++i) src += idx[i] * in_strides[axes[i]];
        map[f] = src;
        for (size_t i = axes.size(); i-- > 0;) {
            if (++idx[i] < out_shape[i]) break;
            idx[i] = 0;
        }
    }
    return map;
}

}  // namespace detail

template <class Real>
Tensor<Real> permute(const Tensor<Real>& x, const std::vector<size_t>& axes) {
    if (axes.size() != x.ndim()) {
        throw std::invalid_argument("permute: " + std::to_string(axes.size()) + " axes for " +
                                    shape_str(x.shape()));
    }
    std::vector<bool> seen(axes.size(), false);
    for (size_t a : axes) {
        if (a >= axes.size() || seen[a]) throw std::invalid_argument("permute: invalid axis order");
        seen[a] = true;
    }
    std::vector<size_t> out_shape(axes.size());
    for (size_t i = 0; i < axes.size(); ++i) out_shape[i] = x.shape()[axes[i]];
    auto map = detail::permute_index_map(x.shape(), axes);
    Tensor<Real> out(out_shape);
    for (size_t f = 0; f < map.size(); ++f) out.values()[f] = x.values()[map[f]];
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so, map = std::move(map)] {
            if (!sx->needs_grad()) return;
            for (size_t f = 0; f < map.size(); ++f) sx->grad[map[f]] += so->grad[f];
        });
    }
    return out;
}

// Slice of length len starting at start along axis; contiguous copy.
template <class Real>
Tensor<Real> narrow(const Tensor<Real>& x, size_t axis, size_t start, size_t len) {
    if (axis >= x.ndim() || len == 0 || start + len > x.shape()[axis]) {
        throw std::invalid_argument("narrow: slice [" + std::to_string(start) + ", " +
                                    std::to_string(start + len) + ") on axis " + std::to_string(axis) +
                                    " of " + shape_str(x.shape()));
    }
    std::vector<size_t> out_shape = x.shape();
    out_shape[axis] = len;
    size_t outer = 1, inner = 1;
    for (size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
    for (size_t i = axis + 1; i < x.ndim(); ++i) inner *= x.shape()[i];
    const size_t ext = x.shape()[axis];

    Tensor<Real> out(out_shape);
    for (size_t o = 0; o < outer; ++o) {
        const Real* src = x.values().data() + (o * ext + start) * inner;
        Real* dst = out.values().data() + o * len * inner;
        std::copy(src, src + len * inner, dst);
    }
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so, outer, inner, ext, start, len] {
            if (!sx->needs_grad()) return;
            for (size_t o = 0; o < outer; ++o) {
                Real* dst = sx->grad.data() + (o * ext + start) * inner;
                const Real* src = so->grad.data() + o * len * inner;
                for (size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

template <class Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& parts, size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const auto& first = parts.front().shape();
    if (axis >= first.size()) throw std::invalid_argument("concat: bad axis");
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != first.size()) {
            throw std::invalid_argument("concat: rank mismatch: " + shape_str(first) + " vs " +
                                        shape_str(p.shape()));
        }
        for (size_t i = 0; i < first.size(); ++i) {
            if (i != axis && p.shape()[i] != first[i]) {
                throw std::invalid_argument("concat: shape mismatch off axis: " + shape_str(first) +
                                            " vs " + shape_str(p.shape()));
            }
        }
        total += p.shape()[axis];
    }
    std::vector<size_t> out_shape = first;
    out_shape[axis] = total;
    size_t outer = 1, inner = 1;
    for (size_t i = 0; i < axis; ++i) outer *= first[i];
    for (size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

    Tensor<Real> out(out_shape);
    size_t offset = 0;
    for (const auto& p : parts) {
        const size_t ext = p.shape()[axis];
        for (size_t o = 0; o < outer; ++o) {
            const Real* src = p.values().data() + o * ext * inner;
            Real* dst = out.values().data() + (o * total + offset) * inner;
            std::copy(src, src + ext * inner, dst);
        }
        offset += ext;
    }

    bool need = false;
    if (GradTape::recording()) {
        for (const auto& p : parts) need = need || p.storage()->needs_grad();
    }
    if (need) {
        out.storage()->tracked = true;
        out.storage()->ensure_grad();
        std::vector<std::shared_ptr<detail::Storage<Real>>> srcs;
        for (const auto& p : parts) {
            if (p.storage()->needs_grad()) p.storage()->ensure_grad();
            srcs.push_back(p.storage());
        }
        auto so = out.storage();
        GradTape::active().record([srcs = std::move(srcs), so, outer, inner, total, axis] {
            size_t offset = 0;
            for (const auto& sp : srcs) {
                const size_t ext = sp->shape[axis];
                if (sp->needs_grad()) {
                    for (size_t o = 0; o < outer; ++o) {
                        Real* dst = sp->grad.data() + o * ext * inner;
                        const Real* src = so->grad.data() + (o * total + offset) * inner;
                        for (size_t i = 0; i < ext * inner; ++i) dst[i] += src[i];
                    }
                }
                offset += ext;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// nonlinearities
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x, size_t axis) {
    if (axis >= x.ndim()) throw std::invalid_argument("softmax: bad axis for " + shape_str(x.shape()));
    for (Real v : x.values()) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw std::domain_error("softmax: non-finite input");
        }
    }
    size_t outer = 1, inner = 1;
    const size_t len = x.shape()[axis];
    for (size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
    for (size_t i = axis + 1; i < x.ndim(); ++i) inner *= x.shape()[i];

    Tensor<Real> out(x.shape());
    const Real* xv = x.values().data();
    Real* ov = out.values().data();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * len * inner + in;
            Real mx = xv[base];
            for (size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
            Real denom = 0;
            for (size_t j = 0; j < len; ++j) {
                Real e = std::exp(xv[base + j * inner] - mx);
                ov[base + j * inner] = e;
                denom += e;
            }
            Real inv = Real(1) / denom;
            for (size_t j = 0; j < len; ++j) ov[base + j * inner] *= inv;
        }
    }
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so, outer, inner, len] {
            if (!sx->needs_grad()) return;
            const Real* y = so->data.data();
            const Real* g = so->grad.data();
            for (size_t o = 0; o < outer; ++o) {
                for (size_t in = 0; in < inner; ++in) {
                    const size_t base = o * len * inner + in;
                    Real dot = 0;
                    for (size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
                    for (size_t j = 0; j < len; ++j) {
                        const size_t ix = base + j * inner;
                        sx->grad[ix] += y[ix] * (g[ix] - dot);
                    }
                }
            }
        });
    }
    return out;
}

// Layer normalization over the last axis with affine parameters.
template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        Real eps) {
    if (x.ndim() < 1) throw std::invalid_argument("layer_norm: scalar input");
    const size_t d = x.shape().back();
    if (gamma.ndim() != 1 || beta.ndim() != 1 || gamma.numel() != d || beta.numel() != d) {
        throw std::invalid_argument("layer_norm: affine params " + shape_str(gamma.shape()) + ", " +
                                    shape_str(beta.shape()) + " do not fit last axis of " +
                                    shape_str(x.shape()));
    }
    const size_t rows = x.numel() / d;
    Tensor<Real> out(x.shape());
    std::vector<Real> xhat(x.numel());
    std::vector<Real> inv_std(rows);
    const Real* xv = x.values().data();
    const Real* gv = gamma.values().data();
    const Real* bv = beta.values().data();
    Real* ov = out.values().data();
    for (size_t r = 0; r < rows; ++r) {
        const Real* row = xv + r * d;
        Real mu = 0;
        for (size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<Real>(d);
        Real var = 0;
        for (size_t j = 0; j < d; ++j) {
            Real c = row[j] - mu;
            var += c * c;
        }
        var /= static_cast<Real>(d);
        Real inv = Real(1) / std::sqrt(var + eps);
        inv_std[r] = inv;
        for (size_t j = 0; j < d; ++j) {
            Real xh = (row[j] - mu) * inv;
            xhat[r * d + j] = xh;
            ov[r * d + j] = gv[j] * xh + bv[j];
        }
    }
    if (detail::should_record<Real>({&x, &gamma, &beta})) {
        detail::mark_output(out, {&x, &gamma, &beta});
        auto sx = x.storage(), sg = gamma.storage(), sb = beta.storage(), so = out.storage();
        GradTape::active().record(
            [sx, sg, sb, so, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
                const Real* g = so->grad.data();
                const Real* gv = sg->data.data();
                for (size_t r = 0; r < rows; ++r) {
                    const size_t base = r * d;
                    if (sg->needs_grad()) {
                        for (size_t j = 0; j < d; ++j) sg->grad[j] += g[base + j] * xhat[base + j];
                    }
                    if (sb->needs_grad()) {
                        for (size_t j = 0; j < d; ++j) sb->grad[j] += g[base + j];
                    }
                    if (sx->needs_grad()) {
                        Real mean_gd = 0, mean_gx = 0;
                        for (size_t j = 0; j < d; ++j) {
                            Real gd = g[base + j] * gv[j];
                            mean_gd += gd;
                            mean_gx += gd * xhat[base + j];
                        }
                        mean_gd /= static_cast<Real>(d);
                        mean_gx /= static_cast<Real>(d);
                        for (size_t j = 0; j < d; ++j) {
                            Real gd = g[base + j] * gv[j];
                            sx->grad[base + j] += inv_std[r] * (gd - mean_gd - xhat[base + j] * mean_gx);
                        }
                    }
                }
            });
    }
    return out;
}

// Exact Gaussian error linear unit, 0.5 x (1 + erf(x / sqrt(2))).
template <class Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
    constexpr Real kInvSqrt2 = Real(0.70710678118654752440L);
    Tensor<Real> out(x.shape());
    const size_t n = x.numel();
    for (size_t i = 0; i < n; ++i) {
        Real v = x.values()[i];
        out.values()[i] = Real(0.5) * v * (Real(1) + std::erf(v * kInvSqrt2));
    }
    if (detail::should_record<Real>({&x})) {
        detail::mark_output(out, {&x});
        auto sx = x.storage(), so = out.storage();
        GradTape::active().record([sx, so] {
            if (!sx->needs_grad()) return;
            constexpr Real kInvSqrt2Pi = Real(0.39894228040143267794L);
            const size_t n = so->grad.size();
            for (size_t i = 0; i < n; ++i) {
                Real v = sx->data[i];
                Real cdf = Real(0.5) * (Real(1) + std::erf(v * kInvSqrt2));
                Real pdf = kInvSqrt2Pi * std::exp(Real(-0.5) * v * v);
                sx->grad[i] += so->grad[i] * (cdf + v * pdf);
            }
        });
    }
    return out;
}

}  // namespace vitstr
