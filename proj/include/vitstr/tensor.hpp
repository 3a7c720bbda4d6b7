#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vitstr {

inline std::string shape_str(const std::vector<size_t>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << " x ";
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace detail {

template <class Real>
struct Storage {
    std::vector<size_t> shape;
    std::vector<Real> data;
    std::vector<Real> grad;       // empty until needed; data-sized when present
    bool requires_grad = false;   // user-marked leaf
    bool tracked = false;         // produced by an op recorded on the tape

    bool needs_grad() const { return requires_grad || tracked; }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), Real(0));
    }
};

inline size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor: zero extent in shape " + shape_str(shape));
        n *= e;
    }
    return n;
}

}  // namespace detail

// Dense row-major tensor. Copies are shallow handles onto shared storage;
// values are treated as immutable once created, except gradient accumulation
// and optimizer updates on leaf parameters.
template <class Real>
class Tensor {
public:
    using Scalar = Real;

    Tensor() : st_(std::make_shared<detail::Storage<Real>>()) {}

    explicit Tensor(std::vector<size_t> shape, Real fill = Real(0), bool requires_grad = false)
        : st_(std::make_shared<detail::Storage<Real>>()) {
        size_t n = detail::shape_numel(shape);
        st_->shape = std::move(shape);
        st_->data.assign(n, fill);
        st_->requires_grad = requires_grad;
    }

    Tensor(std::vector<size_t> shape, std::vector<Real> values, bool requires_grad = false)
        : st_(std::make_shared<detail::Storage<Real>>()) {
        size_t n = detail::shape_numel(shape);
        if (values.size() != n) {
            throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape));
        }
        st_->shape = std::move(shape);
        st_->data = std::move(values);
        st_->requires_grad = requires_grad;
    }

    static Tensor scalar(Real v) { return Tensor({1}, std::vector<Real>{v}); }

    const std::vector<size_t>& shape() const { return st_->shape; }
    size_t ndim() const { return st_->shape.size(); }
    size_t numel() const { return st_->data.size(); }
    size_t extent(size_t axis) const {
        if (axis >= ndim()) throw std::out_of_range("tensor: axis " + std::to_string(axis));
        return st_->shape[axis];
    }

    std::vector<Real>& values() { return st_->data; }
    const std::vector<Real>& values() const { return st_->data; }

    Real value() const {
        if (numel() != 1) {
            throw std::logic_error("tensor: value() on non-scalar of shape " + shape_str(shape()));
        }
        return st_->data[0];
    }

    template <class... Ix>
    Real& at(Ix... ix) {
        return st_->data[flat_index({static_cast<size_t>(ix)...})];
    }
    template <class... Ix>
    Real at(Ix... ix) const {
        return st_->data[flat_index({static_cast<size_t>(ix)...})];
    }

    bool requires_grad() const { return st_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        st_->requires_grad = b;
        return *this;
    }

    bool grad_allocated() const { return st_->grad.size() == st_->data.size(); }
    std::vector<Real>& grad() {
        if (!grad_allocated()) throw std::logic_error("tensor: gradient not populated");
        return st_->grad;
    }
    const std::vector<Real>& grad() const {
        if (!grad_allocated()) throw std::logic_error("tensor: gradient not populated");
        return st_->grad;
    }
    void zero_grad() {
        if (grad_allocated()) std::fill(st_->grad.begin(), st_->grad.end(), Real(0));
    }

    bool all_finite() const {
        for (Real v : st_->data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    // Deep copy of values only (no grad, no history).
    Tensor clone_detached() const {
        Tensor out;
        out.st_->shape = st_->shape;
        out.st_->data = st_->data;
        return out;
    }

    bool same_storage(const Tensor& other) const { return st_ == other.st_; }

    std::shared_ptr<detail::Storage<Real>>& storage() { return st_; }
    const std::shared_ptr<detail::Storage<Real>>& storage() const { return st_; }

private:
    size_t flat_index(std::initializer_list<size_t> ix) const {
        if (ix.size() != ndim()) {
            throw std::out_of_range("tensor: " + std::to_string(ix.size()) +
                                    " indices for shape " + shape_str(shape()));
        }
        size_t flat = 0;
        size_t axis = 0;
        for (size_t i : ix) {
            if (i >= st_->shape[axis]) {
                throw std::out_of_range("tensor: index " + std::to_string(i) + " out of range for axis " +
                                        std::to_string(axis) + " of " + shape_str(shape()));
            }
            flat = flat * st_->shape[axis] + i;
            ++axis;
        }
        return flat;
    }

    std::shared_ptr<detail::Storage<Real>> st_;
};

// Ordered record of executed differentiable operations. Forward execution
// order is a topological order, so replaying entries in reverse propagates
// gradients correctly. One tape per thread; a training step owns its tape.
class GradTape {
public:
    static GradTape& active() {
        thread_local GradTape tape;
        return tape;
    }

    static bool& recording_flag() {
        thread_local bool on = true;
        return on;
    }
    static bool recording() { return recording_flag(); }

    // RAII guard that disables recording (inference / data paths).
    class NoGrad {
    public:
        NoGrad() : prev_(recording_flag()) { recording_flag() = false; }
        ~NoGrad() { recording_flag() = prev_; }
        NoGrad(const NoGrad&) = delete;
        NoGrad& operator=(const NoGrad&) = delete;

    private:
        bool prev_;
    };

    void record(std::function<void()> fn) { entries_.push_back(std::move(fn)); }
    size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }

    void replay_backward_and_clear() {
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
        clear();
    }

private:
    std::vector<std::function<void()>> entries_;
};

// Populates grad for every tensor with gradient history reachable from loss,
// then clears the tape.
template <class Real>
inline void backward(Tensor<Real>& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                    shape_str(loss.shape()));
    }
    loss.storage()->ensure_grad();
    loss.storage()->grad[0] = Real(1);
    GradTape::active().replay_backward_and_clear();
}

}  // namespace vitstr
