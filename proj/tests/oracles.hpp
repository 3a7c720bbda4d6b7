#pragma once

// Test-only oracles, independent of the library's computation paths:
// a naive triple-loop matrix product and a central finite-difference
// gradient checker (64-bit, h = 1e-5).

#include <cmath>
#include <functional>
#include <vector>

#include "vitstr/ops.hpp"
#include "vitstr/tensor.hpp"

namespace oracles {

using vitstr::GradTape;
using vitstr::Tensor;

inline Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
    const size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor<double> c({m, n});
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double acc = 0;
            for (size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
            c.at(i, j) = acc;
        }
    }
    return c;
}

// The 1e-4 denominator floor absorbs finite-difference cancellation noise
// (~1e-9 for losses of order 10 at h = 1e-5) on directions where the true
// gradient is exactly zero, e.g. the key bias under softmax shift invariance.
// A genuine gradient bug still fails: an error of e in a gradient of
// magnitude g reports at least e / max(g, 1e-4).
inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1e-4, std::fabs(a), std::fabs(b)});
}

// Max relative error between the analytic gradient of loss_fn w.r.t. every
// element of every input and the central finite difference.
inline double max_grad_rel_error(const std::vector<Tensor<double>*>& inputs,
                                 const std::function<Tensor<double>()>& loss_fn,
                                 double h = 1e-5) {
    GradTape::active().clear();
    for (auto* t : inputs) {
        t->set_requires_grad(true);
        t->storage()->ensure_grad();
        t->zero_grad();
    }
    Tensor<double> loss = loss_fn();
    vitstr::backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto* t : inputs) analytic.push_back(t->grad());

    GradTape::NoGrad pause;
    double worst = 0;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        Tensor<double>* t = inputs[ti];
        for (size_t i = 0; i < t->numel(); ++i) {
            const double saved = t->values()[i];
            t->values()[i] = saved + h;
            double up = loss_fn().value();
            t->values()[i] = saved - h;
            double down = loss_fn().value();
            t->values()[i] = saved;
            double fd = (up - down) / (2 * h);
            worst = std::max(worst, rel_err(analytic[ti][i], fd));
        }
    }
    return worst;
}

}  // namespace oracles
