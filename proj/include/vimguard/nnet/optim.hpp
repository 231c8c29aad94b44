#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vimguard/nnet/graph.hpp"

namespace vimguard::nnet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers per parameter entry, plus the shared step
/// counter used for bias correction.
template <typename S>
struct AdamState {
    std::vector<std::vector<S>> m;
    std::vector<std::vector<S>> v;
    int64_t step = 0;
};

/// Standard Adam with bias correction. Parameters with empty gradients are
/// treated as zero-gradient (left unchanged by the update, moments decay).
template <typename S>
void adam_step(ParamStore<S>& params, AdamState<S>& state, const AdamConfig& c) {
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), {});
        state.v.assign(params.size(), {});
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params.entries()[i].value.data.size(), S(0));
            state.v[i].assign(params.entries()[i].value.data.size(), S(0));
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor<S>& p = params.entries()[i].value;
        auto &m = state.m[i], &v = state.v[i];
        for (size_t j = 0; j < p.data.size(); ++j) {
            const double g = p.grad.empty() ? 0.0 : static_cast<double>(p.grad[j]);
            m[j] = static_cast<S>(c.beta1 * m[j] + (1.0 - c.beta1) * g);
            v[j] = static_cast<S>(c.beta2 * v[j] + (1.0 - c.beta2) * g * g);
            const double mhat = static_cast<double>(m[j]) / bc1;
            const double vhat = static_cast<double>(v[j]) / bc2;
            p.data[j] -= static_cast<S>(c.lr * mhat / (std::sqrt(vhat) + c.eps));
        }
    }
}

/// Central-difference gradient check at 64-bit.
///
/// compute_grads() must populate the .grad of every parameter in `stores`
/// (one backward pass); loss_fn() must recompute the scalar loss from the
/// stores' current values. Every parameter element is perturbed by +/- eps
/// and the analytic gradient compared with (L+ - L-) / 2 eps using relative
/// error |a - n| / max(1e-8, |a| + |n|). Returns the max over all elements.
inline double grad_check(const std::vector<ParamStore<double>*>& stores,
                         const std::function<double()>& loss_fn,
                         const std::function<void()>& compute_grads, double eps = 1e-5) {
    compute_grads();
    std::vector<std::vector<std::vector<double>>> analytic(stores.size());
    for (size_t s = 0; s < stores.size(); ++s) {
        analytic[s].resize(stores[s]->size());
        for (size_t i = 0; i < stores[s]->size(); ++i) {
            const auto& g = stores[s]->entries()[i].value.grad;
            require(!g.empty(), Err::ShapeMismatch,
                    "grad_check: missing gradient for " + stores[s]->entries()[i].name);
            analytic[s][i] = g;
        }
    }

    double max_rel = 0.0;
    for (size_t s = 0; s < stores.size(); ++s) {
        for (size_t i = 0; i < stores[s]->size(); ++i) {
            auto& value = stores[s]->entries()[i].value;
            for (size_t j = 0; j < value.data.size(); ++j) {
                const double saved = value.data[j];
                value.data[j] = saved + eps;
                const double lp = loss_fn();
                value.data[j] = saved - eps;
                const double lm = loss_fn();
                value.data[j] = saved;
                const double numeric = (lp - lm) / (2.0 * eps);
                const double a = analytic[s][i][j];
                const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    return max_rel;
}

} // namespace vimguard::nnet
