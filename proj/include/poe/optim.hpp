#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "poe/common.hpp"
#include "poe/tensor.hpp"

namespace poe {

struct AdamwConfig {
    double lr = 5e-6;  // constant, no schedule
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Moments are created lazily on first update of a parameter, and bias
// correction runs off the per-parameter step count. A parameter whose
// gradient is absent from a step is left bitwise untouched; that is the
// whole routing mechanism, so keep it strict.
struct OptimizerState {
    AdamwConfig config;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::map<std::string, std::int64_t> steps;
    std::int64_t global_step = 0;
};

inline void adamw_step(std::map<std::string, Tensor>& params,
                       const std::map<std::string, Tensor>& grads,
                       OptimizerState& state) {
    const AdamwConfig& c = state.config;
    state.global_step += 1;
    for (const auto& [name, grad] : grads) {
        auto it = params.find(name);
        require(it != params.end(), ErrorKind::usage, "adamw_step: unknown parameter '" + name + "'");
        Tensor& theta = it->second;
        require(theta.same_shape(grad), ErrorKind::usage,
                "adamw_step: shape mismatch for '" + name + "' (" + theta.shape_string() +
                    " vs " + grad.shape_string() + ")");
        require(grad.all_finite(), ErrorKind::numeric, "adamw_step: non-finite gradient for '" + name + "'");

        Tensor& m = state.m.try_emplace(name, theta.shape()).first->second;
        Tensor& v = state.v.try_emplace(name, theta.shape()).first->second;
        const std::int64_t t = ++state.steps[name];
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));

        for (std::size_t i = 0; i < theta.data().size(); ++i) {
            const double g = grad[i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= c.lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * theta[i]);
        }
        require(theta.all_finite(), ErrorKind::numeric, "adamw_step: non-finite parameter '" + name + "'");
    }
}

}  // namespace poe
