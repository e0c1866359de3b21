#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "poe/tensor.hpp"

namespace poe {

// Central-difference gradient oracle. `loss_fn` must rebuild the computation
// from scratch on every call so that perturbed parameters flow through it.
using LossFn = std::function<double(const std::map<std::string, Tensor>&)>;

inline double finite_diff_coord(const LossFn& loss_fn,
                                std::map<std::string, Tensor> params,
                                const std::string& name,
                                std::size_t flat_index,
                                double epsilon = 1e-5) {
    Tensor& t = params.at(name);
    const double saved = t[flat_index];
    t[flat_index] = saved + epsilon;
    const double up = loss_fn(params);
    t[flat_index] = saved - epsilon;
    const double down = loss_fn(params);
    t[flat_index] = saved;
    return (up - down) / (2.0 * epsilon);
}

inline std::map<std::string, Tensor> finite_diff_grad(const LossFn& loss_fn,
                                                      const std::map<std::string, Tensor>& params,
                                                      double epsilon = 1e-5) {
    std::map<std::string, Tensor> grads;
    for (const auto& [name, tensor] : params) {
        Tensor g(tensor.shape());
        for (std::size_t i = 0; i < tensor.data().size(); ++i) {
            g[i] = finite_diff_coord(loss_fn, params, name, i, epsilon);
        }
        grads.emplace(name, std::move(g));
    }
    return grads;
}

// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero coordinates from
// reporting spurious mismatches.
inline double relative_error(double a, double b, double floor = 1e-4) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

inline double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-4) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, relative_error(a[i], b[i], floor));
    }
    return worst;
}

}  // namespace poe
