#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poe/common.hpp"
#include "poe/panel.hpp"

namespace poe {

enum class FusionMode { avg, max, min };

inline const char* fusion_mode_name(FusionMode mode) {
    switch (mode) {
        case FusionMode::avg: return "avg";
        case FusionMode::max: return "max";
        case FusionMode::min: return "min";
    }
    return "?";
}

inline FusionMode parse_fusion_mode(const std::string& s) {
    if (s == "avg") {
        return FusionMode::avg;
    }
    if (s == "max") {
        return FusionMode::max;
    }
    if (s == "min") {
        return FusionMode::min;
    }
    fail(ErrorKind::usage, "unknown fusion mode '" + s + "' (avg|max|min)");
}

struct ScoreTrace {
    std::vector<double> component_scores;  // per-expert, index order
    double score = 0.0;
    std::int64_t encoder_passes = 0;
};

inline std::int64_t count_passes(const ScoreTrace& trace) { return trace.encoder_passes; }

// In-domain scoring reads one expert; out-of-domain averages all of them,
// summed in expert index order.
inline ScoreTrace score(const PanelModel& model,
                        const TokenSequence& tokens,
                        std::optional<std::int64_t> domain_hint = std::nullopt) {
    const std::int64_t n = model.config.domains;
    ScoreTrace trace;
    if (domain_hint.has_value()) {
        require(*domain_hint >= 0 && *domain_hint < n, ErrorKind::usage, "score: domain hint out of range");
        trace.component_scores.push_back(panel_forward(model, tokens, *domain_hint));
        trace.score = trace.component_scores.back();
        trace.encoder_passes = 1;
        return trace;
    }
    double sum = 0.0;
    for (std::int64_t t = 0; t < n; ++t) {
        const double y = panel_forward(model, tokens, t);
        trace.component_scores.push_back(y);
        sum += y;
    }
    trace.score = sum / static_cast<double>(n);
    trace.encoder_passes = n;
    return trace;
}

inline ScoreTrace score(const PanelModel& model,
                        const std::vector<std::string>& context,
                        const std::string& response,
                        std::optional<std::int64_t> domain_hint = std::nullopt) {
    return score(model, encode_pair(model.vocab, context, response, model.config.max_len), domain_hint);
}

// Elementwise pool of the N adapter stacks and classifiers into a single
// expert, biases included. Result is a 1-domain panel around the same
// encoder, so scoring it costs one encoder pass.
inline PanelModel pool_experts(const PanelModel& model, FusionMode mode) {
    const std::int64_t n = model.config.domains;
    require(n >= 1, ErrorKind::usage, "pool_experts: no experts");

    PanelModel pooled;
    pooled.config = model.config;
    pooled.config.domains = 1;
    pooled.vocab = model.vocab;
    pooled.domain_names = {std::string("pooled-") + fusion_mode_name(mode)};

    for (const auto& [name, tensor] : model.params) {
        if (name.rfind("enc.", 0) == 0) {
            pooled.params.emplace(name, tensor);
        }
    }

    // Walk expert 0's tensor names; replace the index to reach expert t.
    for (const auto& [name, first] : model.params) {
        const bool adapter0 = name.rfind("adapter.0.", 0) == 0;
        const bool clf0 = name.rfind("clf.0.", 0) == 0;
        if (!adapter0 && !clf0) {
            continue;
        }
        const std::string suffix = name.substr(adapter0 ? 10 : 6);
        Tensor acc = first;
        for (std::int64_t t = 1; t < n; ++t) {
            const std::string other_name =
                (adapter0 ? "adapter." : "clf.") + std::to_string(t) + "." + suffix;
            auto it = model.params.find(other_name);
            require(it != model.params.end(), ErrorKind::usage, "pool_experts: missing '" + other_name + "'");
            const Tensor& other = it->second;
            require(other.same_shape(acc), ErrorKind::usage, "pool_experts: shape drift at '" + other_name + "'");
            for (std::size_t i = 0; i < acc.data().size(); ++i) {
                switch (mode) {
                    case FusionMode::avg: acc[i] += other[i]; break;
                    case FusionMode::max: acc[i] = std::max(acc[i], other[i]); break;
                    case FusionMode::min: acc[i] = std::min(acc[i], other[i]); break;
                }
            }
        }
        if (mode == FusionMode::avg) {
            for (double& v : acc.data()) {
                v /= static_cast<double>(n);
            }
        }
        pooled.params.emplace(name, std::move(acc));
    }
    return pooled;
}

}  // namespace poe
