#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poe/common.hpp"
#include "poe/graph.hpp"
#include "poe/rng.hpp"
#include "poe/tensor.hpp"
#include "poe/text.hpp"

namespace poe {

struct PanelConfig {
    std::int64_t layers = 4;      // transformer layers L
    std::int64_t hidden = 64;     // model width d
    std::int64_t heads = 4;
    std::int64_t ffn = 128;
    std::int64_t bottleneck = 16;  // adapter width b
    std::int64_t domains = 1;      // expert count N
    std::int64_t max_len = 64;
    std::int64_t vocab_size = 0;  // filled from the vocab
    double init_range = 0.02;

    void validate() const {
        require(layers >= 2, ErrorKind::usage, "config: need at least 2 layers");
        require(hidden >= 1 && heads >= 1 && hidden % heads == 0, ErrorKind::usage,
                "config: heads must divide hidden size");
        require(bottleneck >= 1 && bottleneck < hidden, ErrorKind::usage,
                "config: bottleneck must be smaller than hidden size");
        require(domains >= 1, ErrorKind::usage, "config: need at least one domain");
        require(max_len >= 5, ErrorKind::usage, "config: max_len too small");
        require(vocab_size >= kNumSpecials, ErrorKind::usage, "config: vocab size too small");
        require(ffn >= 1, ErrorKind::usage, "config: bad ffn size");
        require(init_range >= 0.0, ErrorKind::usage, "config: negative init range");
    }
};

inline std::string encoder_layer_prefix(std::int64_t layer) {
    return "enc.l" + std::to_string(layer) + ".";
}

inline std::string adapter_prefix(std::int64_t adapter, std::int64_t layer) {
    return "adapter." + std::to_string(adapter) + ".l" + std::to_string(layer) + ".";
}

inline std::string classifier_prefix(std::int64_t adapter) {
    return "clf." + std::to_string(adapter) + ".";
}

// Shape table in init order. Checkpoint validation walks the same list.
inline std::vector<std::pair<std::string, std::vector<std::int64_t>>> param_shapes(const PanelConfig& c) {
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> shapes;
    const std::int64_t d = c.hidden;
    shapes.emplace_back("enc.tok_emb", std::vector<std::int64_t>{c.vocab_size, d});
    shapes.emplace_back("enc.pos_emb", std::vector<std::int64_t>{c.max_len, d});
    for (std::int64_t l = 0; l < c.layers; ++l) {
        const std::string p = encoder_layer_prefix(l);
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
            shapes.emplace_back(p + w, std::vector<std::int64_t>{d, d});
        }
        for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
            shapes.emplace_back(p + b, std::vector<std::int64_t>{1, d});
        }
        shapes.emplace_back(p + "ln1.gamma", std::vector<std::int64_t>{1, d});
        shapes.emplace_back(p + "ln1.beta", std::vector<std::int64_t>{1, d});
        shapes.emplace_back(p + "ffn.w1", std::vector<std::int64_t>{d, c.ffn});
        shapes.emplace_back(p + "ffn.b1", std::vector<std::int64_t>{1, c.ffn});
        shapes.emplace_back(p + "ffn.w2", std::vector<std::int64_t>{c.ffn, d});
        shapes.emplace_back(p + "ffn.b2", std::vector<std::int64_t>{1, d});
        shapes.emplace_back(p + "ln2.gamma", std::vector<std::int64_t>{1, d});
        shapes.emplace_back(p + "ln2.beta", std::vector<std::int64_t>{1, d});
    }
    for (std::int64_t n = 0; n < c.domains; ++n) {
        for (std::int64_t l = 0; l + 1 < c.layers; ++l) {
            const std::string p = adapter_prefix(n, l);
            shapes.emplace_back(p + "down.w", std::vector<std::int64_t>{d, c.bottleneck});
            shapes.emplace_back(p + "down.b", std::vector<std::int64_t>{1, c.bottleneck});
            shapes.emplace_back(p + "up.w", std::vector<std::int64_t>{c.bottleneck, d});
            shapes.emplace_back(p + "up.b", std::vector<std::int64_t>{1, d});
        }
        shapes.emplace_back(classifier_prefix(n) + "w", std::vector<std::int64_t>{d, 1});
        shapes.emplace_back(classifier_prefix(n) + "b", std::vector<std::int64_t>{1, 1});
    }
    return shapes;
}

inline bool is_gain_param(const std::string& name) {
    return name.size() >= 6 && name.compare(name.size() - 6, 6, ".gamma") == 0;
}

inline bool is_bias_param(const std::string& name) {
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".beta") == 0) {
        return true;
    }
    const std::size_t dot = name.rfind('.');
    const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    return leaf == "b" || (leaf.size() == 2 && leaf[0] == 'b');
}

// Weights ~ Uniform(-r, r) drawn in shape-table order from one stream,
// biases zero, norm gains one. Same seed, same bits.
inline std::map<std::string, Tensor> init_panel(const PanelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(mix_seed(seed, 0xA11C0DE));
    std::map<std::string, Tensor> params;
    for (const auto& [name, shape] : param_shapes(config)) {
        if (is_gain_param(name)) {
            params.emplace(name, Tensor::full(shape, 1.0));
        } else if (is_bias_param(name)) {
            params.emplace(name, Tensor(shape));
        } else {
            params.emplace(name, Tensor::uniform(shape, rng, -config.init_range, config.init_range));
        }
    }
    return params;
}

// Fresh adapter stack + classifier for one expert slot, same distribution
// and draw order as init_panel uses per stack.
inline std::map<std::string, Tensor> init_adapter_stack(const PanelConfig& config,
                                                        std::uint64_t seed,
                                                        std::int64_t adapter) {
    require(adapter >= 0 && adapter < config.domains, ErrorKind::usage, "init_adapter_stack: bad index");
    Rng rng(mix_seed(seed, 0xADA9 + static_cast<std::uint64_t>(adapter)));
    std::map<std::string, Tensor> params;
    for (std::int64_t l = 0; l + 1 < config.layers; ++l) {
        const std::string p = adapter_prefix(adapter, l);
        params.emplace(p + "down.w",
                       Tensor::uniform({config.hidden, config.bottleneck}, rng, -config.init_range, config.init_range));
        params.emplace(p + "down.b", Tensor::zeros(1, config.bottleneck));
        params.emplace(p + "up.w",
                       Tensor::uniform({config.bottleneck, config.hidden}, rng, -config.init_range, config.init_range));
        params.emplace(p + "up.b", Tensor::zeros(1, config.hidden));
    }
    params.emplace(classifier_prefix(adapter) + "w",
                   Tensor::uniform({config.hidden, 1}, rng, -config.init_range, config.init_range));
    params.emplace(classifier_prefix(adapter) + "b", Tensor::zeros(1, 1));
    return params;
}

struct PanelModel {
    PanelConfig config;
    Vocab vocab;
    std::vector<std::string> domain_names;  // index = adapter id
    std::map<std::string, Tensor> params;

    std::int64_t domain_index(const std::string& name) const {
        for (std::size_t i = 0; i < domain_names.size(); ++i) {
            if (domain_names[i] == name) {
                return static_cast<std::int64_t>(i);
            }
        }
        return -1;
    }
};

inline PanelModel make_panel(PanelConfig config,
                             Vocab vocab,
                             std::vector<std::string> domain_names,
                             std::uint64_t seed) {
    config.vocab_size = vocab.size();
    config.domains = static_cast<std::int64_t>(domain_names.size());
    PanelModel model{config, std::move(vocab), std::move(domain_names), {}};
    model.params = init_panel(model.config, seed);
    return model;
}

// Builds panel computations on one Graph. Parameters listed in `trainable`
// enter as named leaves, everything else as constants, so the backward pass
// produces gradients for exactly the trainable set.
class PanelBuilder {
public:
    PanelBuilder(Graph& graph,
                 const PanelConfig& config,
                 const std::map<std::string, Tensor>& params,
                 std::set<std::string> trainable = {})
        : graph_(graph), config_(config), params_(params), trainable_(std::move(trainable)) {
        config_.validate();
        for (const std::string& name : trainable_) {
            require(params_.count(name) != 0, ErrorKind::usage,
                    "trainable parameter '" + name + "' not in panel");
        }
    }

    Graph& graph() { return graph_; }

    int param_node(const std::string& name) {
        auto it = cache_.find(name);
        if (it != cache_.end()) {
            return it->second;
        }
        auto pit = params_.find(name);
        require(pit != params_.end(), ErrorKind::usage, "unknown parameter '" + name + "'");
        const int id = trainable_.count(name) ? graph_.leaf(name, pit->second) : graph_.constant(pit->second);
        cache_.emplace(name, id);
        return id;
    }

    // Final-layer representation at position 0, shape [1, d].
    int encode(const TokenSequence& tokens, std::int64_t adapter) {
        require(adapter >= 0 && adapter < config_.domains, ErrorKind::usage, "adapter id out of range");
        const std::int64_t t = tokens.attention_length;
        require(t >= 1 && t <= config_.max_len, ErrorKind::usage, "bad attention length");
        require(static_cast<std::int64_t>(tokens.ids.size()) == config_.max_len, ErrorKind::usage,
                "token sequence length must equal max_len");

        // Pads sit in a suffix, so running on the non-pad prefix is exact
        // masking: padded positions neither contribute nor receive anything.
        std::vector<std::int64_t> prefix(tokens.ids.begin(), tokens.ids.begin() + t);
        int x = graph_.embedding(param_node("enc.tok_emb"), prefix);
        x = graph_.add(x, graph_.slice_rows(param_node("enc.pos_emb"), 0, t));

        for (std::int64_t l = 0; l < config_.layers; ++l) {
            x = encoder_layer(x, l);
            if (l + 1 < config_.layers) {
                x = adapter_layer(x, adapter, l);
            }
        }
        return graph_.slice_rows(x, 0, 1);
    }

    // Classifier logit for one pair, shape [1, 1].
    int logit(const TokenSequence& tokens, std::int64_t adapter) {
        const int pooled = encode(tokens, adapter);
        const std::string p = classifier_prefix(adapter);
        return graph_.add(graph_.matmul(pooled, param_node(p + "w")), param_node(p + "b"));
    }

    // Stacked logits for a batch, shape [B, 1].
    int batch_logits(const std::vector<TokenSequence>& batch, const std::vector<std::int64_t>& adapters) {
        require(!batch.empty() && batch.size() == adapters.size(), ErrorKind::usage,
                "batch_logits: batch and adapter lists must align");
        std::vector<int> rows;
        rows.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            rows.push_back(logit(batch[i], adapters[i]));
        }
        return rows.size() == 1 ? rows[0] : graph_.concat_rows(rows);
    }

private:
    int encoder_layer(int x, std::int64_t l) {
        const std::string p = encoder_layer_prefix(l);
        const std::int64_t head_dim = config_.hidden / config_.heads;
        const int q = graph_.add(graph_.matmul(x, param_node(p + "attn.wq")), param_node(p + "attn.bq"));
        const int k = graph_.add(graph_.matmul(x, param_node(p + "attn.wk")), param_node(p + "attn.bk"));
        const int v = graph_.add(graph_.matmul(x, param_node(p + "attn.wv")), param_node(p + "attn.bv"));
        const int scale = graph_.constant(Tensor::scalar(1.0 / std::sqrt(static_cast<double>(head_dim))));

        std::vector<int> heads;
        heads.reserve(static_cast<std::size_t>(config_.heads));
        for (std::int64_t h = 0; h < config_.heads; ++h) {
            const std::int64_t c0 = h * head_dim;
            const std::int64_t c1 = c0 + head_dim;
            const int qh = graph_.slice_cols(q, c0, c1);
            const int kh = graph_.slice_cols(k, c0, c1);
            const int vh = graph_.slice_cols(v, c0, c1);
            const int scores = graph_.mul(graph_.matmul(qh, kh, /*trans_b=*/true), scale);
            heads.push_back(graph_.matmul(graph_.softmax(scores), vh));
        }
        const int ctx = config_.heads == 1 ? heads[0] : graph_.concat_cols(heads);
        const int attn_out = graph_.add(graph_.matmul(ctx, param_node(p + "attn.wo")), param_node(p + "attn.bo"));
        x = graph_.layer_norm(graph_.add(x, attn_out), param_node(p + "ln1.gamma"), param_node(p + "ln1.beta"));

        const int h1 = graph_.gelu(graph_.add(graph_.matmul(x, param_node(p + "ffn.w1")), param_node(p + "ffn.b1")));
        const int h2 = graph_.add(graph_.matmul(h1, param_node(p + "ffn.w2")), param_node(p + "ffn.b2"));
        x = graph_.layer_norm(graph_.add(x, h2), param_node(p + "ln2.gamma"), param_node(p + "ln2.beta"));
        return x;
    }

    int adapter_layer(int x, std::int64_t adapter, std::int64_t l) {
        const std::string p = adapter_prefix(adapter, l);
        const int down = graph_.gelu(
            graph_.add(graph_.matmul(x, param_node(p + "down.w")), param_node(p + "down.b")));
        const int up = graph_.add(graph_.matmul(down, param_node(p + "up.w")), param_node(p + "up.b"));
        return graph_.add(x, up);
    }

    Graph& graph_;
    PanelConfig config_;
    const std::map<std::string, Tensor>& params_;
    std::set<std::string> trainable_;
    std::map<std::string, int> cache_;
};

// Pure inference path for one expert, output strictly inside (0,1).
inline double panel_forward(const PanelModel& model, const TokenSequence& tokens, std::int64_t adapter) {
    Graph graph;
    PanelBuilder builder(graph, model.config, model.params);
    const int y = graph.sigmoid(builder.logit(tokens, adapter));
    return graph.value(y).scalar_value();
}

inline double panel_forward(const PanelModel& model,
                            const std::vector<std::string>& context,
                            const std::string& response,
                            std::int64_t adapter) {
    return panel_forward(model, encode_pair(model.vocab, context, response, model.config.max_len), adapter);
}

}  // namespace poe
