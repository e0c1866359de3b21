#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poe/common.hpp"
#include "poe/data.hpp"
#include "poe/meta_eval.hpp"
#include "poe/optim.hpp"
#include "poe/panel.hpp"
#include "poe/rng.hpp"
#include "poe/text.hpp"

namespace poe {

enum class LossKind { bce, mse };

struct TrainConfig {
    std::int64_t batch_size = 16;
    double lr = 1e-3;
    std::int64_t max_epochs = 3;
    std::int64_t eval_every = 200;  // steps between validation checkpoints
    std::int64_t patience = 10;     // non-improving checkpoints before stopping
    std::uint64_t seed = 0;
    LossKind loss = LossKind::bce;
    double weight_decay = 0.01;
    bool uniform_sampling = false;  // true: one merged stream, no per-domain quota

    void validate() const {
        require(batch_size >= 1, ErrorKind::usage, "train config: batch size must be positive");
        require(patience >= 1, ErrorKind::usage, "train config: patience must be positive");
        require(max_epochs >= 0, ErrorKind::usage, "train config: negative epoch cap");
        require(eval_every >= 1, ErrorKind::usage, "train config: eval_every must be positive");
        require(lr > 0.0, ErrorKind::usage, "train config: learning rate must be positive");
        require(weight_decay >= 0.0, ErrorKind::usage, "train config: negative weight decay");
    }
};

// Desk-scale defaults; the full-scale settings survive as a named preset.
inline TrainConfig toy_train_config() { return TrainConfig{}; }

inline TrainConfig full_train_config() {
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.lr = 5e-6;
    cfg.eval_every = 2000;
    cfg.patience = 10;
    return cfg;
}

inline TrainConfig toy_finetune_config() {
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.eval_every = 100;
    cfg.patience = 3;
    return cfg;
}

inline TrainConfig full_finetune_config() {
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.lr = 1e-5;
    cfg.eval_every = 1024;
    cfg.patience = 3;
    return cfg;
}

inline TrainConfig toy_fewshot_config() {
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.lr = 1e-3;
    cfg.max_epochs = 60;
    cfg.patience = 10;  // epochs, for the few-shot loop
    cfg.loss = LossKind::mse;
    return cfg;
}

inline TrainConfig full_fewshot_config() {
    TrainConfig cfg = toy_fewshot_config();
    cfg.lr = 1e-5;
    return cfg;
}

struct TrainInstance {
    TokenSequence tokens;
    double target = 0.0;       // 0/1 label for BCE, [0,1] score for MSE
    std::int64_t domain = 0;   // adapter routed through
};

using MiniBatch = std::vector<TrainInstance>;

inline std::vector<TrainInstance> encode_dataset(const Vocab& vocab,
                                                 std::int64_t max_len,
                                                 const DomainDataset& dataset,
                                                 std::int64_t domain_index) {
    std::vector<TrainInstance> instances;
    for (const ContextResponsePair& pair : dataset.pairs) {
        require(pair.label.has_value(), ErrorKind::data,
                "dataset '" + dataset.domain + "' holds unlabeled pairs");
        TrainInstance instance;
        instance.tokens = encode_pair(vocab, pair.context, pair.response, max_len);
        instance.target = static_cast<double>(*pair.label);
        instance.domain = domain_index;
        instances.push_back(std::move(instance));
    }
    return instances;
}

inline std::pair<DomainDataset, DomainDataset> split_dataset(const DomainDataset& dataset,
                                                             double val_fraction,
                                                             std::uint64_t seed) {
    require(val_fraction > 0.0 && val_fraction < 1.0, ErrorKind::usage, "split: fraction outside (0,1)");
    std::vector<std::size_t> order(dataset.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(mix_seed(seed, fnv1a(dataset.domain, 0x5917)));
    rng.shuffle(order);
    std::size_t val_count = static_cast<std::size_t>(val_fraction * static_cast<double>(order.size()));
    val_count = std::max<std::size_t>(1, std::min(val_count, order.size() - 1));
    DomainDataset train{dataset.domain, {}};
    DomainDataset val{dataset.domain, {}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < val_count ? val : train).pairs.push_back(dataset.pairs[order[i]]);
    }
    return {std::move(train), std::move(val)};
}

// Epoch-shuffled stream sampler. Quota mode slices batch/N instances from
// each domain stream; the epoch ends when any stream cannot fill its quota.
// Uniform mode merges every stream into one shuffled pool.
class MinibatchSampler {
public:
    MinibatchSampler(const std::vector<std::vector<TrainInstance>>& streams,
                     std::int64_t batch_size,
                     bool uniform,
                     std::uint64_t seed)
        : streams_(streams), batch_size_(batch_size), uniform_(uniform), seed_(seed) {
        require(!streams.empty(), ErrorKind::usage, "sampler: no streams");
        for (const auto& s : streams) {
            require(!s.empty(), ErrorKind::data, "sampler: empty domain stream");
        }
        if (!uniform_) {
            quota_ = batch_size_ / static_cast<std::int64_t>(streams.size());
            require(quota_ * static_cast<std::int64_t>(streams.size()) == batch_size_, ErrorKind::usage,
                    "sampler: batch size must be divisible by the domain count");
            require(quota_ >= 1, ErrorKind::usage, "sampler: batch too small for domain count");
        }
        orders_.resize(streams.size());
    }

    void start_epoch(std::int64_t epoch) {
        Rng rng(mix_seed(seed_, 0xE90C + static_cast<std::uint64_t>(epoch)));
        if (uniform_) {
            merged_.clear();
            for (std::size_t s = 0; s < streams_.size(); ++s) {
                for (std::size_t i = 0; i < streams_[s].size(); ++i) {
                    merged_.emplace_back(s, i);
                }
            }
            rng.shuffle(merged_);
            merged_cursor_ = 0;
        } else {
            for (std::size_t s = 0; s < streams_.size(); ++s) {
                orders_[s].resize(streams_[s].size());
                for (std::size_t i = 0; i < orders_[s].size(); ++i) {
                    orders_[s][i] = i;
                }
                rng.shuffle(orders_[s]);
            }
            cursors_.assign(streams_.size(), 0);
        }
    }

    std::optional<MiniBatch> next() {
        MiniBatch batch;
        if (uniform_) {
            if (merged_cursor_ + static_cast<std::size_t>(batch_size_) > merged_.size()) {
                return std::nullopt;
            }
            for (std::int64_t k = 0; k < batch_size_; ++k) {
                const auto& [s, i] = merged_[merged_cursor_++];
                batch.push_back(streams_[s][i]);
            }
            return batch;
        }
        for (std::size_t s = 0; s < streams_.size(); ++s) {
            if (cursors_[s] + static_cast<std::size_t>(quota_) > streams_[s].size()) {
                return std::nullopt;
            }
        }
        for (std::size_t s = 0; s < streams_.size(); ++s) {
            for (std::int64_t k = 0; k < quota_; ++k) {
                batch.push_back(streams_[s][orders_[s][cursors_[s]++]]);
            }
        }
        return batch;
    }

private:
    const std::vector<std::vector<TrainInstance>>& streams_;
    std::int64_t batch_size_;
    bool uniform_;
    std::uint64_t seed_;
    std::int64_t quota_ = 0;
    std::vector<std::vector<std::size_t>> orders_;
    std::vector<std::size_t> cursors_;
    std::vector<std::pair<std::size_t, std::size_t>> merged_;
    std::size_t merged_cursor_ = 0;
};

// One optimizer step over a mixed-domain batch. Lazy parameter registration
// does the routing: absent experts never enter the graph, produce no
// gradient, and are never touched by the optimizer.
inline double train_step(PanelModel& model,
                         const MiniBatch& batch,
                         const std::set<std::string>& trainable,
                         LossKind loss_kind,
                         OptimizerState& optimizer) {
    require(!batch.empty(), ErrorKind::usage, "train_step: empty batch");
    Graph graph;
    PanelBuilder builder(graph, model.config, model.params, trainable);
    std::vector<TokenSequence> sequences;
    std::vector<std::int64_t> adapters;
    std::vector<double> targets;
    for (const TrainInstance& instance : batch) {
        sequences.push_back(instance.tokens);
        adapters.push_back(instance.domain);
        targets.push_back(instance.target);
    }
    const int logits = builder.batch_logits(sequences, adapters);
    int loss;
    if (loss_kind == LossKind::bce) {
        loss = graph.reduce_mean(graph.bce_with_logits(logits, targets));
    } else {
        loss = graph.reduce_mean(graph.squared_error(graph.sigmoid(logits), targets));
    }
    BackwardResult result = graph.forward_backward(loss);
    adamw_step(model.params, result.grads, optimizer);
    return result.loss;
}

// Fraction of instances whose thresholded score matches the label.
inline double accuracy(const PanelModel& model, const std::vector<TrainInstance>& instances) {
    require(!instances.empty(), ErrorKind::usage, "accuracy: no instances");
    std::size_t correct = 0;
    for (const TrainInstance& instance : instances) {
        const double y = panel_forward(model, instance.tokens, instance.domain);
        const int predicted = y >= 0.5 ? 1 : 0;
        const int label = instance.target >= 0.5 ? 1 : 0;
        correct += predicted == label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(instances.size());
}

struct HistoryEntry {
    std::int64_t step = 0;
    double train_loss = 0.0;
    bool evaluated = false;
    std::vector<double> domain_accuracy;  // one entry per evaluated stream
    double mean_accuracy = 0.0;
    std::int64_t domain = -1;  // -1: all domains trained jointly
};

struct TrainResult {
    PanelModel model;
    std::vector<HistoryEntry> history;
    std::int64_t best_step = 0;
    double best_metric = 0.0;
};

namespace detail {

// Shared BCE loop: quota or uniform sampling over the given streams,
// validation every eval_every steps, best-checkpoint early stopping.
inline TrainResult bce_train_loop(PanelModel model,
                                  const std::vector<std::vector<TrainInstance>>& train_streams,
                                  const std::vector<std::vector<TrainInstance>>& val_streams,
                                  const std::set<std::string>& trainable,
                                  const TrainConfig& cfg,
                                  std::int64_t history_domain) {
    cfg.validate();
    require(cfg.loss == LossKind::bce, ErrorKind::usage, "training loop expects BCE loss");
    require(train_streams.size() == val_streams.size(), ErrorKind::usage,
            "training loop: stream count mismatch");

    OptimizerState optimizer;
    optimizer.config.lr = cfg.lr;
    optimizer.config.weight_decay = cfg.weight_decay;

    MinibatchSampler sampler(train_streams, cfg.batch_size, cfg.uniform_sampling, cfg.seed);

    TrainResult result;
    result.model = model;  // fallback when no checkpoint is ever evaluated
    std::int64_t step = 0;
    std::int64_t stale = 0;
    bool stop = false;
    bool have_best = false;

    auto evaluate = [&](double train_loss) {
        HistoryEntry entry;
        entry.step = step;
        entry.train_loss = train_loss;
        entry.evaluated = true;
        entry.domain = history_domain;
        double sum = 0.0;
        for (const auto& stream : val_streams) {
            const double acc = accuracy(model, stream);
            entry.domain_accuracy.push_back(acc);
            sum += acc;
        }
        entry.mean_accuracy = sum / static_cast<double>(val_streams.size());
        result.history.push_back(entry);
        if (!have_best || entry.mean_accuracy > result.best_metric) {
            have_best = true;
            result.best_metric = entry.mean_accuracy;
            result.best_step = step;
            result.model = model;
            stale = 0;
        } else {
            stale += 1;
            if (stale >= cfg.patience) {
                stop = true;
            }
        }
    };

    for (std::int64_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
        sampler.start_epoch(epoch);
        while (!stop) {
            std::optional<MiniBatch> batch = sampler.next();
            if (!batch.has_value()) {
                break;
            }
            step += 1;
            double loss;
            try {
                loss = train_step(model, *batch, trainable, LossKind::bce, optimizer);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::numeric) {
                    fail(ErrorKind::numeric, "step " + std::to_string(step) + ": " + e.what());
                }
                throw;
            }
            if (step % cfg.eval_every == 0) {
                evaluate(loss);
            } else {
                HistoryEntry entry;
                entry.step = step;
                entry.train_loss = loss;
                entry.domain = history_domain;
                result.history.push_back(entry);
            }
        }
    }
    if (step > 0 && (result.history.empty() || !result.history.back().evaluated) && !stop) {
        evaluate(result.history.empty() ? 0.0 : result.history.back().train_loss);
    }
    if (!have_best) {
        result.model = std::move(model);
    }
    return result;
}

inline std::set<std::string> all_param_names(const PanelModel& model) {
    std::set<std::string> names;
    for (const auto& [name, tensor] : model.params) {
        names.insert(name);
    }
    return names;
}

inline std::set<std::string> expert_param_names(const PanelModel& model, std::int64_t domain) {
    std::set<std::string> names;
    const std::string adapter_stem = "adapter." + std::to_string(domain) + ".";
    const std::string clf_stem = classifier_prefix(domain);
    for (const auto& [name, tensor] : model.params) {
        if (name.rfind(adapter_stem, 0) == 0 || name.rfind(clf_stem, 0) == 0) {
            names.insert(name);
        }
    }
    return names;
}

}  // namespace detail

// Joint pretraining: every parameter learns, experts see only their own
// domain's instances, the encoder sees everything.
inline TrainResult train_multitask(const PanelModel& start,
                                   const std::vector<DomainDataset>& train,
                                   const std::vector<DomainDataset>& val,
                                   const TrainConfig& cfg) {
    require(static_cast<std::int64_t>(train.size()) == start.config.domains, ErrorKind::usage,
            "train_multitask: dataset count must equal domain count");
    require(train.size() == val.size(), ErrorKind::usage, "train_multitask: train/val mismatch");
    std::vector<std::vector<TrainInstance>> train_streams;
    std::vector<std::vector<TrainInstance>> val_streams;
    for (std::size_t n = 0; n < train.size(); ++n) {
        const auto domain = static_cast<std::int64_t>(n);
        train_streams.push_back(encode_dataset(start.vocab, start.config.max_len, train[n], domain));
        val_streams.push_back(encode_dataset(start.vocab, start.config.max_len, val[n], domain));
    }
    return detail::bce_train_loop(start, train_streams, val_streams, detail::all_param_names(start), cfg,
                                  /*history_domain=*/-1);
}

// Per-expert polish: encoder frozen, each expert trained on its own domain
// with its own early stopping.
inline TrainResult finetune_adapters(const PanelModel& start,
                                     const std::vector<DomainDataset>& train,
                                     const std::vector<DomainDataset>& val,
                                     const TrainConfig& cfg) {
    require(static_cast<std::int64_t>(train.size()) == start.config.domains, ErrorKind::usage,
            "finetune_adapters: dataset count must equal domain count");
    require(train.size() == val.size(), ErrorKind::usage, "finetune_adapters: train/val mismatch");
    TrainResult combined;
    combined.model = start;
    for (std::size_t n = 0; n < train.size(); ++n) {
        const auto domain = static_cast<std::int64_t>(n);
        std::vector<std::vector<TrainInstance>> train_streams = {
            encode_dataset(start.vocab, start.config.max_len, train[n], domain)};
        std::vector<std::vector<TrainInstance>> val_streams = {
            encode_dataset(start.vocab, start.config.max_len, val[n], domain)};
        TrainConfig domain_cfg = cfg;
        domain_cfg.seed = mix_seed(cfg.seed, 0xF17E + static_cast<std::uint64_t>(n));
        TrainResult r = detail::bce_train_loop(combined.model, train_streams, val_streams,
                                               detail::expert_param_names(combined.model, domain),
                                               domain_cfg, domain);
        combined.model = std::move(r.model);
        for (HistoryEntry& entry : r.history) {
            combined.history.push_back(std::move(entry));
        }
        combined.best_metric += r.best_metric / static_cast<double>(train.size());
    }
    return combined;
}

// Expansion: freeze everything that exists, bolt on expert N+1, train it on
// the task data alone.
inline TrainResult train_new_adapter(const PanelModel& start,
                                     const DomainDataset& task_train,
                                     const DomainDataset& task_val,
                                     const std::string& new_domain_name,
                                     const TrainConfig& cfg,
                                     std::uint64_t init_seed) {
    require(start.domain_index(new_domain_name) < 0, ErrorKind::usage,
            "train_new_adapter: domain '" + new_domain_name + "' already present");
    PanelModel model = start;
    model.config.domains += 1;
    model.domain_names.push_back(new_domain_name);
    const std::int64_t slot = model.config.domains - 1;
    for (auto& [name, tensor] : init_adapter_stack(model.config, init_seed, slot)) {
        model.params.emplace(name, std::move(tensor));
    }
    std::vector<std::vector<TrainInstance>> train_streams = {
        encode_dataset(model.vocab, model.config.max_len, task_train, slot)};
    std::vector<std::vector<TrainInstance>> val_streams = {
        encode_dataset(model.vocab, model.config.max_len, task_val, slot)};
    const std::set<std::string> trainable = detail::expert_param_names(model, slot);
    return detail::bce_train_loop(std::move(model), train_streams, val_streams, trainable, cfg, slot);
}

struct FewshotResult {
    PanelModel model;
    double rho_before = 0.0;
    double rho_after = 0.0;
    std::vector<HistoryEntry> history;  // one entry per epoch
    std::int64_t best_epoch = 0;
    std::size_t sampled = 0;
};

// Regression transfer on a pooled (single-expert) model: sample K% of the
// annotated set, train half under MSE against min-max rescaled scores,
// early-stop on the other half's Spearman, report full-set Spearman before
// and after. Validation halves below 3 records cannot rank, so those runs
// just exhaust the epoch cap.
inline FewshotResult fewshot_finetune(const PanelModel& pooled,
                                      const std::vector<EvaluationRecord>& records,
                                      double k_percent,
                                      const TrainConfig& cfg,
                                      bool expert_only = false) {
    cfg.validate();
    require(cfg.loss == LossKind::mse, ErrorKind::usage, "fewshot: config must use MSE loss");
    require(pooled.config.domains == 1, ErrorKind::usage, "fewshot: expects a pooled single-expert model");
    require(!records.empty(), ErrorKind::data, "fewshot: empty evaluation set");
    require(k_percent > 0.0 && k_percent <= 100.0, ErrorKind::usage, "fewshot: K outside (0,100]");
    if (k_percent != 10.0 && k_percent != 20.0 && k_percent != 30.0 && k_percent != 40.0) {
        std::cerr << "note: few-shot K=" << k_percent << "% is outside the standard {10,20,30,40} grid\n";
    }

    double lo = records.front().human_score;
    double hi = lo;
    for (const EvaluationRecord& r : records) {
        lo = std::min(lo, r.human_score);
        hi = std::max(hi, r.human_score);
    }
    require(hi > lo, ErrorKind::data, "fewshot: constant human scores cannot be rescaled");
    auto rescale = [lo, hi](double q) { return (q - lo) / (hi - lo); };

    auto full_rho = [&](const PanelModel& m) {
        std::vector<double> scores;
        std::vector<double> human;
        for (const EvaluationRecord& r : records) {
            scores.push_back(panel_forward(m, encode_pair(m.vocab, r.pair.context, r.pair.response,
                                                          m.config.max_len), 0));
            human.push_back(r.human_score);
        }
        return spearman(scores, human).rho;
    };

    FewshotResult result;
    result.model = pooled;
    result.rho_before = full_rho(pooled);

    const std::size_t sample_count = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(k_percent / 100.0 * static_cast<double>(records.size()))));
    require(sample_count >= 2, ErrorKind::data, "fewshot: K% sample smaller than 2 records");
    require(sample_count <= records.size(), ErrorKind::data, "fewshot: K% sample exceeds dataset");

    Rng rng(mix_seed(cfg.seed, 0xFE35));
    std::vector<std::size_t> picked = rng.sample_indices(records.size(), sample_count);
    const std::size_t train_count = sample_count / 2;
    require(train_count >= 1, ErrorKind::data, "fewshot: no training records after split");

    std::vector<TrainInstance> train_instances;
    std::vector<std::pair<TokenSequence, double>> val_pairs;
    for (std::size_t i = 0; i < picked.size(); ++i) {
        const EvaluationRecord& r = records[picked[i]];
        TokenSequence tokens = encode_pair(pooled.vocab, r.pair.context, r.pair.response,
                                           pooled.config.max_len);
        if (i < train_count) {
            TrainInstance instance;
            instance.tokens = std::move(tokens);
            instance.target = rescale(r.human_score);
            instance.domain = 0;
            train_instances.push_back(std::move(instance));
        } else {
            val_pairs.emplace_back(std::move(tokens), r.human_score);
        }
    }

    auto val_rho = [&](const PanelModel& m) -> std::optional<double> {
        if (val_pairs.size() < 3) {
            return std::nullopt;
        }
        std::vector<double> scores;
        std::vector<double> human;
        for (const auto& [tokens, q] : val_pairs) {
            scores.push_back(panel_forward(m, tokens, 0));
            human.push_back(q);
        }
        const Correlation c = spearman(scores, human);
        if (c.degenerate) {
            return std::nullopt;
        }
        return c.rho;
    };

    OptimizerState optimizer;
    optimizer.config.lr = cfg.lr;
    optimizer.config.weight_decay = cfg.weight_decay;
    const std::set<std::string> trainable =
        expert_only ? detail::expert_param_names(pooled, 0) : detail::all_param_names(pooled);

    PanelModel model = pooled;
    PanelModel best = pooled;
    double best_rho = val_rho(pooled).value_or(-2.0);
    std::int64_t stale = 0;

    std::vector<std::vector<TrainInstance>> streams = {train_instances};
    MinibatchSampler sampler(streams, std::min<std::int64_t>(cfg.batch_size,
                                                             static_cast<std::int64_t>(train_instances.size())),
                             /*uniform=*/true, cfg.seed);
    std::int64_t step = 0;
    for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        sampler.start_epoch(epoch);
        double last_loss = 0.0;
        while (true) {
            std::optional<MiniBatch> batch = sampler.next();
            if (!batch.has_value()) {
                break;
            }
            step += 1;
            try {
                last_loss = train_step(model, *batch, trainable, LossKind::mse, optimizer);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::numeric) {
                    fail(ErrorKind::numeric, "step " + std::to_string(step) + ": " + e.what());
                }
                throw;
            }
        }
        HistoryEntry entry;
        entry.step = epoch;
        entry.train_loss = last_loss;
        entry.domain = 0;
        const std::optional<double> rho = val_rho(model);
        if (rho.has_value()) {
            entry.evaluated = true;
            entry.mean_accuracy = *rho;
            if (*rho > best_rho) {
                best_rho = *rho;
                best = model;
                result.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
            }
        }
        result.history.push_back(std::move(entry));
        if (rho.has_value() && stale >= cfg.patience) {
            break;
        }
    }

    result.model = val_pairs.size() >= 3 && best_rho > -2.0 ? std::move(best) : std::move(model);
    result.rho_after = full_rho(result.model);
    result.sampled = sample_count;
    return result;
}

}  // namespace poe
