#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poe/common.hpp"
#include "poe/data.hpp"
#include "poe/rng.hpp"
#include "poe/text.hpp"

namespace poe {

inline const std::array<const char*, 50>& stopwords() {
    static const std::array<const char*, 50> words = {
        "a",   "about", "after", "all",   "an",   "and",   "any", "are", "as",  "at",
        "be",  "been",  "but",   "by",    "can",  "could", "did", "do",  "for", "from",
        "had", "has",   "have",  "he",    "her",  "his",   "i",   "if",  "in",  "is",
        "it",  "its",   "me",    "my",    "no",   "not",   "of",  "on",  "or",  "she",
        "so",  "that",  "the",   "their", "them", "they",  "this", "to", "was", "you",
    };
    return words;
}

inline bool is_stopword(const std::string& token) {
    for (const char* w : stopwords()) {
        if (token == w) {
            return true;
        }
    }
    return false;
}

inline bool is_content_token(const std::string& token) {
    if (is_stopword(token)) {
        return false;
    }
    for (const std::string& special : special_tokens()) {
        if (token == special) {
            return false;
        }
    }
    return true;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

// Positives: every utterance from the second onward is a response, its
// context the up-to-4 preceding utterances. Windows never cross dialogues.
inline std::vector<ContextResponsePair> extract_pairs(const Dialogue& dialogue) {
    dialogue.validate();
    std::vector<ContextResponsePair> pairs;
    for (std::size_t t = 1; t < dialogue.utterances.size(); ++t) {
        ContextResponsePair pair;
        pair.domain = dialogue.domain;
        const std::size_t begin = t >= 4 ? t - 4 : 0;
        pair.context.assign(dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(begin),
                            dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(t));
        pair.response = dialogue.utterances[t];
        pair.provenance = Provenance::original;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

enum class PerturbMode { drop, shuffle, repeat };

inline bool all_tokens_identical(const std::vector<std::string>& tokens) {
    for (const std::string& t : tokens) {
        if (t != tokens.front()) {
            return false;
        }
    }
    return true;
}

// Syntactic negatives. Output always differs from the input text.
inline std::string perturb_syntactic(const std::string& response, PerturbMode mode, Rng& rng) {
    std::vector<std::string> tokens = tokenize(response);
    const std::size_t n = tokens.size();
    require(n >= 2, ErrorKind::data, "perturb: response needs at least 2 tokens");

    switch (mode) {
        case PerturbMode::drop: {
            // remove k tokens, 1 <= k <= floor(n/2)
            const std::int64_t k = rng.range(1, static_cast<std::int64_t>(n / 2));
            std::vector<std::size_t> doomed = rng.sample_indices(n, static_cast<std::size_t>(k));
            std::sort(doomed.begin(), doomed.end());
            std::vector<std::string> kept;
            std::size_t d = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d < doomed.size() && doomed[d] == i) {
                    ++d;
                } else {
                    kept.push_back(tokens[i]);
                }
            }
            return join_tokens(kept);
        }
        case PerturbMode::shuffle: {
            require(!all_tokens_identical(tokens), ErrorKind::data,
                    "perturb: shuffle has no distinct permutation for identical tokens");
            std::vector<std::string> shuffled = tokens;
            do {
                rng.shuffle(shuffled);
            } while (shuffled == tokens);
            return join_tokens(shuffled);
        }
        case PerturbMode::repeat: {
            // duplicate k tokens in place, 1 <= k <= max(1, floor(n/2))
            const std::int64_t k = rng.range(1, std::max<std::int64_t>(1, static_cast<std::int64_t>(n / 2)));
            std::vector<std::size_t> chosen = rng.sample_indices(n, static_cast<std::size_t>(k));
            std::sort(chosen.begin(), chosen.end());
            std::vector<std::string> out;
            std::size_t c = 0;
            for (std::size_t i = 0; i < n; ++i) {
                out.push_back(tokens[i]);
                if (c < chosen.size() && chosen[c] == i) {
                    out.push_back(tokens[i]);
                    ++c;
                }
            }
            return join_tokens(out);
        }
    }
    fail(ErrorKind::usage, "perturb: bad mode");
}

// Utterance drawn from some other dialogue, verbatim.
inline std::string sample_random_negative(const std::vector<Dialogue>& corpus,
                                          std::size_t source_dialogue,
                                          Rng& rng) {
    require(corpus.size() >= 2, ErrorKind::data, "random negative: corpus needs at least 2 dialogues");
    require(source_dialogue < corpus.size(), ErrorKind::usage, "random negative: bad source index");
    std::size_t other = static_cast<std::size_t>(rng.index(corpus.size() - 1));
    if (other >= source_dialogue) {
        ++other;
    }
    const Dialogue& donor = corpus[other];
    return donor.utterances[static_cast<std::size_t>(rng.index(donor.utterances.size()))];
}

// Replace up to 15% of response tokens with content tokens drawn from a
// foreign context. Length preserved.
inline std::string mask_and_fill(const std::string& response,
                                 const std::vector<std::string>& donor_context,
                                 Rng& rng) {
    std::vector<std::string> tokens = tokenize(response);
    const std::size_t n = tokens.size();
    require(n >= 2, ErrorKind::data, "mask_and_fill: response needs at least 2 tokens");

    std::vector<std::string> donors;
    for (const std::string& utterance : donor_context) {
        for (const std::string& token : tokenize(utterance)) {
            if (is_content_token(token)) {
                donors.push_back(token);
            }
        }
    }
    require(!donors.empty(), ErrorKind::data, "mask_and_fill: donor context has no content tokens");

    const std::int64_t cap = std::max<std::int64_t>(1, static_cast<std::int64_t>(0.15 * static_cast<double>(n)));
    const std::int64_t k = rng.range(1, cap);
    std::vector<std::size_t> positions = rng.sample_indices(n, static_cast<std::size_t>(k));
    std::sort(positions.begin(), positions.end());
    for (std::size_t pos : positions) {
        tokens[pos] = donors[static_cast<std::size_t>(rng.index(donors.size()))];
    }
    return join_tokens(tokens);
}

// Echo attack: a context utterance, syntactically perturbed. Falls back from
// shuffle to repeat when every token is identical.
inline std::string adversarial_from_context(const std::vector<std::string>& context, Rng& rng) {
    require(!context.empty(), ErrorKind::data, "adversarial: empty context");
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (tokenize(context[i]).size() >= 2) {
            eligible.push_back(i);
        }
    }
    require(!eligible.empty(), ErrorKind::data, "adversarial: every context utterance is single-token");
    const std::string& seed = context[eligible[static_cast<std::size_t>(rng.index(eligible.size()))]];
    PerturbMode mode = static_cast<PerturbMode>(rng.index(3));
    if (mode == PerturbMode::shuffle && all_tokens_identical(tokenize(seed))) {
        mode = PerturbMode::repeat;
    }
    return perturb_syntactic(seed, mode, rng);
}

// Confidence of appropriateness in [0,1]; must be deterministic given seed.
using TeacherScorer = std::function<double(const ContextResponsePair&)>;

// Hook for external positive generators (paraphrase, strong system output).
// Returning nullopt skips the pair. The shipped no-op echoes the original.
using PositiveResponseProvider = std::function<std::optional<std::string>(const ContextResponsePair&)>;

inline PositiveResponseProvider noop_provider() {
    return [](const ContextResponsePair& pair) { return std::optional<std::string>(pair.response); };
}

inline std::uint64_t pair_fingerprint(const ContextResponsePair& pair) {
    std::uint64_t h = fnv1a(pair.domain);
    for (const std::string& u : pair.context) {
        h = fnv1a(u, h);
        h = fnv1a("\x1f", h);
    }
    h = fnv1a("\x1e", h);
    h = fnv1a(pair.response, h);
    return fnv1a(provenance_name(pair.provenance), h);
}

// Stand-in for a learned appropriateness classifier: trusts provenance,
// with seeded per-pair confidence jitter and a slice of low-confidence
// outputs for the gate to drop. Per-pair hashing keeps it order-free.
inline TeacherScorer provenance_teacher(std::uint64_t seed, double unsure_rate = 0.15) {
    return [seed, unsure_rate](const ContextResponsePair& pair) {
        Rng rng(mix_seed(seed, pair_fingerprint(pair)));
        const bool positive =
            pair.provenance == Provenance::original || pair.provenance == Provenance::provider;
        if (rng.uniform01() < unsure_rate) {
            return 0.3 + 0.4 * rng.uniform01();
        }
        const double conf = 0.9 + 0.1 * rng.uniform01();
        return positive ? conf : 1.0 - conf;
    };
}

// Content-overlap heuristic teacher: fraction of response content tokens
// that also appear in the context, squashed to a confidence.
inline TeacherScorer overlap_teacher() {
    return [](const ContextResponsePair& pair) {
        std::vector<std::string> context_tokens;
        for (const std::string& u : pair.context) {
            for (const std::string& t : tokenize(u)) {
                if (is_content_token(t)) {
                    context_tokens.push_back(t);
                }
            }
        }
        std::size_t content = 0;
        std::size_t hits = 0;
        for (const std::string& t : tokenize(pair.response)) {
            if (!is_content_token(t)) {
                continue;
            }
            ++content;
            if (std::count(context_tokens.begin(), context_tokens.end(), t) > 0) {
                ++hits;
            }
        }
        const double overlap = content == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(content);
        return 1.0 / (1.0 + std::exp(-12.0 * (overlap - 0.25)));
    };
}

// Keep iff max(conf, 1-conf) >= tau, label by the 0.5 line, then uniformly
// downsample the majority class so both classes end up exactly equal.
inline DomainDataset pseudo_label_gate(std::vector<ContextResponsePair> candidates,
                                       const TeacherScorer& teacher,
                                       double tau,
                                       Rng& rng) {
    require(tau > 0.5 && tau <= 1.0, ErrorKind::usage, "gate: tau must lie in (0.5, 1]");
    require(!candidates.empty(), ErrorKind::data, "gate: no candidates");
    const std::string domain = candidates.front().domain;
    for (const ContextResponsePair& pair : candidates) {
        require(pair.domain == domain, ErrorKind::data, "gate: candidates span multiple domains");
    }

    std::vector<ContextResponsePair> kept;
    for (ContextResponsePair& pair : candidates) {
        const double conf = teacher(pair);
        require(conf >= 0.0 && conf <= 1.0, ErrorKind::data, "gate: teacher confidence outside [0,1]");
        if (std::max(conf, 1.0 - conf) < tau) {
            continue;
        }
        pair.confidence = conf;
        pair.label = conf >= 0.5 ? 1 : 0;
        kept.push_back(std::move(pair));
    }

    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        (*kept[i].label == 1 ? pos : neg).push_back(i);
    }
    require(!pos.empty() && !neg.empty(), ErrorKind::data,
            "gate: class empty after gating (positives " + std::to_string(pos.size()) +
                ", negatives " + std::to_string(neg.size()) + ")");

    std::vector<std::size_t>& majority = pos.size() >= neg.size() ? pos : neg;
    const std::size_t target = std::min(pos.size(), neg.size());
    if (majority.size() > target) {
        std::vector<std::size_t> picked_slots = rng.sample_indices(majority.size(), target);
        std::sort(picked_slots.begin(), picked_slots.end());
        std::vector<std::size_t> trimmed;
        for (std::size_t slot : picked_slots) {
            trimmed.push_back(majority[slot]);
        }
        majority = std::move(trimmed);
    }

    std::vector<std::size_t> chosen;
    chosen.insert(chosen.end(), pos.begin(), pos.end());
    chosen.insert(chosen.end(), neg.begin(), neg.end());
    std::sort(chosen.begin(), chosen.end());

    DomainDataset dataset;
    dataset.domain = domain;
    for (std::size_t i : chosen) {
        dataset.pairs.push_back(std::move(kept[i]));
    }
    return dataset;
}

struct ForgeConfig {
    double tau = 0.9;
    std::uint64_t seed = 0;
    bool use_provider = true;
    bool use_word_drop = true;
    bool use_word_shuffle = true;
    bool use_word_repeat = true;
    bool use_random_utterance = true;
    bool use_mask_and_fill = true;
    bool use_adversarial_context = true;
};

// Full pipeline for one domain: extract positives, augment, gate, balance.
// Augmenters that cannot apply to a given pair are skipped.
inline DomainDataset forge_domain(const std::vector<Dialogue>& dialogues,
                                  const ForgeConfig& config,
                                  const TeacherScorer& teacher,
                                  const PositiveResponseProvider& provider) {
    require(!dialogues.empty(), ErrorKind::data, "forge: no dialogues");
    const std::string domain = dialogues.front().domain;
    for (const Dialogue& d : dialogues) {
        require(d.domain == domain, ErrorKind::data, "forge: dialogues span multiple domains");
    }
    Rng rng(mix_seed(config.seed, fnv1a(domain)));

    std::vector<ContextResponsePair> candidates;
    auto add_negative = [&](const ContextResponsePair& base, std::string response, Provenance provenance) {
        ContextResponsePair neg = base;
        neg.response = std::move(response);
        neg.provenance = provenance;
        neg.label.reset();
        neg.confidence.reset();
        candidates.push_back(std::move(neg));
    };

    for (std::size_t di = 0; di < dialogues.size(); ++di) {
        for (ContextResponsePair& pair : extract_pairs(dialogues[di])) {
            const std::size_t response_tokens = tokenize(pair.response).size();
            candidates.push_back(pair);

            if (config.use_provider && provider) {
                if (std::optional<std::string> alt = provider(pair)) {
                    ContextResponsePair extra = pair;
                    extra.response = std::move(*alt);
                    extra.provenance = Provenance::provider;
                    candidates.push_back(std::move(extra));
                }
            }
            if (response_tokens >= 2) {
                if (config.use_word_drop) {
                    add_negative(pair, perturb_syntactic(pair.response, PerturbMode::drop, rng),
                                 Provenance::word_drop);
                }
                if (config.use_word_shuffle && !all_tokens_identical(tokenize(pair.response))) {
                    add_negative(pair, perturb_syntactic(pair.response, PerturbMode::shuffle, rng),
                                 Provenance::word_shuffle);
                }
                if (config.use_word_repeat) {
                    add_negative(pair, perturb_syntactic(pair.response, PerturbMode::repeat, rng),
                                 Provenance::word_repeat);
                }
            }
            if (config.use_random_utterance && dialogues.size() >= 2) {
                add_negative(pair, sample_random_negative(dialogues, di, rng), Provenance::random_utterance);
            }
            if (config.use_mask_and_fill && response_tokens >= 2 && dialogues.size() >= 2) {
                std::size_t donor = static_cast<std::size_t>(rng.index(dialogues.size() - 1));
                if (donor >= di) {
                    ++donor;
                }
                bool donor_has_content = false;
                for (const std::string& u : dialogues[donor].utterances) {
                    for (const std::string& t : tokenize(u)) {
                        donor_has_content = donor_has_content || is_content_token(t);
                    }
                }
                if (donor_has_content) {
                    add_negative(pair, mask_and_fill(pair.response, dialogues[donor].utterances, rng),
                                 Provenance::mask_and_fill);
                }
            }
            if (config.use_adversarial_context) {
                bool any_eligible = false;
                for (const std::string& u : pair.context) {
                    any_eligible = any_eligible || tokenize(u).size() >= 2;
                }
                if (any_eligible) {
                    add_negative(pair, adversarial_from_context(pair.context, rng),
                                 Provenance::adversarial_context);
                }
            }
        }
    }
    return pseudo_label_gate(std::move(candidates), teacher, config.tau, rng);
}

// Group dialogues by domain (first-appearance order) and forge each.
inline std::vector<DomainDataset> forge_datasets(const std::vector<Dialogue>& dialogues,
                                                 const ForgeConfig& config,
                                                 const TeacherScorer& teacher,
                                                 const PositiveResponseProvider& provider) {
    std::vector<std::string> order;
    for (const Dialogue& d : dialogues) {
        if (std::find(order.begin(), order.end(), d.domain) == order.end()) {
            order.push_back(d.domain);
        }
    }
    std::vector<DomainDataset> datasets;
    for (const std::string& domain : order) {
        std::vector<Dialogue> bucket;
        for (const Dialogue& d : dialogues) {
            if (d.domain == domain) {
                bucket.push_back(d);
            }
        }
        datasets.push_back(forge_domain(bucket, config, teacher, provider));
    }
    return datasets;
}

}  // namespace poe
