#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "poe/common.hpp"

namespace poe {

// Special token ids are pinned below every corpus token id.
inline constexpr std::int64_t kPadId = 0;
inline constexpr std::int64_t kUnkId = 1;
inline constexpr std::int64_t kBosId = 2;   // "<s>"
inline constexpr std::int64_t kSepId = 3;   // "</s>"
inline constexpr std::int64_t kMaskId = 4;  // "<mask>"
inline constexpr std::int64_t kTurnId = 5;  // "<turn>"
inline constexpr std::int64_t kNumSpecials = 6;

inline const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> specials = {
        "<pad>", "<unk>", "<s>", "</s>", "<mask>", "<turn>",
    };
    return specials;
}

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

class Vocab {
public:
    Vocab() : id_to_token_(special_tokens()) {
        for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
            token_to_id_.emplace(id_to_token_[i], static_cast<std::int64_t>(i));
        }
    }

    // Rebuild from an id-ordered token list, e.g. out of a checkpoint.
    static Vocab from_tokens(const std::vector<std::string>& id_to_token) {
        Vocab v;
        require(id_to_token.size() >= static_cast<std::size_t>(kNumSpecials), ErrorKind::checkpoint,
                "vocab: token table too short");
        for (std::int64_t i = 0; i < kNumSpecials; ++i) {
            require(id_to_token[static_cast<std::size_t>(i)] == special_tokens()[static_cast<std::size_t>(i)],
                    ErrorKind::checkpoint, "vocab: special token table mismatch");
        }
        v.id_to_token_ = id_to_token;
        v.token_to_id_.clear();
        for (std::size_t i = 0; i < id_to_token.size(); ++i) {
            const bool inserted = v.token_to_id_.emplace(id_to_token[i], static_cast<std::int64_t>(i)).second;
            require(inserted, ErrorKind::checkpoint, "vocab: duplicate token '" + id_to_token[i] + "'");
        }
        return v;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(id_to_token_.size()); }

    std::int64_t id(std::string_view token) const {
        auto it = token_to_id_.find(std::string(token));
        return it == token_to_id_.end() ? kUnkId : it->second;
    }

    bool contains(std::string_view token) const {
        return token_to_id_.find(std::string(token)) != token_to_id_.end();
    }

    const std::string& token(std::int64_t id) const {
        require(id >= 0 && id < size(), ErrorKind::usage, "vocab: id out of range");
        return id_to_token_[static_cast<std::size_t>(id)];
    }

    const std::vector<std::string>& tokens() const { return id_to_token_; }

    void add(const std::string& token) {
        if (token_to_id_.emplace(token, size()).second) {
            id_to_token_.push_back(token);
        }
    }

private:
    std::vector<std::string> id_to_token_;
    std::map<std::string, std::int64_t> token_to_id_;
};

// Corpus tokens with count >= min_count, ids assigned by frequency
// descending then lexicographic, always after the specials.
inline Vocab build_vocab(const std::vector<std::string>& texts, int min_count = 1) {
    std::map<std::string, std::int64_t> counts;
    for (const std::string& text : texts) {
        for (const std::string& token : tokenize(text)) {
            counts[token] += 1;
        }
    }
    require(!counts.empty(), ErrorKind::data, "build_vocab: empty token stream");
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (const auto& [token, count] : counts) {
        if (count >= min_count && !std::count(special_tokens().begin(), special_tokens().end(), token)) {
            kept.emplace_back(token, count);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    Vocab vocab;
    for (const auto& [token, count] : kept) {
        vocab.add(token);
    }
    return vocab;
}

struct TokenSequence {
    std::vector<std::int64_t> ids;
    std::int64_t attention_length = 0;  // non-pad prefix length
};

// Layout: <s> u_1 <turn> u_2 ... <turn> u_k </s> response </s> <pad>...
// Over-long input drops oldest context tokens first, then trailing response
// tokens, always keeping at least one of each.
inline TokenSequence encode_pair(const Vocab& vocab,
                                 const std::vector<std::string>& context,
                                 const std::string& response,
                                 std::int64_t max_len) {
    require(!context.empty(), ErrorKind::data, "encode_pair: empty context");
    require(max_len >= 5, ErrorKind::usage,
            "encode_pair: max_len must fit <s>, context, </s>, response, </s>");

    std::vector<std::int64_t> ctx_ids;
    bool first = true;
    for (const std::string& utterance : context) {
        const std::vector<std::string> tokens = tokenize(utterance);
        if (tokens.empty()) {
            continue;
        }
        if (!first) {
            ctx_ids.push_back(kTurnId);
        }
        first = false;
        for (const std::string& token : tokens) {
            ctx_ids.push_back(vocab.id(token));
        }
    }
    require(!ctx_ids.empty(), ErrorKind::data, "encode_pair: context has no tokens");

    std::vector<std::int64_t> resp_ids;
    for (const std::string& token : tokenize(response)) {
        resp_ids.push_back(vocab.id(token));
    }
    require(!resp_ids.empty(), ErrorKind::data, "encode_pair: response has no tokens");

    const std::int64_t budget = max_len - 3;
    std::int64_t ctx_keep = static_cast<std::int64_t>(ctx_ids.size());
    std::int64_t resp_keep = static_cast<std::int64_t>(resp_ids.size());
    if (ctx_keep + resp_keep > budget) {
        ctx_keep = std::min(ctx_keep, std::max<std::int64_t>(1, budget - resp_keep));
        resp_keep = std::min(resp_keep, budget - ctx_keep);
    }

    TokenSequence seq;
    seq.ids.reserve(static_cast<std::size_t>(max_len));
    seq.ids.push_back(kBosId);
    for (std::size_t i = ctx_ids.size() - static_cast<std::size_t>(ctx_keep); i < ctx_ids.size(); ++i) {
        seq.ids.push_back(ctx_ids[i]);
    }
    seq.ids.push_back(kSepId);
    for (std::int64_t i = 0; i < resp_keep; ++i) {
        seq.ids.push_back(resp_ids[static_cast<std::size_t>(i)]);
    }
    seq.ids.push_back(kSepId);
    seq.attention_length = static_cast<std::int64_t>(seq.ids.size());
    while (static_cast<std::int64_t>(seq.ids.size()) < max_len) {
        seq.ids.push_back(kPadId);
    }
    return seq;
}

inline std::vector<std::string> decode(const Vocab& vocab, const std::vector<std::int64_t>& ids) {
    std::vector<std::string> tokens;
    for (std::int64_t id : ids) {
        if (id != kPadId) {
            tokens.push_back(vocab.token(id));
        }
    }
    return tokens;
}

}  // namespace poe
