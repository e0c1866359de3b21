#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poe/common.hpp"

namespace poe {

enum class Provenance {
    original,
    word_drop,
    word_shuffle,
    word_repeat,
    random_utterance,
    mask_and_fill,
    adversarial_context,
    provider,
};

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::original: return "original";
        case Provenance::word_drop: return "word_drop";
        case Provenance::word_shuffle: return "word_shuffle";
        case Provenance::word_repeat: return "word_repeat";
        case Provenance::random_utterance: return "random_utterance";
        case Provenance::mask_and_fill: return "mask_and_fill";
        case Provenance::adversarial_context: return "adversarial_context";
        case Provenance::provider: return "provider";
    }
    return "?";
}

inline Provenance parse_provenance(const std::string& s) {
    for (Provenance p : {Provenance::original, Provenance::word_drop, Provenance::word_shuffle,
                         Provenance::word_repeat, Provenance::random_utterance, Provenance::mask_and_fill,
                         Provenance::adversarial_context, Provenance::provider}) {
        if (s == provenance_name(p)) {
            return p;
        }
    }
    fail(ErrorKind::data, "unknown provenance '" + s + "'");
}

struct ContextResponsePair {
    std::string domain;
    std::vector<std::string> context;  // 1 to 4 utterances, oldest first
    std::string response;
    std::optional<int> label;          // 0/1 once gated
    std::optional<double> confidence;  // teacher confidence in [0,1]
    Provenance provenance = Provenance::original;

    void validate() const {
        require(!context.empty() && context.size() <= 4, ErrorKind::data,
                "pair: context must hold 1 to 4 utterances");
        require(!response.empty(), ErrorKind::data, "pair: empty response");
        if (label.has_value()) {
            require(*label == 0 || *label == 1, ErrorKind::data, "pair: label must be 0 or 1");
        }
        if (confidence.has_value()) {
            require(*confidence >= 0.0 && *confidence <= 1.0, ErrorKind::data,
                    "pair: confidence outside [0,1]");
        }
    }
};

struct Dialogue {
    std::string domain;
    std::vector<std::string> utterances;

    void validate() const {
        require(utterances.size() >= 2, ErrorKind::data, "dialogue: needs at least 2 utterances");
        for (const std::string& u : utterances) {
            require(!u.empty(), ErrorKind::data, "dialogue: empty utterance");
        }
    }
};

struct DomainDataset {
    std::string domain;
    std::vector<ContextResponsePair> pairs;
};

struct EvaluationRecord {
    ContextResponsePair pair;
    double human_score = 0.0;
};

struct SelectionTask {
    std::vector<std::string> context;
    std::vector<std::string> candidates;  // exactly 20
    int positive_index = 0;

    void validate() const {
        require(!context.empty(), ErrorKind::data, "selection task: empty context");
        require(candidates.size() == 20, ErrorKind::data, "selection task: need exactly 20 candidates");
        require(positive_index >= 0 && positive_index < 20, ErrorKind::data,
                "selection task: positive index out of range");
    }
};

}  // namespace poe
