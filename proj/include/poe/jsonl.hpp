#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poe/common.hpp"
#include "poe/data.hpp"

namespace poe {

namespace detail {

inline nlohmann::json parse_line(const std::string& line, std::size_t line_no, const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    require(!j.is_discarded() && j.is_object(), ErrorKind::data,
            path + ":" + std::to_string(line_no) + ": not a JSON object");
    return j;
}

inline void reject_unknown_fields(const nlohmann::json& j,
                                  const std::set<std::string>& allowed,
                                  std::size_t line_no,
                                  const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        require(allowed.count(key) != 0, ErrorKind::data,
                path + ":" + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
}

template <typename F>
void for_each_line(const std::string& path, F&& fn) {
    std::ifstream file(path);
    require(file.good(), ErrorKind::data, "cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        fn(parse_line(line, line_no, path), line_no);
    }
}

inline std::vector<std::string> string_list(const nlohmann::json& j,
                                            const char* field,
                                            std::size_t line_no,
                                            const std::string& path) {
    const std::string at = path + ":" + std::to_string(line_no);
    require(j.contains(field) && j[field].is_array(), ErrorKind::data,
            at + ": '" + std::string(field) + "' must be a string array");
    std::vector<std::string> out;
    for (const auto& item : j[field]) {
        require(item.is_string(), ErrorKind::data, at + ": '" + std::string(field) + "' must hold strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace detail

inline ContextResponsePair pair_from_json(const nlohmann::json& j,
                                          std::size_t line_no,
                                          const std::string& path,
                                          bool strict = true) {
    const std::string at = path + ":" + std::to_string(line_no);
    if (strict) {
        detail::reject_unknown_fields(
            j, {"domain", "context", "response", "label", "confidence", "provenance"}, line_no, path);
    }
    ContextResponsePair pair;
    require(j.contains("domain") && j["domain"].is_string(), ErrorKind::data, at + ": missing string 'domain'");
    pair.domain = j["domain"].get<std::string>();
    pair.context = detail::string_list(j, "context", line_no, path);
    require(j.contains("response") && j["response"].is_string(), ErrorKind::data,
            at + ": missing string 'response'");
    pair.response = j["response"].get<std::string>();
    if (j.contains("label")) {
        require(j["label"].is_number_integer(), ErrorKind::data, at + ": 'label' must be 0 or 1");
        pair.label = j["label"].get<int>();
    }
    if (j.contains("confidence")) {
        require(j["confidence"].is_number(), ErrorKind::data, at + ": 'confidence' must be a number");
        pair.confidence = j["confidence"].get<double>();
    }
    if (j.contains("provenance")) {
        require(j["provenance"].is_string(), ErrorKind::data, at + ": 'provenance' must be a string");
        pair.provenance = parse_provenance(j["provenance"].get<std::string>());
    }
    try {
        pair.validate();
    } catch (const Error& e) {
        fail(ErrorKind::data, at + ": " + e.what());
    }
    return pair;
}

inline nlohmann::json pair_to_json(const ContextResponsePair& pair) {
    nlohmann::json j;
    j["domain"] = pair.domain;
    j["context"] = pair.context;
    j["response"] = pair.response;
    if (pair.label.has_value()) {
        j["label"] = *pair.label;
    }
    if (pair.confidence.has_value()) {
        j["confidence"] = *pair.confidence;
    }
    j["provenance"] = provenance_name(pair.provenance);
    return j;
}

inline std::vector<ContextResponsePair> read_pairs(const std::string& path, bool strict = true) {
    std::vector<ContextResponsePair> pairs;
    detail::for_each_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        pairs.push_back(pair_from_json(j, line_no, path, strict));
    });
    return pairs;
}

inline void write_pairs(const std::vector<ContextResponsePair>& pairs, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    require(file.good(), ErrorKind::data, "cannot open '" + path + "' for writing");
    for (const ContextResponsePair& pair : pairs) {
        file << pair_to_json(pair).dump() << "\n";
    }
    require(file.good(), ErrorKind::data, "write failed for '" + path + "'");
}

// Pairs grouped into per-domain datasets, domain order = first appearance.
inline std::vector<DomainDataset> group_by_domain(const std::vector<ContextResponsePair>& pairs) {
    std::vector<DomainDataset> datasets;
    for (const ContextResponsePair& pair : pairs) {
        DomainDataset* slot = nullptr;
        for (DomainDataset& d : datasets) {
            if (d.domain == pair.domain) {
                slot = &d;
                break;
            }
        }
        if (slot == nullptr) {
            datasets.push_back(DomainDataset{pair.domain, {}});
            slot = &datasets.back();
        }
        slot->pairs.push_back(pair);
    }
    return datasets;
}

inline std::vector<Dialogue> read_dialogues(const std::string& path, bool strict = true) {
    std::vector<Dialogue> dialogues;
    detail::for_each_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        const std::string at = path + ":" + std::to_string(line_no);
        if (strict) {
            detail::reject_unknown_fields(j, {"domain", "utterances"}, line_no, path);
        }
        Dialogue d;
        require(j.contains("domain") && j["domain"].is_string(), ErrorKind::data,
                at + ": missing string 'domain'");
        d.domain = j["domain"].get<std::string>();
        d.utterances = detail::string_list(j, "utterances", line_no, path);
        try {
            d.validate();
        } catch (const Error& e) {
            fail(ErrorKind::data, at + ": " + e.what());
        }
        dialogues.push_back(std::move(d));
    });
    require(!dialogues.empty(), ErrorKind::data, "no dialogues in '" + path + "'");
    return dialogues;
}

inline void write_dialogues(const std::vector<Dialogue>& dialogues, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    require(file.good(), ErrorKind::data, "cannot open '" + path + "' for writing");
    for (const Dialogue& d : dialogues) {
        nlohmann::json j;
        j["domain"] = d.domain;
        j["utterances"] = d.utterances;
        file << j.dump() << "\n";
    }
    require(file.good(), ErrorKind::data, "write failed for '" + path + "'");
}

inline std::vector<EvaluationRecord> read_eval_records(const std::string& path, bool strict = true) {
    std::vector<EvaluationRecord> records;
    detail::for_each_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        const std::string at = path + ":" + std::to_string(line_no);
        if (strict) {
            detail::reject_unknown_fields(
                j, {"domain", "context", "response", "label", "confidence", "provenance", "human_score"},
                line_no, path);
        }
        EvaluationRecord record;
        record.pair = pair_from_json(j, line_no, path, /*strict=*/false);
        require(j.contains("human_score") && j["human_score"].is_number(), ErrorKind::data,
                at + ": missing numeric 'human_score'");
        record.human_score = j["human_score"].get<double>();
        require(std::isfinite(record.human_score), ErrorKind::data, at + ": non-finite human score");
        records.push_back(std::move(record));
    });
    require(!records.empty(), ErrorKind::data, "no records in '" + path + "'");
    return records;
}

inline void write_eval_records(const std::vector<EvaluationRecord>& records, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    require(file.good(), ErrorKind::data, "cannot open '" + path + "' for writing");
    for (const EvaluationRecord& record : records) {
        nlohmann::json j = pair_to_json(record.pair);
        j["human_score"] = record.human_score;
        file << j.dump() << "\n";
    }
    require(file.good(), ErrorKind::data, "write failed for '" + path + "'");
}

inline std::vector<SelectionTask> read_selection_tasks(const std::string& path, bool strict = true) {
    std::vector<SelectionTask> tasks;
    detail::for_each_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        const std::string at = path + ":" + std::to_string(line_no);
        if (strict) {
            detail::reject_unknown_fields(j, {"context", "candidates", "positive_index"}, line_no, path);
        }
        SelectionTask task;
        task.context = detail::string_list(j, "context", line_no, path);
        task.candidates = detail::string_list(j, "candidates", line_no, path);
        require(j.contains("positive_index") && j["positive_index"].is_number_integer(), ErrorKind::data,
                at + ": missing integer 'positive_index'");
        task.positive_index = j["positive_index"].get<int>();
        try {
            task.validate();
        } catch (const Error& e) {
            fail(ErrorKind::data, at + ": " + e.what());
        }
        tasks.push_back(std::move(task));
    });
    require(!tasks.empty(), ErrorKind::data, "no selection tasks in '" + path + "'");
    return tasks;
}

inline void write_selection_tasks(const std::vector<SelectionTask>& tasks, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    require(file.good(), ErrorKind::data, "cannot open '" + path + "' for writing");
    for (const SelectionTask& task : tasks) {
        nlohmann::json j;
        j["context"] = task.context;
        j["candidates"] = task.candidates;
        j["positive_index"] = task.positive_index;
        file << j.dump() << "\n";
    }
    require(file.good(), ErrorKind::data, "write failed for '" + path + "'");
}

}  // namespace poe
