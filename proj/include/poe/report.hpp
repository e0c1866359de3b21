#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poe/meta_eval.hpp"
#include "poe/trainer.hpp"

namespace poe {

inline nlohmann::json score_report_json(const ScoreReport& report) {
    nlohmann::json j;
    j["datasets"] = nlohmann::json::array();
    for (const DatasetScore& d : report.datasets) {
        nlohmann::json entry;
        entry["name"] = d.name;
        entry["domain"] = d.domain;
        entry["in_domain"] = d.in_domain;
        entry["rho"] = d.rho;
        entry["degenerate"] = d.degenerate;
        entry["p_value"] = d.p_value;
        entry["samples"] = d.samples;
        j["datasets"].push_back(std::move(entry));
    }
    j["domain_means"] = nlohmann::json::array();
    for (const auto& [domain, mean] : report.domain_means) {
        j["domain_means"].push_back({{"domain", domain}, {"mean_rho", mean}});
    }
    j["overall_mean_rho"] = report.overall_mean;
    return j;
}

inline std::string score_report_table(const ScoreReport& report) {
    std::size_t name_width = 7;
    std::size_t domain_width = 6;
    for (const DatasetScore& d : report.datasets) {
        name_width = std::max(name_width, d.name.size());
        domain_width = std::max(domain_width, d.domain.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "dataset"
        << std::setw(static_cast<int>(domain_width + 2)) << "domain"
        << std::setw(6) << "mode" << std::right << std::setw(9) << "rho"
        << std::setw(11) << "p" << std::setw(8) << "n" << "\n";
    out << std::string(name_width + domain_width + 36, '-') << "\n";
    for (const DatasetScore& d : report.datasets) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << d.name
            << std::setw(static_cast<int>(domain_width + 2)) << d.domain
            << std::setw(6) << (d.in_domain ? "hint" : "late");
        if (d.degenerate) {
            out << std::right << std::setw(9) << "n/a" << std::setw(11) << "n/a";
        } else {
            out << std::right << std::setw(9) << std::fixed << std::setprecision(4) << d.rho
                << std::setw(11) << std::scientific << std::setprecision(2) << d.p_value
                << std::defaultfloat;
        }
        out << std::setw(8) << d.samples << "\n";
    }
    out << std::string(name_width + domain_width + 36, '-') << "\n";
    for (const auto& [domain, mean] : report.domain_means) {
        out << std::left << std::setw(static_cast<int>(name_width + domain_width + 10)) << ("mean (" + domain + ")")
            << std::right << std::setw(9) << std::fixed << std::setprecision(4) << mean << "\n";
    }
    out << std::left << std::setw(static_cast<int>(name_width + domain_width + 10)) << "mean (overall)"
        << std::right << std::setw(9) << std::fixed << std::setprecision(4) << report.overall_mean << "\n";
    return out.str();
}

inline nlohmann::json history_entry_json(const HistoryEntry& entry) {
    nlohmann::json j;
    j["step"] = entry.step;
    j["loss"] = entry.train_loss;
    if (entry.domain >= 0) {
        j["domain"] = entry.domain;
    }
    if (entry.evaluated) {
        j["val_accuracy"] = entry.domain_accuracy;
        j["mean_val_accuracy"] = entry.mean_accuracy;
    }
    return j;
}

inline std::string history_jsonl(const std::vector<HistoryEntry>& history) {
    std::string out;
    for (const HistoryEntry& entry : history) {
        out += history_entry_json(entry).dump();
        out += "\n";
    }
    return out;
}

}  // namespace poe
