// Command-line front end: forge, train, score, pool, eval, fewshot, select,
// new-adapter. Exit codes: 0 ok, 2 usage, 3 data, 4 checkpoint, 5 numeric.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poe/poe.hpp"

namespace {

using nlohmann::json;

std::uint64_t hash_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    poe::require(file.good(), poe::ErrorKind::data, "cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    return poe::fnv1a(bytes);
}

std::string dataset_name(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// Manifest: everything needed to reproduce the artifact, nothing volatile.
void write_manifest(const std::string& command,
                    std::uint64_t seed,
                    const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    if (outputs.empty()) {
        return;
    }
    json m;
    m["command"] = command;
    m["version"] = poe::kVersion;
    m["seed"] = seed;
    m["config"] = config;
    m["config_hash"] = poe::hex64(poe::fnv1a(config.dump()));
    m["inputs"] = json::object();
    for (const std::string& path : inputs) {
        m["inputs"][path] = poe::hex64(hash_file(path));
    }
    m["outputs"] = outputs;
    std::ofstream out(outputs.front() + ".manifest.json", std::ios::trunc);
    poe::require(out.good(), poe::ErrorKind::data, "cannot write manifest");
    out << m.dump(2) << "\n";
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_value) {
    if (seed_opt->count() > 0) {
        return seed_value;
    }
    if (const char* env = std::getenv("POE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            poe::fail(poe::ErrorKind::usage, "POE_SEED is not an integer");
        }
    }
    return seed_value;
}

struct PanelFlags {
    std::int64_t layers = 4;
    std::int64_t hidden = 64;
    std::int64_t heads = 4;
    std::int64_t ffn = 128;
    std::int64_t bottleneck = 16;
    std::int64_t max_len = 64;
    double init_range = 0.02;
    int min_count = 1;

    void attach(CLI::App* app) {
        app->add_option("--layers", layers, "encoder layer count");
        app->add_option("--hidden", hidden, "hidden size");
        app->add_option("--heads", heads, "attention heads");
        app->add_option("--ffn", ffn, "feed-forward size");
        app->add_option("--bottleneck", bottleneck, "adapter bottleneck size");
        app->add_option("--max-len", max_len, "maximum sequence length");
        app->add_option("--init-range", init_range, "uniform init half-range");
        app->add_option("--min-count", min_count, "vocab frequency cutoff");
    }

    poe::PanelConfig config() const {
        poe::PanelConfig c;
        c.layers = layers;
        c.hidden = hidden;
        c.heads = heads;
        c.ffn = ffn;
        c.bottleneck = bottleneck;
        c.max_len = max_len;
        c.init_range = init_range;
        return c;
    }

    json to_json() const {
        return json{{"layers", layers},   {"hidden", hidden},         {"heads", heads},
                    {"ffn", ffn},         {"bottleneck", bottleneck}, {"max_len", max_len},
                    {"init_range", init_range}, {"min_count", min_count}};
    }
};

struct TrainFlags {
    std::string preset = "toy";
    std::optional<std::int64_t> batch;
    std::optional<double> lr;
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> eval_every;
    std::optional<std::int64_t> patience;
    bool uniform_sampling = false;

    void attach(CLI::App* app) {
        app->add_option("--preset", preset, "toy or full scale defaults")
            ->check(CLI::IsMember({"toy", "full"}));
        app->add_option("--batch", batch, "batch size");
        app->add_option("--lr", lr, "learning rate");
        app->add_option("--epochs", epochs, "epoch cap");
        app->add_option("--eval-every", eval_every, "steps between validation checkpoints");
        app->add_option("--patience", patience, "non-improving checkpoints before stopping");
        app->add_flag("--uniform-sampling", uniform_sampling,
                      "sample one merged stream instead of per-domain quotas");
    }

    poe::TrainConfig config(poe::TrainConfig base, std::uint64_t seed) const {
        if (batch) {
            base.batch_size = *batch;
        }
        if (lr) {
            base.lr = *lr;
        }
        if (epochs) {
            base.max_epochs = *epochs;
        }
        if (eval_every) {
            base.eval_every = *eval_every;
        }
        if (patience) {
            base.patience = *patience;
        }
        base.uniform_sampling = uniform_sampling;
        base.seed = seed;
        return base;
    }

    json to_json(const poe::TrainConfig& c) const {
        return json{{"preset", preset},           {"batch_size", c.batch_size},
                    {"lr", c.lr},                 {"max_epochs", c.max_epochs},
                    {"eval_every", c.eval_every}, {"patience", c.patience},
                    {"uniform_sampling", c.uniform_sampling}};
    }
};

poe::PairScorer panel_scorer(const poe::PanelModel& model) {
    return [&model](const poe::ContextResponsePair& pair, std::optional<std::int64_t> hint) {
        return poe::score(model, pair.context, pair.response, hint).score;
    };
}

std::map<std::string, std::int64_t> domain_map_of(const poe::PanelModel& model) {
    std::map<std::string, std::int64_t> m;
    for (std::size_t i = 0; i < model.domain_names.size(); ++i) {
        m.emplace(model.domain_names[i], static_cast<std::int64_t>(i));
    }
    return m;
}

int run(int argc, char** argv) {
    CLI::App app{"panel-of-experts dialogue response scorer"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags take precedence");
    app.option_defaults()->always_capture_default();

    std::uint64_t seed = 0;
    CLI::Option* seed_opt = app.add_option("--seed", seed, "run seed (POE_SEED env as fallback)");

    // ---- forge ----
    auto* forge_cmd = app.add_subcommand("forge", "build a labeled pair dataset from dialogues");
    std::string forge_dialogues;
    std::string forge_out;
    double forge_tau = 0.9;
    std::string forge_teacher = "provenance";
    bool no_provider = false;
    forge_cmd->add_option("--dialogues", forge_dialogues, "dialogues JSONL")->required();
    forge_cmd->add_option("--out", forge_out, "output pairs JSONL")->required();
    forge_cmd->add_option("--tau", forge_tau, "teacher confidence gate");
    forge_cmd->add_option("--teacher", forge_teacher, "provenance or overlap")
        ->check(CLI::IsMember({"provenance", "overlap"}));
    forge_cmd->add_flag("--no-provider", no_provider, "skip the positive-response provider");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "multitask pretraining plus per-adapter finetuning");
    std::string train_data;
    std::string train_out;
    std::string train_history;
    double val_fraction = 0.2;
    bool skip_finetune = false;
    PanelFlags panel_flags;
    TrainFlags train_flags;
    train_cmd->add_option("--data", train_data, "labeled pairs JSONL")->required();
    train_cmd->add_option("--out", train_out, "output checkpoint")->required();
    train_cmd->add_option("--history", train_history, "write training history JSONL here");
    train_cmd->add_option("--val-fraction", val_fraction, "validation split per domain");
    train_cmd->add_flag("--skip-finetune", skip_finetune, "stop after the multitask stage");
    panel_flags.attach(train_cmd);
    train_flags.attach(train_cmd);

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "score context-response pairs");
    std::string score_ckpt;
    std::string score_pairs;
    std::string score_out;
    std::string score_domain;
    bool score_no_hint = false;
    score_cmd->add_option("--checkpoint", score_ckpt, "panel checkpoint")->required();
    score_cmd->add_option("--pairs", score_pairs, "pairs JSONL")->required();
    score_cmd->add_option("--out", score_out, "write score lines here instead of stdout");
    score_cmd->add_option("--domain", score_domain, "force this domain hint for every pair");
    score_cmd->add_flag("--no-hint", score_no_hint, "force late fusion for every pair");

    // ---- pool ----
    auto* pool_cmd = app.add_subcommand("pool", "collapse experts into a single pooled expert");
    std::string pool_ckpt;
    std::string pool_out;
    std::string pool_mode = "avg";
    pool_cmd->add_option("--checkpoint", pool_ckpt, "panel checkpoint")->required();
    pool_cmd->add_option("--out", pool_out, "pooled checkpoint")->required();
    pool_cmd->add_option("--mode", pool_mode, "avg, max, or min")
        ->check(CLI::IsMember({"avg", "max", "min"}));

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "meta-evaluate against human scores");
    std::string eval_ckpt;
    std::vector<std::string> eval_data;
    std::string eval_json_out;
    std::string eval_scorer = "panel";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "panel checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "evaluation JSONL (repeatable)")->required();
    eval_cmd->add_option("--json", eval_json_out, "write the JSON report here");
    eval_cmd->add_option("--scorer", eval_scorer, "panel, or oracle for a self-check")
        ->check(CLI::IsMember({"panel", "oracle"}));

    // ---- fewshot ----
    auto* fewshot_cmd = app.add_subcommand("fewshot", "K% regression transfer on a pooled model");
    std::string fewshot_ckpt;
    std::string fewshot_data;
    std::string fewshot_json_out;
    std::vector<double> fewshot_k = {10.0, 20.0, 30.0, 40.0};
    int fewshot_seeds = 10;
    bool fewshot_expert_only = false;
    std::string fewshot_preset = "toy";
    std::optional<std::int64_t> fewshot_epochs;
    std::optional<double> fewshot_lr;
    fewshot_cmd->add_option("--checkpoint", fewshot_ckpt, "pooled checkpoint")->required();
    fewshot_cmd->add_option("--data", fewshot_data, "evaluation JSONL with human scores")->required();
    fewshot_cmd->add_option("--json", fewshot_json_out, "write the JSON report here");
    fewshot_cmd->add_option("--k", fewshot_k, "K percentages to sweep");
    fewshot_cmd->add_option("--seeds", fewshot_seeds, "seed repetitions per K");
    fewshot_cmd->add_option("--preset", fewshot_preset, "toy or full scale defaults")
        ->check(CLI::IsMember({"toy", "full"}));
    fewshot_cmd->add_option("--epochs", fewshot_epochs, "epoch cap");
    fewshot_cmd->add_option("--lr", fewshot_lr, "learning rate");
    fewshot_cmd->add_flag("--expert-only", fewshot_expert_only, "finetune only the pooled expert");

    // ---- select ----
    auto* select_cmd = app.add_subcommand("select", "response selection, hits@1");
    std::string select_ckpt;
    std::string select_tasks;
    std::string select_domain;
    std::string select_scorer = "panel";
    select_cmd->add_option("--checkpoint", select_ckpt, "panel checkpoint");
    select_cmd->add_option("--tasks", select_tasks, "selection tasks JSONL")->required();
    select_cmd->add_option("--domain", select_domain, "domain hint for scoring");
    select_cmd->add_option("--scorer", select_scorer, "panel or random baseline")
        ->check(CLI::IsMember({"panel", "random"}));

    // ---- new-adapter ----
    auto* newad_cmd = app.add_subcommand("new-adapter", "train an extra expert on frozen encoder");
    std::string newad_ckpt;
    std::string newad_data;
    std::string newad_out;
    std::string newad_domain;
    double newad_val_fraction = 0.2;
    TrainFlags newad_flags;
    newad_cmd->add_option("--checkpoint", newad_ckpt, "panel checkpoint")->required();
    newad_cmd->add_option("--data", newad_data, "labeled task pairs JSONL")->required();
    newad_cmd->add_option("--out", newad_out, "output checkpoint")->required();
    newad_cmd->add_option("--domain", newad_domain, "name for the new domain")->required();
    newad_cmd->add_option("--val-fraction", newad_val_fraction, "validation split");
    newad_flags.attach(newad_cmd);

    // app-level --seed stays usable after the subcommand name
    for (CLI::App* sub : {forge_cmd, train_cmd, score_cmd, pool_cmd, eval_cmd, fewshot_cmd,
                          select_cmd, newad_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::uint64_t run_seed = resolve_seed(seed_opt, seed);

    if (*forge_cmd) {
        poe::ForgeConfig cfg;
        cfg.tau = forge_tau;
        cfg.seed = run_seed;
        cfg.use_provider = !no_provider;
        const poe::TeacherScorer teacher = forge_teacher == "provenance"
                                               ? poe::provenance_teacher(poe::mix_seed(run_seed, 0x7EAC))
                                               : poe::overlap_teacher();
        const auto dialogues = poe::read_dialogues(forge_dialogues);
        const auto datasets = poe::forge_datasets(dialogues, cfg, teacher, poe::noop_provider());
        std::vector<poe::ContextResponsePair> all;
        for (const auto& ds : datasets) {
            for (const auto& pair : ds.pairs) {
                all.push_back(pair);
            }
            std::cerr << ds.domain << ": " << ds.pairs.size() << " pairs\n";
        }
        poe::write_pairs(all, forge_out);
        write_manifest("forge", run_seed,
                       json{{"tau", forge_tau}, {"teacher", forge_teacher}, {"provider", !no_provider}},
                       {forge_dialogues}, {forge_out});
        return 0;
    }

    if (*train_cmd) {
        const auto pairs = poe::read_pairs(train_data);
        const auto datasets = poe::group_by_domain(pairs);
        std::vector<poe::DomainDataset> train_split;
        std::vector<poe::DomainDataset> val_split;
        std::vector<std::string> domain_names;
        std::vector<std::string> texts;
        for (const auto& ds : datasets) {
            auto [tr, va] = poe::split_dataset(ds, val_fraction, run_seed);
            for (const auto& pair : tr.pairs) {
                for (const auto& u : pair.context) {
                    texts.push_back(u);
                }
                texts.push_back(pair.response);
            }
            train_split.push_back(std::move(tr));
            val_split.push_back(std::move(va));
            domain_names.push_back(ds.domain);
        }
        const poe::Vocab vocab = poe::build_vocab(texts, panel_flags.min_count);
        poe::PanelModel model =
            poe::make_panel(panel_flags.config(), vocab, domain_names, run_seed);

        const poe::TrainConfig base = train_flags.preset == "full" ? poe::full_train_config()
                                                                    : poe::toy_train_config();
        const poe::TrainConfig cfg = train_flags.config(base, run_seed);
        poe::TrainResult result = poe::train_multitask(model, train_split, val_split, cfg);
        std::cerr << "multitask: best mean val accuracy " << result.best_metric << " at step "
                  << result.best_step << "\n";

        if (!skip_finetune) {
            const poe::TrainConfig ft_base = train_flags.preset == "full"
                                                 ? poe::full_finetune_config()
                                                 : poe::toy_finetune_config();
            poe::TrainConfig ft_cfg = train_flags.config(ft_base, run_seed);
            poe::TrainResult ft = poe::finetune_adapters(result.model, train_split, val_split, ft_cfg);
            std::cerr << "finetune: mean best val accuracy " << ft.best_metric << "\n";
            for (auto& entry : ft.history) {
                result.history.push_back(std::move(entry));
            }
            result.model = std::move(ft.model);
        }
        poe::save_checkpoint(result.model, train_out);
        std::vector<std::string> outputs = {train_out};
        if (!train_history.empty()) {
            std::ofstream hist(train_history, std::ios::trunc);
            poe::require(hist.good(), poe::ErrorKind::data, "cannot write history");
            hist << poe::history_jsonl(result.history);
            outputs.push_back(train_history);
        }
        json cfg_json = train_flags.to_json(cfg);
        cfg_json["panel"] = panel_flags.to_json();
        cfg_json["val_fraction"] = val_fraction;
        cfg_json["skip_finetune"] = skip_finetune;
        write_manifest("train", run_seed, cfg_json, {train_data}, outputs);
        return 0;
    }

    if (*score_cmd) {
        const poe::PanelModel model = poe::load_checkpoint(score_ckpt);
        const auto pairs = poe::read_pairs(score_pairs);
        std::ofstream file;
        if (!score_out.empty()) {
            file.open(score_out, std::ios::trunc);
            poe::require(file.good(), poe::ErrorKind::data, "cannot open '" + score_out + "'");
        }
        std::ostream& out = score_out.empty() ? std::cout : file;
        for (const auto& pair : pairs) {
            std::optional<std::int64_t> hint;
            if (!score_no_hint) {
                const std::string& domain = score_domain.empty() ? pair.domain : score_domain;
                const std::int64_t idx = model.domain_index(domain);
                if (idx >= 0) {
                    hint = idx;
                } else {
                    std::cerr << "note: domain '" << domain << "' unknown, using late fusion\n";
                }
            }
            const poe::ScoreTrace trace = poe::score(model, pair.context, pair.response, hint);
            json line;
            line["score"] = trace.score;
            line["components"] = trace.component_scores;
            line["encoder_passes"] = trace.encoder_passes;
            if (hint) {
                line["domain"] = model.domain_names[static_cast<std::size_t>(*hint)];
            }
            out << line.dump() << "\n";
        }
        if (!score_out.empty()) {
            write_manifest("score", run_seed, json{{"no_hint", score_no_hint}, {"domain", score_domain}},
                           {score_ckpt, score_pairs}, {score_out});
        }
        return 0;
    }

    if (*pool_cmd) {
        const poe::PanelModel model = poe::load_checkpoint(pool_ckpt);
        const poe::PanelModel pooled = poe::pool_experts(model, poe::parse_fusion_mode(pool_mode));
        poe::save_checkpoint(pooled, pool_out);
        write_manifest("pool", run_seed, json{{"mode", pool_mode}}, {pool_ckpt}, {pool_out});
        return 0;
    }

    if (*eval_cmd) {
        const poe::PanelModel model = poe::load_checkpoint(eval_ckpt);
        std::vector<poe::EvalDataset> datasets;
        for (const std::string& path : eval_data) {
            poe::EvalDataset ds;
            ds.name = dataset_name(path);
            ds.records = poe::read_eval_records(path);
            poe::require(!ds.records.empty(), poe::ErrorKind::data, "'" + path + "' is empty");
            ds.domain = ds.records.front().pair.domain;
            datasets.push_back(std::move(ds));
        }
        poe::PairScorer scorer;
        if (eval_scorer == "panel") {
            scorer = panel_scorer(model);
        } else {
            // self-check stub: echo the human score back through the metric
            std::map<std::uint64_t, double> lookup;
            for (const auto& ds : datasets) {
                for (const auto& record : ds.records) {
                    lookup[poe::pair_fingerprint(record.pair)] = record.human_score;
                }
            }
            scorer = [lookup](const poe::ContextResponsePair& pair, std::optional<std::int64_t>) {
                return lookup.at(poe::pair_fingerprint(pair));
            };
        }
        const poe::ScoreReport report = poe::evaluate_metric(scorer, datasets, domain_map_of(model));
        std::cout << poe::score_report_table(report);
        if (!eval_json_out.empty()) {
            std::ofstream out(eval_json_out, std::ios::trunc);
            poe::require(out.good(), poe::ErrorKind::data, "cannot write '" + eval_json_out + "'");
            out << poe::score_report_json(report).dump(2) << "\n";
            std::vector<std::string> inputs = eval_data;
            inputs.push_back(eval_ckpt);
            write_manifest("eval", run_seed, json{{"scorer", eval_scorer}}, inputs, {eval_json_out});
        }
        return 0;
    }

    if (*fewshot_cmd) {
        const poe::PanelModel model = poe::load_checkpoint(fewshot_ckpt);
        const auto records = poe::read_eval_records(fewshot_data);
        poe::TrainConfig base = fewshot_preset == "full" ? poe::full_fewshot_config()
                                                          : poe::toy_fewshot_config();
        if (fewshot_epochs) {
            base.max_epochs = *fewshot_epochs;
        }
        if (fewshot_lr) {
            base.lr = *fewshot_lr;
        }
        json out_report;
        out_report["k_sweep"] = json::array();
        for (double k : fewshot_k) {
            json k_entry;
            k_entry["k_percent"] = k;
            k_entry["runs"] = json::array();
            double before_sum = 0.0;
            double after_sum = 0.0;
            for (int s = 0; s < fewshot_seeds; ++s) {
                poe::TrainConfig cfg = base;
                cfg.seed = poe::mix_seed(run_seed, static_cast<std::uint64_t>(s));
                const poe::FewshotResult r =
                    poe::fewshot_finetune(model, records, k, cfg, fewshot_expert_only);
                before_sum += r.rho_before;
                after_sum += r.rho_after;
                k_entry["runs"].push_back(json{{"seed", s},
                                               {"rho_before", r.rho_before},
                                               {"rho_after", r.rho_after},
                                               {"sampled", r.sampled},
                                               {"best_epoch", r.best_epoch}});
            }
            k_entry["mean_rho_before"] = before_sum / fewshot_seeds;
            k_entry["mean_rho_after"] = after_sum / fewshot_seeds;
            std::cout << "K=" << k << "%: mean rho " << before_sum / fewshot_seeds << " -> "
                      << after_sum / fewshot_seeds << " over " << fewshot_seeds << " seeds\n";
            out_report["k_sweep"].push_back(std::move(k_entry));
        }
        if (!fewshot_json_out.empty()) {
            std::ofstream out(fewshot_json_out, std::ios::trunc);
            poe::require(out.good(), poe::ErrorKind::data, "cannot write '" + fewshot_json_out + "'");
            out << out_report.dump(2) << "\n";
            write_manifest("fewshot", run_seed,
                           json{{"k", fewshot_k}, {"seeds", fewshot_seeds},
                                {"expert_only", fewshot_expert_only}, {"preset", fewshot_preset}},
                           {fewshot_ckpt, fewshot_data}, {fewshot_json_out});
        }
        return 0;
    }

    if (*select_cmd) {
        const auto tasks = poe::read_selection_tasks(select_tasks);
        poe::CandidateScorer scorer;
        poe::PanelModel model;
        if (select_scorer == "panel") {
            poe::require(!select_ckpt.empty(), poe::ErrorKind::usage,
                         "select: --checkpoint required for the panel scorer");
            model = poe::load_checkpoint(select_ckpt);
            std::optional<std::int64_t> hint;
            if (!select_domain.empty()) {
                const std::int64_t idx = model.domain_index(select_domain);
                poe::require(idx >= 0, poe::ErrorKind::usage,
                             "select: unknown domain '" + select_domain + "'");
                hint = idx;
            }
            scorer = [&model, hint](const std::vector<std::string>& context, const std::string& candidate) {
                return poe::score(model, context, candidate, hint).score;
            };
        } else {
            scorer = [run_seed](const std::vector<std::string>& context, const std::string& candidate) {
                std::uint64_t h = poe::fnv1a(candidate, poe::mix_seed(run_seed, 0x5E1EC7));
                for (const std::string& u : context) {
                    h = poe::fnv1a(u, h);
                }
                return poe::Rng(h).uniform01();
            };
        }
        const double recall = poe::hits_at_1(scorer, tasks);
        std::cout << "hits@1: " << recall << " over " << tasks.size() << " tasks\n";
        return 0;
    }

    if (*newad_cmd) {
        const poe::PanelModel model = poe::load_checkpoint(newad_ckpt);
        const auto pairs = poe::read_pairs(newad_data);
        const auto datasets = poe::group_by_domain(pairs);
        poe::require(datasets.size() == 1, poe::ErrorKind::data,
                     "new-adapter: task data must hold exactly one domain");
        auto [train_ds, val_ds] = poe::split_dataset(datasets.front(), newad_val_fraction, run_seed);
        const poe::TrainConfig base = newad_flags.preset == "full" ? poe::full_finetune_config()
                                                                    : poe::toy_finetune_config();
        const poe::TrainConfig cfg = newad_flags.config(base, run_seed);
        const poe::TrainResult result =
            poe::train_new_adapter(model, train_ds, val_ds, newad_domain, cfg, run_seed);
        std::cerr << "new adapter: best val accuracy " << result.best_metric << " at step "
                  << result.best_step << "\n";
        poe::save_checkpoint(result.model, newad_out);
        json cfg_json = newad_flags.to_json(cfg);
        cfg_json["domain"] = newad_domain;
        cfg_json["val_fraction"] = newad_val_fraction;
        write_manifest("new-adapter", run_seed, cfg_json, {newad_ckpt, newad_data}, {newad_out});
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const poe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
