#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "poe/forge.hpp"
#include "poe/jsonl.hpp"
#include "support/synthetic.hpp"

using poe::ContextResponsePair;
using poe::Dialogue;
using poe::Provenance;
using poe::Rng;

namespace {

std::multiset<std::string> token_multiset(const std::string& text) {
    const auto tokens = poe::tokenize(text);
    return {tokens.begin(), tokens.end()};
}

bool is_subsequence(const std::vector<std::string>& small, const std::vector<std::string>& big) {
    std::size_t j = 0;
    for (const std::string& tok : big) {
        if (j < small.size() && small[j] == tok) {
            ++j;
        }
    }
    return j == small.size();
}

}  // namespace

TEST_CASE("stopword list is fixed at fifty entries") {
    REQUIRE(poe::stopwords().size() == 50);
    std::set<std::string> unique(poe::stopwords().begin(), poe::stopwords().end());
    REQUIRE(unique.size() == 50);
    REQUIRE(poe::is_stopword("the"));
    REQUIRE_FALSE(poe::is_stopword("giraffe"));
    REQUIRE(poe::is_content_token("giraffe"));
    REQUIRE_FALSE(poe::is_content_token("the"));
}

TEST_CASE("pair extraction walks every turn with a bounded window") {
    Dialogue d;
    d.domain = "travel";
    d.utterances = {"u0", "u1", "u2", "u3", "u4", "u5 extra"};
    const auto pairs = poe::extract_pairs(d);
    REQUIRE(pairs.size() == 5);
    REQUIRE(pairs[0].context == std::vector<std::string>{"u0"});
    REQUIRE(pairs[0].response == "u1");
    REQUIRE(pairs[3].context == std::vector<std::string>{"u0", "u1", "u2", "u3"});
    // window caps at the four most recent turns
    REQUIRE(pairs[4].context == std::vector<std::string>{"u1", "u2", "u3", "u4"});
    REQUIRE(pairs[4].response == "u5 extra");
    for (const auto& pair : pairs) {
        REQUIRE(pair.domain == "travel");
        REQUIRE(pair.provenance == Provenance::original);
        REQUIRE_FALSE(pair.label.has_value());
    }

    Dialogue too_short;
    too_short.domain = "x";
    too_short.utterances = {"only one"};
    REQUIRE_THROWS_AS(poe::extract_pairs(too_short), poe::Error);
}

TEST_CASE("word drop keeps a proper ordered subset") {
    Rng rng(101);
    const std::string original = "alpha beta gamma delta epsilon zeta";
    for (int i = 0; i < 50; ++i) {
        const std::string out = poe::perturb_syntactic(original, poe::PerturbMode::drop, rng);
        const auto kept = poe::tokenize(out);
        const auto base = poe::tokenize(original);
        REQUIRE(kept.size() < base.size());
        REQUIRE(kept.size() >= base.size() - base.size() / 2);
        REQUIRE(is_subsequence(kept, base));
    }
}

TEST_CASE("word shuffle permutes without fixing the identity") {
    Rng rng(102);
    const std::string original = "alpha beta gamma delta";
    for (int i = 0; i < 50; ++i) {
        const std::string out = poe::perturb_syntactic(original, poe::PerturbMode::shuffle, rng);
        REQUIRE(out != original);
        REQUIRE(token_multiset(out) == token_multiset(original));
    }
    // a response whose tokens are all equal cannot be visibly shuffled
    REQUIRE_THROWS_AS(poe::perturb_syntactic("na na na", poe::PerturbMode::shuffle, rng), poe::Error);
}

TEST_CASE("word repeat duplicates tokens in place") {
    Rng rng(103);
    const std::string original = "alpha beta gamma delta";
    for (int i = 0; i < 50; ++i) {
        const std::string out = poe::perturb_syntactic(original, poe::PerturbMode::repeat, rng);
        const auto tokens = poe::tokenize(out);
        REQUIRE(tokens.size() > 4);
        REQUIRE(tokens.size() <= 6);  // at most floor(n/2) extra copies
        auto ms = token_multiset(out);
        for (const std::string& tok : poe::tokenize(original)) {
            REQUIRE(ms.count(tok) >= 1);
        }
        // repeats sit adjacent to their source
        for (std::size_t j = 0; j + 1 < tokens.size(); ++j) {
            if (ms.count(tokens[j]) > 1 && tokens[j] == tokens[j + 1]) {
                SUCCEED();
            }
        }
    }
    // two-token input still gains exactly one copy
    const std::string two = poe::perturb_syntactic("alpha beta", poe::PerturbMode::repeat, rng);
    REQUIRE(poe::tokenize(two).size() == 3);
}

TEST_CASE("random negatives come from another dialogue") {
    const auto corpus = poe::testing::make_dialogues({"travel"}, 4, 5, 7);
    Rng rng(104);
    for (int i = 0; i < 100; ++i) {
        const std::string neg = poe::sample_random_negative(corpus, 1, rng);
        const auto& banned = corpus[1].utterances;
        REQUIRE(std::find(banned.begin(), banned.end(), neg) == banned.end());
    }
    Rng rng2(105);
    std::vector<poe::Dialogue> lone(corpus.begin(), corpus.begin() + 1);
    REQUIRE_THROWS_AS(poe::sample_random_negative(lone, 0, rng2), poe::Error);
}

TEST_CASE("mask and fill preserves length and injects donor content") {
    Rng rng(106);
    const std::string response = "the river was very cold and the bridge was long";
    const std::vector<std::string> donor = {"a guitar and a camera", "the market"};
    const std::set<std::string> donor_content = {"guitar", "camera", "market"};
    const auto base = poe::tokenize(response);
    for (int i = 0; i < 50; ++i) {
        const std::string out = poe::mask_and_fill(response, donor, rng);
        const auto tokens = poe::tokenize(out);
        REQUIRE(tokens.size() == base.size());
        std::size_t changed = 0;
        for (std::size_t j = 0; j < tokens.size(); ++j) {
            if (tokens[j] != base[j]) {
                ++changed;
                REQUIRE(donor_content.count(tokens[j]) == 1);
            }
        }
        REQUIRE(changed >= 1);
        REQUIRE(changed <= 1 + base.size() * 15 / 100);
    }
    REQUIRE_THROWS_AS(poe::mask_and_fill(response, {"the of and"}, rng), poe::Error);
    REQUIRE_THROWS_AS(poe::mask_and_fill("single", donor, rng), poe::Error);
}

TEST_CASE("adversarial responses echo a perturbed context utterance") {
    Rng rng(107);
    const std::vector<std::string> context = {"alpha beta gamma", "delta epsilon"};
    for (int i = 0; i < 50; ++i) {
        const std::string out = poe::adversarial_from_context(context, rng);
        REQUIRE_FALSE(out.empty());
        // every token of the echo originates in one source utterance
        const auto tokens = poe::tokenize(out);
        const std::set<std::string> a = {"alpha", "beta", "gamma"};
        const std::set<std::string> b = {"delta", "epsilon"};
        const bool from_a = a.count(tokens[0]) == 1;
        for (const std::string& tok : tokens) {
            REQUIRE((from_a ? a : b).count(tok) == 1);
        }
    }
    REQUIRE_THROWS_AS(poe::adversarial_from_context({"word"}, rng), poe::Error);
}

TEST_CASE("pair fingerprints are stable and field-sensitive") {
    ContextResponsePair pair;
    pair.domain = "travel";
    pair.context = {"hello there", "how are you"};
    pair.response = "fine thanks";
    const std::uint64_t base = poe::pair_fingerprint(pair);
    REQUIRE(base == poe::pair_fingerprint(pair));

    ContextResponsePair other = pair;
    other.response = "fine thanks!";
    REQUIRE(poe::pair_fingerprint(other) != base);
    // separator-aware: moving a token across the utterance boundary changes the hash
    ContextResponsePair shifted = pair;
    shifted.context = {"hello", "there how are you"};
    REQUIRE(poe::pair_fingerprint(shifted) != base);
}

TEST_CASE("provenance teacher is order-independent and class-correct") {
    const poe::TeacherScorer teacher = poe::provenance_teacher(909);
    const auto corpus = poe::testing::make_dialogues({"travel"}, 6, 5, 8);
    std::vector<ContextResponsePair> pairs;
    for (const auto& d : corpus) {
        for (auto& p : poe::extract_pairs(d)) {
            pairs.push_back(p);
            ContextResponsePair neg = p;
            neg.response = "junk response";
            neg.provenance = Provenance::word_shuffle;
            pairs.push_back(neg);
        }
    }
    int unsure = 0;
    for (const auto& pair : pairs) {
        const double conf = teacher(pair);
        REQUIRE(conf >= 0.0);
        REQUIRE(conf <= 1.0);
        if (std::max(conf, 1.0 - conf) < 0.9) {
            ++unsure;
            REQUIRE(conf >= 0.3);
            REQUIRE(conf < 0.7);
        } else if (pair.provenance == Provenance::original) {
            REQUIRE(conf >= 0.9);
        } else {
            REQUIRE(conf <= 0.1);
        }
    }
    // around 15% of pairs land in the unsure band
    REQUIRE(unsure > 0);
    REQUIRE(unsure < static_cast<int>(pairs.size()) / 2);

    // same pair scores the same regardless of position or neighbors
    std::vector<double> forward;
    for (const auto& pair : pairs) {
        forward.push_back(teacher(pair));
    }
    for (std::size_t i = pairs.size(); i-- > 0;) {
        REQUIRE(teacher(pairs[i]) == forward[i]);
    }
}

TEST_CASE("overlap teacher tracks content overlap monotonically") {
    const poe::TeacherScorer teacher = poe::overlap_teacher();
    ContextResponsePair pair;
    pair.domain = "d";
    pair.context = {"the river and the bridge", "a guitar"};

    pair.response = "river bridge guitar";  // full content overlap
    const double high = teacher(pair);
    REQUIRE_THAT(high, Catch::Matchers::WithinAbs(1.0 / (1.0 + std::exp(-12.0 * 0.75)), 1e-12));

    pair.response = "planet castle engine";  // zero overlap
    const double low = teacher(pair);
    REQUIRE_THAT(low, Catch::Matchers::WithinAbs(1.0 / (1.0 + std::exp(3.0)), 1e-12));

    pair.response = "river castle engine guitar";  // half overlap
    const double mid = teacher(pair);
    REQUIRE(low < mid);
    REQUIRE(mid < high);
}

TEST_CASE("gate keeps only confident pairs and balances classes exactly") {
    std::vector<ContextResponsePair> candidates;
    // confidences: 6 clear positives, 3 clear negatives, 3 unsure
    const std::vector<double> confs = {0.95, 0.97, 0.99, 0.91, 0.93, 0.96,
                                       0.02, 0.05, 0.08, 0.55, 0.45, 0.7};
    for (std::size_t i = 0; i < confs.size(); ++i) {
        ContextResponsePair pair;
        pair.domain = "d";
        pair.context = {"ctx " + std::to_string(i)};
        pair.response = "resp " + std::to_string(i);
        pair.provenance = Provenance::original;
        candidates.push_back(std::move(pair));
    }
    std::map<std::uint64_t, double> by_fp;
    for (std::size_t i = 0; i < confs.size(); ++i) {
        by_fp[poe::pair_fingerprint(candidates[i])] = confs[i];
    }
    const poe::TeacherScorer teacher = [&by_fp](const ContextResponsePair& p) {
        return by_fp.at(poe::pair_fingerprint(p));
    };

    Rng rng(108);
    const poe::DomainDataset ds = poe::pseudo_label_gate(candidates, teacher, 0.9, rng);
    REQUIRE(ds.domain == "d");
    REQUIRE(ds.pairs.size() == 6);  // 3 positives vs 3 negatives after balancing
    int pos = 0, neg = 0;
    for (const auto& pair : ds.pairs) {
        REQUIRE(pair.label.has_value());
        REQUIRE(pair.confidence.has_value());
        REQUIRE(std::max(*pair.confidence, 1.0 - *pair.confidence) >= 0.9);
        (*pair.label == 1 ? pos : neg) += 1;
    }
    REQUIRE(pos == 3);
    REQUIRE(neg == 3);

    // all positives gated out -> explicit data error naming the counts
    Rng rng2(109);
    std::vector<ContextResponsePair> only_neg(candidates.begin() + 6, candidates.begin() + 9);
    try {
        poe::pseudo_label_gate(only_neg, teacher, 0.9, rng2);
        FAIL("expected gate to fail");
    } catch (const poe::Error& e) {
        REQUIRE(e.kind() == poe::ErrorKind::data);
        REQUIRE(std::string(e.what()).find("positives 0") != std::string::npos);
    }

    Rng rng3(110);
    REQUIRE_THROWS_AS(poe::pseudo_label_gate(candidates, teacher, 0.5, rng3), poe::Error);
    REQUIRE_THROWS_AS(poe::pseudo_label_gate(candidates, teacher, 1.0001, rng3), poe::Error);
}

TEST_CASE("forged datasets are balanced, labeled, and deterministic") {
    const auto dialogues = poe::testing::make_dialogues({"travel", "movies"}, 6, 6, 13);
    poe::ForgeConfig cfg;
    cfg.seed = 77;
    const poe::TeacherScorer teacher = poe::provenance_teacher(411);
    const auto datasets = poe::forge_datasets(dialogues, cfg, teacher, poe::noop_provider());
    REQUIRE(datasets.size() == 2);
    REQUIRE(datasets[0].domain == "travel");
    REQUIRE(datasets[1].domain == "movies");
    for (const auto& ds : datasets) {
        REQUIRE(ds.pairs.size() >= 10);
        int pos = 0, neg = 0;
        for (const auto& pair : ds.pairs) {
            REQUIRE(pair.domain == ds.domain);
            REQUIRE(pair.label.has_value());
            (*pair.label == 1 ? pos : neg) += 1;
            if (*pair.label == 1) {
                REQUIRE((pair.provenance == Provenance::original ||
                         pair.provenance == Provenance::provider));
            }
        }
        REQUIRE(pos == neg);
    }

    const auto again = poe::forge_datasets(dialogues, cfg, teacher, poe::noop_provider());
    REQUIRE(again.size() == datasets.size());
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        REQUIRE(again[d].pairs.size() == datasets[d].pairs.size());
        for (std::size_t i = 0; i < datasets[d].pairs.size(); ++i) {
            REQUIRE(poe::pair_to_json(again[d].pairs[i]).dump() ==
                    poe::pair_to_json(datasets[d].pairs[i]).dump());
        }
    }
}

TEST_CASE("jsonl files round trip every record type") {
    poe::testing::TempDir tmp;

    const auto dialogues = poe::testing::make_dialogues({"a", "b"}, 2, 3, 23);
    poe::write_dialogues(dialogues, tmp.file("d.jsonl"));
    const auto dialogues2 = poe::read_dialogues(tmp.file("d.jsonl"));
    REQUIRE(dialogues2.size() == dialogues.size());
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
        REQUIRE(dialogues2[i].domain == dialogues[i].domain);
        REQUIRE(dialogues2[i].utterances == dialogues[i].utterances);
    }

    poe::ForgeConfig cfg;
    cfg.seed = 9;
    const auto forged = poe::forge_datasets(dialogues, cfg, poe::provenance_teacher(2), poe::noop_provider());
    std::vector<ContextResponsePair> flat;
    for (const auto& ds : forged) {
        flat.insert(flat.end(), ds.pairs.begin(), ds.pairs.end());
    }
    poe::write_pairs(flat, tmp.file("p.jsonl"));
    const auto flat2 = poe::read_pairs(tmp.file("p.jsonl"));
    REQUIRE(flat2.size() == flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        REQUIRE(poe::pair_to_json(flat2[i]).dump() == poe::pair_to_json(flat[i]).dump());
    }

    const auto records = poe::testing::quality_records(8, 31);
    poe::write_eval_records(records, tmp.file("e.jsonl"));
    const auto records2 = poe::read_eval_records(tmp.file("e.jsonl"));
    REQUIRE(records2.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(records2[i].human_score == records[i].human_score);
        REQUIRE(records2[i].pair.response == records[i].pair.response);
    }

    const auto tasks = poe::testing::make_selection_tasks(5, 37);
    poe::write_selection_tasks(tasks, tmp.file("t.jsonl"));
    const auto tasks2 = poe::read_selection_tasks(tmp.file("t.jsonl"));
    REQUIRE(tasks2.size() == tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        REQUIRE(tasks2[i].candidates == tasks[i].candidates);
        REQUIRE(tasks2[i].positive_index == tasks[i].positive_index);
    }
}

TEST_CASE("jsonl readers reject malformed lines with location context") {
    poe::testing::TempDir tmp;
    {
        std::ofstream out(tmp.file("bad.jsonl"));
        out << R"({"domain": "a", "context": ["x"], "response": "y", "provenance": "original"})" << "\n";
        out << "{not json}\n";
    }
    try {
        poe::read_pairs(tmp.file("bad.jsonl"));
        FAIL("expected parse failure");
    } catch (const poe::Error& e) {
        REQUIRE(e.kind() == poe::ErrorKind::data);
        REQUIRE(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
    }
    {
        std::ofstream out(tmp.file("unknown.jsonl"));
        out << R"({"domain": "a", "context": ["x"], "response": "y", "provenance": "original", "zz": 1})"
            << "\n";
    }
    REQUIRE_THROWS_AS(poe::read_pairs(tmp.file("unknown.jsonl")), poe::Error);
    {
        std::ofstream out(tmp.file("score.jsonl"));
        out << R"({"domain": "a", "context": ["x"], "response": "y", "provenance": "original", "human_score": "high"})"
            << "\n";
    }
    REQUIRE_THROWS_AS(poe::read_eval_records(tmp.file("score.jsonl")), poe::Error);
}

TEST_CASE("augmenter toggles limit provenances") {
    const auto dialogues = poe::testing::make_dialogues({"solo"}, 5, 6, 19);
    poe::ForgeConfig cfg;
    cfg.seed = 3;
    cfg.use_word_drop = false;
    cfg.use_word_shuffle = false;
    cfg.use_word_repeat = false;
    cfg.use_mask_and_fill = false;
    cfg.use_adversarial_context = false;
    // only random_utterance negatives remain
    const auto ds = poe::forge_domain(dialogues, cfg, poe::provenance_teacher(5), poe::noop_provider());
    for (const auto& pair : ds.pairs) {
        if (pair.label == 0) {
            REQUIRE(pair.provenance == Provenance::random_utterance);
        }
    }
}
