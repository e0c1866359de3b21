#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "poe/meta_eval.hpp"
#include "support/synthetic.hpp"

using poe::Rng;

TEST_CASE("average ranks split ties") {
    REQUIRE(poe::average_ranks({10.0, 20.0, 20.0, 30.0}) ==
            std::vector<double>{1.0, 2.5, 2.5, 4.0});
    REQUIRE(poe::average_ranks({5.0, 5.0, 5.0}) == std::vector<double>{2.0, 2.0, 2.0});
    REQUIRE(poe::average_ranks({3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("worked example yields 0.8") {
    const std::vector<double> s = {0.2, 0.9, 0.5, 0.1};
    const std::vector<double> q = {2.0, 3.0, 5.0, 1.0};
    const poe::Correlation c = poe::spearman(s, q);
    REQUIRE_FALSE(c.degenerate);
    REQUIRE_THAT(c.rho, Catch::Matchers::WithinAbs(0.8, 1e-12));
    REQUIRE_THAT(poe::spearman_closed_form(s, q), Catch::Matchers::WithinAbs(0.8, 1e-12));
}

TEST_CASE("rank-pearson equals the closed form on tie-free data") {
    Rng rng(201);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.index(30);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(rng.uniform01());
            y.push_back(rng.uniform01());
        }
        const poe::Correlation c = poe::spearman(x, y);
        REQUIRE_FALSE(c.degenerate);
        REQUIRE_THAT(c.rho, Catch::Matchers::WithinAbs(poe::spearman_closed_form(x, y), 1e-12));
    }
}

TEST_CASE("spearman is invariant under monotone transforms") {
    Rng rng(202);
    std::vector<double> x, y, y_warped;
    for (int i = 0; i < 25; ++i) {
        x.push_back(rng.uniform01());
        y.push_back(rng.uniform(-2.0, 2.0));
        y_warped.push_back(std::exp(3.0 * y.back()));
    }
    REQUIRE_THAT(poe::spearman(x, y).rho,
                 Catch::Matchers::WithinAbs(poe::spearman(x, y_warped).rho, 1e-12));
}

TEST_CASE("perfect and reversed orders hit the rails") {
    const std::vector<double> x = {1, 2, 3, 4, 5, 6};
    std::vector<double> up = {10, 20, 30, 40, 50, 60};
    std::vector<double> down(up.rbegin(), up.rend());
    REQUIRE_THAT(poe::spearman(x, up).rho, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(poe::spearman(x, down).rho, Catch::Matchers::WithinAbs(-1.0, 1e-12));
}

TEST_CASE("degenerate inputs are flagged instead of dividing by zero") {
    const poe::Correlation c = poe::spearman({1.0, 1.0, 1.0, 1.0}, {1.0, 2.0, 3.0, 4.0});
    REQUIRE(c.degenerate);
    REQUIRE(c.rho == 0.0);
    REQUIRE_THROWS_AS(poe::spearman({1.0, 2.0}, {1.0, 2.0}), poe::Error);       // too short
    REQUIRE_THROWS_AS(poe::spearman({1.0, 2.0, 3.0}, {1.0, 2.0}), poe::Error);  // length mismatch
}

TEST_CASE("two-sided p-values match an independent reference") {
    // t-distribution tail values computed with 40-digit arithmetic
    struct Case {
        double rho;
        std::size_t n;
        double p;
    };
    const Case cases[] = {
        {0.8, 5, 0.10408803866182782},
        {0.6, 20, 0.0051629256736768021},
        {0.5, 10, 0.14111328125},
        {0.9, 8, 0.0023162499999999985},
    };
    for (const Case& c : cases) {
        REQUIRE_THAT(poe::spearman_p_value(c.rho, c.n), Catch::Matchers::WithinRel(c.p, 1e-10));
    }
    REQUIRE(poe::spearman_p_value(1.0, 12) == 0.0);
    REQUIRE(poe::spearman_p_value(-1.0, 12) == 0.0);
    REQUIRE_THAT(poe::spearman_p_value(0.0, 10), Catch::Matchers::WithinRel(1.0, 1e-12));
}

TEST_CASE("hits@1 scores strict wins only") {
    const auto tasks = poe::testing::make_selection_tasks(40, 301);

    const poe::CandidateScorer oracle = [&tasks](const std::vector<std::string>& context,
                                                 const std::string& candidate) {
        for (const auto& task : tasks) {
            if (task.context == context) {
                return candidate == task.candidates[static_cast<std::size_t>(task.positive_index)]
                           ? 1.0
                           : 0.0;
            }
        }
        return 0.0;
    };
    REQUIRE(poe::hits_at_1(oracle, tasks) == 1.0);

    const poe::CandidateScorer inverted = [&oracle](const std::vector<std::string>& context,
                                                    const std::string& candidate) {
        return -oracle(context, candidate);
    };
    REQUIRE(poe::hits_at_1(inverted, tasks) == 0.0);

    // constant scores tie every candidate, and ties are misses
    const poe::CandidateScorer flat = [](const std::vector<std::string>&, const std::string&) {
        return 0.25;
    };
    REQUIRE(poe::hits_at_1(flat, tasks) == 0.0);

    REQUIRE_THROWS_AS(poe::hits_at_1(flat, {}), poe::Error);
}

TEST_CASE("random scorer lands near one in twenty") {
    const auto tasks = poe::testing::make_selection_tasks(2000, 303);
    const poe::CandidateScorer random_scorer = [](const std::vector<std::string>& context,
                                                  const std::string& candidate) {
        std::uint64_t h = poe::fnv1a(candidate, 0x1234);
        for (const std::string& u : context) {
            h = poe::fnv1a(u, h);
        }
        return Rng(h).uniform01();
    };
    const double recall = poe::hits_at_1(random_scorer, tasks);
    REQUIRE(recall > 0.05 - 0.015);
    REQUIRE(recall < 0.05 + 0.015);
}

TEST_CASE("bootstrap comparison separates clear winners and exact ties") {
    Rng rng(401);
    std::vector<double> human, strong, weak;
    for (int i = 0; i < 40; ++i) {
        const double h = rng.uniform01();
        human.push_back(h);
        strong.push_back(h + 0.02 * rng.uniform01());   // nearly clean copy
        weak.push_back(0.7 * rng.uniform01() + 0.3 * h);  // mostly noise
    }
    const poe::BootstrapResult ab = poe::bootstrap_compare(strong, weak, human, 1000, 71);
    REQUIRE(ab.p_value < 0.05);
    const poe::BootstrapResult ba = poe::bootstrap_compare(weak, strong, human, 1000, 71);
    REQUIRE(ba.p_value > 0.5);

    const poe::BootstrapResult tie = poe::bootstrap_compare(strong, strong, human, 1000, 71);
    REQUIRE(tie.p_value == 0.5);

    // deterministic under a fixed seed
    const poe::BootstrapResult again = poe::bootstrap_compare(strong, weak, human, 1000, 71);
    REQUIRE(again.p_value == ab.p_value);
    REQUIRE(again.degenerate_redraws == ab.degenerate_redraws);

    std::vector<double> tiny(human.begin(), human.begin() + 5);
    REQUIRE_THROWS_AS(poe::bootstrap_compare(tiny, tiny, tiny, 1000, 1), poe::Error);
    REQUIRE_THROWS_AS(poe::bootstrap_compare(strong, weak, human, 99, 1), poe::Error);
}

TEST_CASE("evaluate_metric hints in-domain datasets and averages the rest") {
    std::vector<poe::EvalDataset> datasets;
    for (const std::string name : {"travel_eval", "movies_eval", "cooking_eval"}) {
        poe::EvalDataset ds;
        ds.name = name;
        ds.domain = name.substr(0, name.find('_'));
        ds.records = poe::testing::quality_records(20, poe::fnv1a(name), ds.domain);
        datasets.push_back(std::move(ds));
    }
    const std::map<std::string, std::int64_t> domain_map = {{"travel", 0}, {"movies", 1}};

    std::vector<std::optional<std::int64_t>> seen_hints;
    const poe::PairScorer scorer = [&seen_hints](const poe::ContextResponsePair& pair,
                                                 std::optional<std::int64_t> hint) {
        seen_hints.push_back(hint);
        // score by response length so ranks are meaningful
        return static_cast<double>(pair.response.size()) / 100.0;
    };
    const poe::ScoreReport report = poe::evaluate_metric(scorer, datasets, domain_map);
    REQUIRE(report.datasets.size() == 3);
    REQUIRE(report.datasets[0].in_domain);
    REQUIRE(report.datasets[1].in_domain);
    REQUIRE_FALSE(report.datasets[2].in_domain);  // cooking falls back to late fusion

    double mean = 0.0;
    for (const auto& ds : report.datasets) {
        mean += ds.rho;
    }
    mean /= 3.0;
    REQUIRE_THAT(report.overall_mean, Catch::Matchers::WithinAbs(mean, 1e-12));

    // every travel record scored with hint 0, movies with 1, cooking unhinted
    std::size_t idx = 0;
    for (int d = 0; d < 3; ++d) {
        for (int r = 0; r < 20; ++r, ++idx) {
            if (d == 0) {
                REQUIRE(seen_hints[idx] == std::optional<std::int64_t>{0});
            } else if (d == 1) {
                REQUIRE(seen_hints[idx] == std::optional<std::int64_t>{1});
            } else {
                REQUIRE_FALSE(seen_hints[idx].has_value());
            }
        }
    }
}
