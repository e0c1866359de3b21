#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "poe/common.hpp"
#include "poe/data.hpp"
#include "poe/rng.hpp"

namespace poe {

// 1-based ranks, ties resolved to the average rank of the tied run.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) {
            return values[a] < values[b];
        }
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = shared;
        }
        i = j + 1;
    }
    return ranks;
}

struct Correlation {
    double rho = 0.0;
    bool degenerate = false;  // a constant input leaves rho undefined
};

inline Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::usage, "pearson: need two aligned vectors");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return {0.0, true};
    }
    return {sxy / std::sqrt(sxx * syy), false};
}

// Rank correlation: average-rank ties, then Pearson on the rank vectors.
inline Correlation spearman(const std::vector<double>& s, const std::vector<double>& q) {
    require(s.size() == q.size(), ErrorKind::usage, "spearman: length mismatch");
    require(s.size() >= 3, ErrorKind::usage, "spearman: need at least 3 samples");
    return pearson(average_ranks(s), average_ranks(q));
}

// Tie-free closed form 1 - 6*sum(d^2)/(n(n^2-1)). Only valid when neither
// vector has ties; kept as an independent consistency oracle.
inline double spearman_closed_form(const std::vector<double>& s, const std::vector<double>& q) {
    require(s.size() == q.size() && s.size() >= 3, ErrorKind::usage, "spearman: bad input");
    const std::vector<double> rs = average_ranks(s);
    const std::vector<double> rq = average_ranks(q);
    double sum_d2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = rs[i] - rq[i];
        sum_d2 += d * d;
    }
    const double n = static_cast<double>(s.size());
    return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

namespace detail {

// Continued-fraction incomplete beta (Lentz), for Student-t tail mass.
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const int max_iter = 300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 3e-16) {
            break;
        }
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value for H0 rho=0 via the t approximation.
inline double spearman_p_value(double rho, std::size_t n) {
    if (n < 3) {
        return 1.0;
    }
    const double nu = static_cast<double>(n - 2);
    const double denom = 1.0 - rho * rho;
    if (denom <= 0.0) {
        return 0.0;
    }
    const double t2 = rho * rho * nu / denom;
    return detail::incomplete_beta(0.5 * nu, 0.5, nu / (nu + t2));
}

struct DatasetScore {
    std::string name;
    std::string domain;     // training-domain tag, or "Other"
    bool in_domain = false;  // scored with a domain hint
    double rho = 0.0;
    bool degenerate = false;
    double p_value = 1.0;
    std::size_t samples = 0;
};

struct ScoreReport {
    std::vector<DatasetScore> datasets;
    std::vector<std::pair<std::string, double>> domain_means;  // per domain tag, dataset order
    double overall_mean = 0.0;
};

struct EvalDataset {
    std::string name;
    std::string domain;
    std::vector<EvaluationRecord> records;
};

// Record scorer: confidence for one pair, optionally steered to one expert.
using PairScorer = std::function<double(const ContextResponsePair&, std::optional<std::int64_t>)>;

// In-domain datasets resolve through domain_map to a hint; everything else
// takes the no-hint path. Overall mean is unweighted across datasets.
inline ScoreReport evaluate_metric(const PairScorer& scorer,
                                   const std::vector<EvalDataset>& datasets,
                                   const std::map<std::string, std::int64_t>& domain_map) {
    require(!datasets.empty(), ErrorKind::data, "evaluate_metric: no datasets");
    ScoreReport report;
    for (const EvalDataset& dataset : datasets) {
        require(dataset.records.size() >= 3, ErrorKind::data,
                "evaluate_metric: dataset '" + dataset.name + "' needs at least 3 records");
        auto hint_it = domain_map.find(dataset.domain);
        std::optional<std::int64_t> hint;
        if (hint_it != domain_map.end()) {
            hint = hint_it->second;
        }
        std::vector<double> scores;
        std::vector<double> human;
        for (const EvaluationRecord& record : dataset.records) {
            scores.push_back(scorer(record.pair, hint));
            human.push_back(record.human_score);
        }
        const Correlation c = spearman(scores, human);
        DatasetScore entry;
        entry.name = dataset.name;
        entry.domain = dataset.domain;
        entry.in_domain = hint.has_value();
        entry.rho = c.rho;
        entry.degenerate = c.degenerate;
        entry.p_value = c.degenerate ? 1.0 : spearman_p_value(c.rho, scores.size());
        entry.samples = scores.size();
        report.datasets.push_back(std::move(entry));
    }

    double total = 0.0;
    for (const DatasetScore& d : report.datasets) {
        total += d.rho;
    }
    report.overall_mean = total / static_cast<double>(report.datasets.size());

    for (const DatasetScore& d : report.datasets) {
        bool seen = false;
        for (const auto& [domain, mean] : report.domain_means) {
            seen = seen || domain == d.domain;
        }
        if (seen) {
            continue;
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (const DatasetScore& e : report.datasets) {
            if (e.domain == d.domain) {
                sum += e.rho;
                ++count;
            }
        }
        report.domain_means.emplace_back(d.domain, sum / static_cast<double>(count));
    }
    return report;
}

// Candidate scorer for selection tasks.
using CandidateScorer = std::function<double(const std::vector<std::string>&, const std::string&)>;

// A hit requires the positive to beat every distractor strictly; ties miss.
inline double hits_at_1(const CandidateScorer& scorer, const std::vector<SelectionTask>& tasks) {
    require(!tasks.empty(), ErrorKind::data, "hits_at_1: no tasks");
    std::size_t hits = 0;
    for (const SelectionTask& task : tasks) {
        task.validate();
        const double positive = scorer(task.context, task.candidates[static_cast<std::size_t>(task.positive_index)]);
        bool hit = true;
        for (std::size_t i = 0; i < task.candidates.size(); ++i) {
            if (static_cast<int>(i) == task.positive_index) {
                continue;
            }
            if (scorer(task.context, task.candidates[i]) >= positive) {
                hit = false;
                break;
            }
        }
        hits += hit ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(tasks.size());
}

struct BootstrapResult {
    double p_value = 0.0;
    std::int64_t degenerate_redraws = 0;
};

// Paired bootstrap over record indices for "is B as good as A". Resamples
// that collapse a vector to a constant are redrawn and counted. Exact ties
// between the two resampled correlations contribute half an event, which
// keeps p near 0.5 when A and B are the same scorer.
inline BootstrapResult bootstrap_compare(const std::vector<double>& scores_a,
                                         const std::vector<double>& scores_b,
                                         const std::vector<double>& human,
                                         std::int64_t resamples,
                                         std::uint64_t seed) {
    const std::size_t n = scores_a.size();
    require(scores_b.size() == n && human.size() == n, ErrorKind::usage, "bootstrap: length mismatch");
    require(n >= 10, ErrorKind::usage, "bootstrap: need at least 10 records");
    require(resamples >= 1000, ErrorKind::usage, "bootstrap: need at least 1000 resamples");

    Rng rng(mix_seed(seed, 0xB0075));
    BootstrapResult result;
    double events = 0.0;
    for (std::int64_t r = 0; r < resamples; ++r) {
        std::vector<double> a(n), b(n), q(n);
        Correlation ca, cb;
        while (true) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = rng.index(n);
                a[i] = scores_a[j];
                b[i] = scores_b[j];
                q[i] = human[j];
            }
            ca = spearman(a, q);
            cb = spearman(b, q);
            if (!ca.degenerate && !cb.degenerate) {
                break;
            }
            result.degenerate_redraws += 1;
        }
        if (cb.rho > ca.rho) {
            events += 1.0;
        } else if (cb.rho == ca.rho) {
            events += 0.5;
        }
    }
    result.p_value = events / static_cast<double>(resamples);
    return result;
}

}  // namespace poe
