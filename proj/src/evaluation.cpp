#include "ticketd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"

namespace ticketd {

std::string to_string(MetricsMode mode) {
    return mode == MetricsMode::ensemble_only ? "ensemble_only" : "full_engine";
}

Metrics compute_metrics(const std::vector<DispatchDecision>& decisions, const GoldMap& gold,
                        MetricsMode mode) {
    Metrics m;
    m.mode = mode;
    m.n_total = decisions.size();
    for (const auto& d : decisions) {
        auto it = gold.find(d.ticket_id);
        if (it == gold.end()) {
            throw Error("compute_metrics: no gold label for ticket '" + d.ticket_id + "'");
        }
        if (d.group == kManualQueue) {
            continue; // counts toward n_total only
        }
        ++m.n_assigned;
        if (it->second.matches(d.group)) {
            ++m.n_correct;
        }
    }
    if (m.n_total > 0) {
        m.coverage = static_cast<double>(m.n_assigned) / static_cast<double>(m.n_total);
    }
    if (m.n_assigned > 0) {
        m.accuracy = static_cast<double>(m.n_correct) / static_cast<double>(m.n_assigned);
    }
    return m;
}

HoldoutSplit split_holdout(const TicketCorpus& corpus, double test_fraction, uint64_t seed) {
    if (corpus.size() < 10) {
        throw Error("split_holdout: corpus too small (need >= 10 tickets)");
    }
    if (test_fraction <= 0.0 || test_fraction >= 1.0) {
        throw Error("split_holdout: test_fraction must lie in (0,1)");
    }
    // Bucket ticket positions per label; map keeps label order deterministic.
    std::map<std::string, std::vector<size_t>> buckets;
    for (size_t i = 0; i < corpus.tickets.size(); ++i) {
        const auto& t = corpus.tickets[i];
        if (!t.gold_group) {
            throw Error("split_holdout: ticket '" + t.id + "' has no gold group");
        }
        buckets[*t.gold_group].push_back(i);
    }

    HoldoutSplit split;
    Rng rng(seed);
    std::vector<bool> in_test(corpus.tickets.size(), false);
    for (auto& [label, positions] : buckets) {
        if (positions.size() == 1) {
            split.warnings.push_back("label '" + label +
                                     "' has a single ticket; kept in train");
            continue;
        }
        size_t n_test = static_cast<size_t>(
            std::llround(static_cast<double>(positions.size()) * test_fraction));
        n_test = std::min(n_test, positions.size() - 1); // keep each label in train
        rng.shuffle(positions);
        for (size_t i = 0; i < n_test; ++i) {
            in_test[positions[i]] = true;
        }
    }
    for (size_t i = 0; i < corpus.tickets.size(); ++i) {
        (in_test[i] ? split.test : split.train).tickets.push_back(corpus.tickets[i]);
    }
    split.train.rebuild_label_set();
    split.test.rebuild_label_set();
    return split;
}

CrossValidation cross_validate(const TicketCorpus& corpus, size_t k,
                               const FoldEvaluator& evaluate, uint64_t seed) {
    if (k < 2) {
        throw Error("cross_validate: k must be >= 2");
    }
    if (corpus.size() < k) {
        throw Error("cross_validate: k exceeds corpus size");
    }
    // Stratified fold assignment: shuffle within each label, deal round-robin.
    std::map<std::string, std::vector<size_t>> buckets;
    for (size_t i = 0; i < corpus.tickets.size(); ++i) {
        const auto& t = corpus.tickets[i];
        buckets[t.gold_group ? *t.gold_group : std::string()].push_back(i);
    }
    Rng rng(seed);
    std::vector<size_t> fold_of(corpus.tickets.size(), 0);
    size_t dealer = 0;
    for (auto& [label, positions] : buckets) {
        rng.shuffle(positions);
        for (const size_t pos : positions) {
            fold_of[pos] = dealer % k;
            ++dealer;
        }
    }

    CrossValidation cv;
    for (size_t fold = 0; fold < k; ++fold) {
        TicketCorpus train, test;
        for (size_t i = 0; i < corpus.tickets.size(); ++i) {
            (fold_of[i] == fold ? test : train).tickets.push_back(corpus.tickets[i]);
        }
        train.rebuild_label_set();
        test.rebuild_label_set();
        cv.folds.push_back(evaluate(train, test));
    }

    double cov_sum = 0.0, acc_sum = 0.0;
    size_t acc_n = 0;
    for (const auto& m : cv.folds) {
        cov_sum += m.coverage;
        if (m.accuracy) {
            acc_sum += *m.accuracy;
            ++acc_n;
        }
    }
    cv.mean_coverage = cov_sum / static_cast<double>(k);
    double cov_var = 0.0;
    for (const auto& m : cv.folds) {
        cov_var += (m.coverage - cv.mean_coverage) * (m.coverage - cv.mean_coverage);
    }
    cv.stdev_coverage = std::sqrt(cov_var / static_cast<double>(k));
    if (acc_n > 0) {
        const double mean = acc_sum / static_cast<double>(acc_n);
        cv.mean_accuracy = mean;
        double var = 0.0;
        for (const auto& m : cv.folds) {
            if (m.accuracy) {
                var += (*m.accuracy - mean) * (*m.accuracy - mean);
            }
        }
        cv.stdev_accuracy = std::sqrt(var / static_cast<double>(acc_n));
    }
    return cv;
}

SweepCurve sweep_thresholds(std::span<const ValidationSample> samples,
                            std::span<const double> grid) {
    if (grid.empty()) {
        throw Error("sweep_thresholds: empty grid");
    }
    for (const double t : grid) {
        if (t < 0.0 || t > 1.0) {
            throw Error("sweep_thresholds: thresholds must lie in [0,1]");
        }
    }
    std::vector<double> sorted_grid(grid.begin(), grid.end());
    std::sort(sorted_grid.begin(), sorted_grid.end());

    SweepCurve curve;
    for (const double ta : sorted_grid) {
        for (const double tb : sorted_grid) {
            EnsembleConfig cfg;
            cfg.threshold_a = ta;
            cfg.threshold_b = tb;
            const PairStats stats = evaluate_threshold_pair(samples, cfg);
            SweepPoint point;
            point.threshold_a = ta;
            point.threshold_b = tb;
            point.metrics.mode = MetricsMode::ensemble_only;
            point.metrics.n_total = stats.n_total;
            point.metrics.n_assigned = stats.n_assigned;
            point.metrics.n_correct = stats.n_correct;
            point.metrics.coverage = stats.coverage();
            if (stats.has_accuracy()) {
                point.metrics.accuracy = stats.accuracy();
            }
            curve.points.push_back(std::move(point));
        }
    }
    return curve;
}

double measure_train_time(ModelKind kind, std::span<const TrainExample> data,
                          size_t n_features, size_t n_classes, const Hyperparams& hp,
                          uint64_t seed) {
    return timed_train(kind, data, n_features, n_classes, hp, seed).seconds;
}

} // namespace ticketd
