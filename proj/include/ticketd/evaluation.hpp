#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ticketd/decision.hpp"
#include "ticketd/ensemble.hpp"
#include "ticketd/ticket.hpp"

namespace ticketd {

enum class MetricsMode { ensemble_only, full_engine };

std::string to_string(MetricsMode mode);

/// Selective accuracy over auto-assigned tickets plus coverage over all.
/// accuracy is absent when nothing was assigned.
struct Metrics {
    std::optional<double> accuracy;
    double coverage = 0.0;
    size_t n_total = 0;
    size_t n_assigned = 0;
    size_t n_correct = 0;
    double train_time_s = 0.0;
    MetricsMode mode = MetricsMode::ensemble_only;
};

/// Expected assignment for one ticket. A decision is correct when it matches
/// `merged` (the label after group merging) or `raw` (the original label,
/// e.g. a zone-specific group a post rule may restore).
struct GoldLabel {
    std::string merged;
    std::optional<std::string> raw;

    bool matches(const std::string& group) const {
        return group == merged || (raw && group == *raw);
    }
};

using GoldMap = std::unordered_map<std::string, GoldLabel>;

Metrics compute_metrics(const std::vector<DispatchDecision>& decisions, const GoldMap& gold,
                        MetricsMode mode);

struct HoldoutSplit {
    TicketCorpus train;
    TicketCorpus test;
    std::vector<std::string> warnings;
};

/// Stratified 90:10-style split, deterministic under the seed. Classes too
/// small to stratify stay in train and are reported as warnings.
HoldoutSplit split_holdout(const TicketCorpus& corpus, double test_fraction, uint64_t seed);

/// Trains and evaluates one fold: the callback owns the whole per-fold
/// pipeline (vocabulary fit, training, dispatch) so nothing leaks from the
/// held-out fold.
using FoldEvaluator =
    std::function<Metrics(const TicketCorpus& train, const TicketCorpus& test)>;

struct CrossValidation {
    std::vector<Metrics> folds;
    std::optional<double> mean_accuracy;
    std::optional<double> stdev_accuracy;
    double mean_coverage = 0.0;
    double stdev_coverage = 0.0;
};

CrossValidation cross_validate(const TicketCorpus& corpus, size_t k,
                               const FoldEvaluator& evaluate, uint64_t seed);

struct SweepPoint {
    double threshold_a = 0.0;
    double threshold_b = 0.0;
    Metrics metrics;
};

struct SweepCurve {
    std::vector<SweepPoint> points; // threshold_a outer loop, ascending
};

/// Exhaustive grid evaluation over cached member predictions (no
/// re-inference). Thresholds outside [0,1] are rejected.
SweepCurve sweep_thresholds(std::span<const ValidationSample> samples,
                            std::span<const double> grid);

/// Wall-clock seconds spent inside train() alone.
double measure_train_time(ModelKind kind, std::span<const TrainExample> data,
                          size_t n_features, size_t n_classes, const Hyperparams& hp,
                          uint64_t seed);

} // namespace ticketd
