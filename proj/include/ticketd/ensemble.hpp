#pragma once

#include <span>
#include <vector>

#include "ticketd/classifier.hpp"

namespace ticketd {

/// Two classifiers with per-member confidence thresholds. A prediction
/// qualifies when its top confidence reaches the member's threshold.
struct EnsembleConfig {
    ModelKind member_a = ModelKind::svm;
    ModelKind member_b = ModelKind::mlp;
    double threshold_a = 0.5;
    double threshold_b = 0.6;
    double target_accuracy = 0.85;

    bool operator==(const EnsembleConfig&) const = default;
};

enum class Contributor { a, b, both, none };

std::string to_string(Contributor c);

struct EnsemblePrediction {
    bool assigned = false;
    int label_class = -1; // class index under the shared codec
    double confidence = 0.0;
    Contributor contributor = Contributor::none;
};

/// Combination rule: no qualifying member -> abstain; one -> its verdict;
/// both agreeing -> that label at max confidence; both disagreeing -> the
/// member with larger headroom (confidence minus own threshold), member_a on
/// a headroom tie.
EnsemblePrediction combine(const ScoredPrediction& pred_a, const ScoredPrediction& pred_b,
                           const EnsembleConfig& cfg);

/// Cached member predictions for one validation ticket.
struct ValidationSample {
    ScoredPrediction a;
    ScoredPrediction b;
    int gold_class = -1; // -1 when the gold label is outside the codec
};

struct PairStats {
    size_t n_total = 0;
    size_t n_assigned = 0;
    size_t n_correct = 0;

    double coverage() const {
        return n_total == 0 ? 0.0
                            : static_cast<double>(n_assigned) / static_cast<double>(n_total);
    }
    bool has_accuracy() const { return n_assigned > 0; }
    double accuracy() const {
        return static_cast<double>(n_correct) / static_cast<double>(n_assigned);
    }
};

/// Accuracy-on-assigned and coverage of one (threshold_a, threshold_b) pair
/// over cached predictions.
PairStats evaluate_threshold_pair(std::span<const ValidationSample> samples,
                                  const EnsembleConfig& cfg);

struct ThresholdSelection {
    EnsembleConfig config;
    double accuracy = 0.0;
    double coverage = 0.0;
    bool target_met = false;
};

std::vector<double> default_threshold_grid(); // 0.1 .. 0.9 step 0.1

/// Exhaustive grid search. Among pairs whose accuracy-on-assigned meets the
/// target, picks maximum coverage (ties: higher accuracy, lower threshold_a,
/// lower threshold_b). When no pair meets the target, returns the maximum
/// accuracy pair with target_met = false.
ThresholdSelection select_thresholds(std::span<const ValidationSample> samples,
                                     ModelKind member_a, ModelKind member_b,
                                     double target_accuracy,
                                     std::span<const double> grid);

} // namespace ticketd
