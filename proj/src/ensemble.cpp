#include "ticketd/ensemble.hpp"

#include <algorithm>

#include "ticketd/error.hpp"

namespace ticketd {

std::string to_string(Contributor c) {
    switch (c) {
        case Contributor::a: return "a";
        case Contributor::b: return "b";
        case Contributor::both: return "both";
        case Contributor::none: return "none";
    }
    return "none";
}

EnsemblePrediction combine(const ScoredPrediction& pred_a, const ScoredPrediction& pred_b,
                           const EnsembleConfig& cfg) {
    if (pred_a.distribution.size() != pred_b.distribution.size()) {
        throw Error("combine: members disagree on class count (codec mismatch)");
    }
    const bool qa = pred_a.top_confidence >= cfg.threshold_a;
    const bool qb = pred_b.top_confidence >= cfg.threshold_b;

    EnsemblePrediction out;
    if (!qa && !qb) {
        return out; // abstain
    }
    out.assigned = true;
    if (qa && !qb) {
        out.label_class = pred_a.top_class;
        out.confidence = pred_a.top_confidence;
        out.contributor = Contributor::a;
    } else if (qb && !qa) {
        out.label_class = pred_b.top_class;
        out.confidence = pred_b.top_confidence;
        out.contributor = Contributor::b;
    } else if (pred_a.top_class == pred_b.top_class) {
        out.label_class = pred_a.top_class;
        out.confidence = std::max(pred_a.top_confidence, pred_b.top_confidence);
        out.contributor = Contributor::both;
    } else {
        // Disagreement: larger headroom above its own threshold wins; comparing
        // raw confidences would bias toward the better-calibrated member.
        const double headroom_a = pred_a.top_confidence - cfg.threshold_a;
        const double headroom_b = pred_b.top_confidence - cfg.threshold_b;
        if (headroom_a >= headroom_b) {
            out.label_class = pred_a.top_class;
            out.confidence = pred_a.top_confidence;
            out.contributor = Contributor::a;
        } else {
            out.label_class = pred_b.top_class;
            out.confidence = pred_b.top_confidence;
            out.contributor = Contributor::b;
        }
    }
    return out;
}

PairStats evaluate_threshold_pair(std::span<const ValidationSample> samples,
                                  const EnsembleConfig& cfg) {
    PairStats stats;
    stats.n_total = samples.size();
    for (const auto& s : samples) {
        const EnsemblePrediction p = combine(s.a, s.b, cfg);
        if (!p.assigned) {
            continue;
        }
        ++stats.n_assigned;
        if (s.gold_class >= 0 && p.label_class == s.gold_class) {
            ++stats.n_correct;
        }
    }
    return stats;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 9; ++i) {
        grid.push_back(static_cast<double>(i) / 10.0);
    }
    return grid;
}

ThresholdSelection select_thresholds(std::span<const ValidationSample> samples,
                                     ModelKind member_a, ModelKind member_b,
                                     double target_accuracy,
                                     std::span<const double> grid) {
    if (samples.empty()) {
        throw Error("select_thresholds: empty validation set");
    }
    if (grid.empty()) {
        throw Error("select_thresholds: empty threshold grid");
    }
    for (const double t : grid) {
        if (t < 0.0 || t > 1.0) {
            throw Error("select_thresholds: thresholds must lie in [0,1]");
        }
    }
    std::vector<double> sorted_grid(grid.begin(), grid.end());
    std::sort(sorted_grid.begin(), sorted_grid.end());

    ThresholdSelection best_meeting;
    ThresholdSelection best_overall;
    bool have_meeting = false;
    bool have_overall = false;

    for (const double ta : sorted_grid) {
        for (const double tb : sorted_grid) {
            EnsembleConfig cfg;
            cfg.member_a = member_a;
            cfg.member_b = member_b;
            cfg.threshold_a = ta;
            cfg.threshold_b = tb;
            cfg.target_accuracy = target_accuracy;
            const PairStats stats = evaluate_threshold_pair(samples, cfg);
            const double acc = stats.has_accuracy() ? stats.accuracy() : -1.0;
            const double cov = stats.coverage();

            // Fallback candidate: maximum accuracy, then coverage, then the
            // lower thresholds. The ascending scan makes "first wins" the
            // lower-threshold tie-break.
            if (!have_overall || acc > best_overall.accuracy ||
                (acc == best_overall.accuracy && cov > best_overall.coverage)) {
                best_overall = {cfg, acc, cov, false};
                have_overall = true;
            }
            if (stats.has_accuracy() && acc >= target_accuracy) {
                if (!have_meeting || cov > best_meeting.coverage ||
                    (cov == best_meeting.coverage && acc > best_meeting.accuracy)) {
                    best_meeting = {cfg, acc, cov, true};
                    have_meeting = true;
                }
            }
        }
    }
    if (have_meeting) {
        return best_meeting;
    }
    best_overall.accuracy = std::max(best_overall.accuracy, 0.0);
    return best_overall;
}

} // namespace ticketd
