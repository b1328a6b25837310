#pragma once

#include <string>
#include <vector>

#include "ticketd/bundle.hpp"
#include "ticketd/config.hpp"
#include "ticketd/dispatcher.hpp"
#include "ticketd/ensemble.hpp"
#include "ticketd/evaluation.hpp"
#include "ticketd/rules.hpp"
#include "ticketd/ticket.hpp"

namespace ticketd {

struct TrainResult {
    ModelBundle bundle;
    /// Present when thresholds were selected against a validation split.
    std::optional<ThresholdSelection> selection;
    std::map<std::string, double> train_seconds; // per member kind
    std::vector<std::string> warnings;
};

/// Full training pipeline: merge groups, cut the long tail, fit the
/// vocabulary on head tickets, train both ensemble members and fix the
/// thresholds. Deterministic for a given (corpus, config).
TrainResult train_pipeline(const TicketCorpus& corpus, const PipelineConfig& config,
                           const std::string& data_digest = "");

/// Gold labels for evaluation: merged label plus the original when merging
/// changed it (zone rules may restore the original).
GoldMap build_gold_map(const TicketCorpus& corpus, const MergeMap& merge);

struct EvalReport {
    Metrics ensemble_only; // rules disabled (X metrics)
    Metrics full_engine;   // rules enabled (E metrics)
    size_t n_tickets = 0;

    std::string to_text() const;
    std::string to_jsonl() const;
};

/// Dispatches the corpus twice, with and without the rule set, and reports
/// both metric rows. The rules-off run is the exact counterfactual.
EvalReport evaluate_engine(const TicketCorpus& corpus, const ModelBundle& bundle,
                           const RuleSet& rules);

/// Member predictions cached per ticket, for threshold sweeps and selection.
std::vector<ValidationSample> cache_predictions(const TicketCorpus& corpus,
                                                const ModelBundle& bundle);

std::string sweep_to_jsonl(const SweepCurve& curve);

} // namespace ticketd
