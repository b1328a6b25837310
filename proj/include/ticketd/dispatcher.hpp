#pragma once

#include <vector>

#include "ticketd/classifier.hpp"
#include "ticketd/decision.hpp"
#include "ticketd/ensemble.hpp"
#include "ticketd/rules.hpp"
#include "ticketd/ticket.hpp"
#include "ticketd/vectorizer.hpp"

namespace ticketd {

struct DispatchOptions {
    /// When set, post assign-rules may still rescue a ticket the ensemble
    /// abstained on (evaluated against the higher-confidence member's label).
    bool post_rule_rescue = true;
};

/// The dispatch algorithm over immutable parts: pre-rules -> ensemble ->
/// post-rules -> manual queue. Pure per ticket, safe under concurrent callers.
///
/// The engine only views vocab/codec/models/rules; the caller keeps them
/// alive for the engine's lifetime.
class AssignmentEngine {
public:
    AssignmentEngine(const Vocabulary& vocab, const LabelCodec& codec, const Model& model_a,
                     const Model& model_b, const EnsembleConfig& cfg, const RuleSet& rules,
                     DispatchOptions options = {});
    AssignmentEngine(const Vocabulary&, const LabelCodec&, const Model&, const Model&,
                     const EnsembleConfig&, RuleSet&&, DispatchOptions = {}) = delete;

    DispatchDecision dispatch(const Ticket& ticket) const;

    /// Element-wise dispatch preserving input order; a per-ticket failure is
    /// recorded in that ticket's decision instead of aborting the batch.
    std::vector<DispatchDecision> dispatch_batch(const TicketCorpus& corpus) const;

    const EnsembleConfig& config() const { return cfg_; }
    const LabelCodec& codec() const { return *codec_; }

private:
    const Vocabulary* vocab_;
    const LabelCodec* codec_;
    const Model* model_a_;
    const Model* model_b_;
    EnsembleConfig cfg_;
    const RuleSet* rules_;
    DispatchOptions options_;
};

/// Fixed-precision confidence formatting used in stage traces.
std::string format_confidence(double value);

} // namespace ticketd
