#include "ticketd/dispatcher.hpp"

#include <cstdio>

#include "ticketd/error.hpp"
#include "ticketd/preprocess.hpp"

namespace ticketd {

std::string format_confidence(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

AssignmentEngine::AssignmentEngine(const Vocabulary& vocab, const LabelCodec& codec,
                                   const Model& model_a, const Model& model_b,
                                   const EnsembleConfig& cfg, const RuleSet& rules,
                                   DispatchOptions options)
    : vocab_(&vocab),
      codec_(&codec),
      model_a_(&model_a),
      model_b_(&model_b),
      cfg_(cfg),
      rules_(&rules),
      options_(options) {
    if (model_a.n_classes != codec.size() || model_b.n_classes != codec.size()) {
        throw Error("dispatch: model class count does not match the label codec");
    }
    if (model_a.n_features != vocab.size() || model_b.n_features != vocab.size()) {
        throw Error("dispatch: model feature count does not match the vocabulary");
    }
}

DispatchDecision AssignmentEngine::dispatch(const Ticket& ticket) const {
    DispatchDecision d;
    d.ticket_id = ticket.id;

    const auto pre = evaluate_pre(ticket, *rules_);
    if (pre) {
        d.trace.push_back({"pre_rules", "hit:" + pre->rule_name + "->" + pre->group});
        d.trace.push_back({"ensemble", "skipped"});
        d.trace.push_back({"post_rules", "skipped"});
        d.group = pre->group;
        d.confidence = 1.0;
        d.source = DecisionSource::rule_pre;
        return d;
    }
    d.trace.push_back({"pre_rules", "no_match"});

    const auto tokens = normalize_text(ticket.subject, ticket.body);
    const SparseVector x = transform(tokens, *vocab_);
    const ScoredPrediction pa = predict(*model_a_, x);
    const ScoredPrediction pb = predict(*model_b_, x);
    const EnsemblePrediction combined = combine(pa, pb, cfg_);

    const std::string label_a = codec_->label(pa.top_class);
    const std::string label_b = codec_->label(pb.top_class);
    std::string ensemble_outcome = "a:" + label_a + "@" + format_confidence(pa.top_confidence) +
                                   " b:" + label_b + "@" + format_confidence(pb.top_confidence);

    if (combined.assigned) {
        const std::string label = codec_->label(combined.label_class);
        d.trace.push_back({"ensemble", ensemble_outcome + " assign:" + label + "@" +
                                           format_confidence(combined.confidence) +
                                           " by=" + to_string(combined.contributor)});
        const PostRuleOutcome post =
            evaluate_post(ticket, label, combined.confidence, *rules_);
        if (post.overridden) {
            d.trace.push_back({"post_rules", "override:" + post.rule_name + "->" + post.group});
            d.group = post.group;
            d.confidence = post.confidence;
            d.source = DecisionSource::rule_post;
        } else {
            d.trace.push_back({"post_rules", post.zone_unresolved
                                                 ? "zone_unresolved:" + post.rule_name
                                                 : "no_match"});
            d.group = label;
            d.confidence = combined.confidence;
            d.source = DecisionSource::ensemble;
        }
        return d;
    }

    d.trace.push_back({"ensemble", ensemble_outcome + " abstain"});
    const bool a_leads = pa.top_confidence >= pb.top_confidence;
    const std::string& best_label = a_leads ? label_a : label_b;
    const double best_confidence = a_leads ? pa.top_confidence : pb.top_confidence;

    if (options_.post_rule_rescue) {
        const PostRuleOutcome post =
            evaluate_post(ticket, best_label, best_confidence, *rules_);
        // Only an assign action (confidence 1.0) can rescue an abstention;
        // remap/resolve_zone keep the sub-threshold confidence.
        if (post.overridden && post.action_kind == RuleAction::Kind::assign) {
            d.trace.push_back({"post_rules", "rescue:" + post.rule_name + "->" + post.group});
            d.group = post.group;
            d.confidence = post.confidence;
            d.source = DecisionSource::rule_post;
            return d;
        }
        d.trace.push_back({"post_rules", "no_rescue"});
    } else {
        d.trace.push_back({"post_rules", "skipped"});
    }

    d.group = std::string(kManualQueue);
    d.confidence = best_confidence;
    d.source = DecisionSource::manual;
    return d;
}

std::vector<DispatchDecision> AssignmentEngine::dispatch_batch(
    const TicketCorpus& corpus) const {
    std::vector<DispatchDecision> decisions;
    decisions.reserve(corpus.tickets.size());
    for (const auto& ticket : corpus.tickets) {
        try {
            decisions.push_back(dispatch(ticket));
        } catch (const std::exception& e) {
            DispatchDecision d;
            d.ticket_id = ticket.id;
            d.group = std::string(kManualQueue);
            d.confidence = 0.0;
            d.source = DecisionSource::manual;
            d.trace.push_back({"error", e.what()});
            decisions.push_back(std::move(d));
        }
    }
    return decisions;
}

} // namespace ticketd
