#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ticketd/error.hpp"

namespace ticketd {

/// Reserved sentinel group for tickets the engine abstains on. Rejected as a
/// gold label at load time so it can never collide with a real resolver group.
inline constexpr std::string_view kManualQueue = "MANUAL_QUEUE";

enum class DecisionSource { rule_pre, ensemble, rule_post, manual };

inline std::string to_string(DecisionSource s) {
    switch (s) {
        case DecisionSource::rule_pre: return "rule_pre";
        case DecisionSource::ensemble: return "ensemble";
        case DecisionSource::rule_post: return "rule_post";
        case DecisionSource::manual: return "manual";
    }
    return "manual";
}

inline DecisionSource decision_source_from_string(const std::string& s) {
    if (s == "rule_pre") return DecisionSource::rule_pre;
    if (s == "ensemble") return DecisionSource::ensemble;
    if (s == "rule_post") return DecisionSource::rule_post;
    if (s == "manual") return DecisionSource::manual;
    throw Error("unknown decision source: " + s);
}

/// One audit record per pipeline stage, in execution order.
struct StageRecord {
    std::string stage;
    std::string outcome;

    bool operator==(const StageRecord&) const = default;
};

/// Final routing verdict for one ticket. source == manual iff group is the
/// manual-queue sentinel.
struct DispatchDecision {
    std::string ticket_id;
    std::string group;
    double confidence = 0.0;
    DecisionSource source = DecisionSource::manual;
    std::vector<StageRecord> trace;

    bool operator==(const DispatchDecision&) const = default;
};

} // namespace ticketd
