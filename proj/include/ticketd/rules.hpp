#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "ticketd/ticket.hpp"

namespace ticketd {

/// One predicate over a ticket field or the predicted group. Patterns are
/// ECMAScript regexes; a leading "(?i)" selects case-insensitive matching.
struct Condition {
    enum class Field { subject, body, metadata, predicted_group };
    enum class Matcher { regex, exact, member_of };

    Field field = Field::subject;
    std::string metadata_key; // for Field::metadata
    Matcher matcher = Matcher::exact;
    std::string value;               // regex pattern or exact string
    std::vector<std::string> values; // member_of set
    std::regex compiled;             // regex matcher only
};

struct RuleAction {
    enum class Kind { assign, remap, resolve_zone };

    Kind kind = Kind::assign;
    std::string group;        // assign
    std::string from;         // remap
    std::string to;           // remap
    std::string metadata_key; // resolve_zone
    std::map<std::string, std::string> zone_map;
};

/// Declarative rule: all conditions must match (conjunction); lower priority
/// evaluates first, name breaks priority ties.
struct Rule {
    std::string name;
    int priority = 0;
    enum class Stage { pre, post } stage = Stage::pre;
    std::vector<Condition> conditions;
    RuleAction action;
};

/// Immutable, validated rule collection held in evaluation order
/// (priority, name) regardless of file order.
class RuleSet {
public:
    RuleSet() = default;

    static RuleSet parse(const std::string& document);
    static RuleSet from_file(const std::filesystem::path& path);

    const std::vector<Rule>& rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }
    size_t size() const { return rules_.size(); }

private:
    explicit RuleSet(std::vector<Rule> rules) : rules_(std::move(rules)) {}
    std::vector<Rule> rules_;
};

struct PreRuleHit {
    std::string group;
    std::string rule_name;
};

/// First pre-stage rule (in evaluation order) whose conditions all match.
std::optional<PreRuleHit> evaluate_pre(const Ticket& ticket, const RuleSet& rules);

struct PostRuleOutcome {
    std::string group;
    double confidence = 0.0;
    bool overridden = false;
    bool zone_unresolved = false;
    std::string rule_name; // set when a rule matched, even if unresolved
    RuleAction::Kind action_kind = RuleAction::Kind::assign;
};

/// Applies the first matching post-stage rule to the predicted (group,
/// confidence): assign replaces the group at confidence 1.0, remap swaps the
/// group keeping confidence, resolve_zone maps the ticket's metadata location
/// to a concrete group (unmapped locations pass through flagged unresolved).
PostRuleOutcome evaluate_post(const Ticket& ticket, const std::string& predicted_group,
                              double confidence, const RuleSet& rules);

} // namespace ticketd
