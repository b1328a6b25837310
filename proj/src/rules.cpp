#include "ticketd/rules.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

std::regex compile_pattern(std::string pattern, const std::string& where) {
    auto flags = std::regex::ECMAScript;
    while (pattern.rfind("(?i)", 0) == 0) {
        flags |= std::regex::icase;
        pattern.erase(0, 4);
    }
    try {
        return std::regex(pattern, flags);
    } catch (const std::regex_error& e) {
        throw Error(where + ": malformed pattern '" + pattern + "': " + e.what());
    }
}

Condition parse_condition(const json& j, const Rule& rule, size_t cond_index) {
    const std::string where =
        "rule '" + rule.name + "' condition " + std::to_string(cond_index);
    if (!j.is_object()) {
        throw Error(where + ": must be an object");
    }
    Condition c;
    const std::string field = j.at("field").get<std::string>();
    if (field == "subject") {
        c.field = Condition::Field::subject;
    } else if (field == "body") {
        c.field = Condition::Field::body;
    } else if (field == "predicted_group") {
        c.field = Condition::Field::predicted_group;
    } else if (field.rfind("metadata.", 0) == 0) {
        c.field = Condition::Field::metadata;
        c.metadata_key = field.substr(9);
        if (c.metadata_key.empty()) {
            throw Error(where + ": metadata condition needs a key (metadata.<key>)");
        }
    } else {
        throw Error(where + ": unknown field '" + field + "'");
    }

    const std::string matcher = j.at("matcher").get<std::string>();
    if (matcher == "regex") {
        c.matcher = Condition::Matcher::regex;
        c.value = j.at("value").get<std::string>();
        c.compiled = compile_pattern(c.value, where);
    } else if (matcher == "exact") {
        c.matcher = Condition::Matcher::exact;
        c.value = j.at("value").get<std::string>();
    } else if (matcher == "in") {
        c.matcher = Condition::Matcher::member_of;
        for (const auto& v : j.at("values")) {
            c.values.push_back(v.get<std::string>());
        }
        if (c.values.empty()) {
            throw Error(where + ": 'in' matcher needs a non-empty values list");
        }
    } else {
        throw Error(where + ": unknown matcher '" + matcher + "'");
    }
    return c;
}

RuleAction parse_action(const json& j, const Rule& rule) {
    const std::string where = "rule '" + rule.name + "' action";
    if (!j.is_object()) {
        throw Error(where + ": must be an object");
    }
    RuleAction a;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "assign") {
        a.kind = RuleAction::Kind::assign;
        a.group = j.at("group").get<std::string>();
        if (a.group.empty()) {
            throw Error(where + ": assign needs a non-empty group");
        }
    } else if (kind == "remap") {
        a.kind = RuleAction::Kind::remap;
        a.from = j.at("from").get<std::string>();
        a.to = j.at("to").get<std::string>();
        if (a.from.empty() || a.to.empty()) {
            throw Error(where + ": remap needs non-empty from and to");
        }
    } else if (kind == "resolve_zone") {
        a.kind = RuleAction::Kind::resolve_zone;
        a.metadata_key = j.at("metadata_key").get<std::string>();
        for (const auto& [loc, group] : j.at("map").items()) {
            a.zone_map[loc] = group.get<std::string>();
        }
        if (a.metadata_key.empty() || a.zone_map.empty()) {
            throw Error(where + ": resolve_zone needs a metadata_key and a non-empty map");
        }
    } else {
        throw Error(where + ": unknown kind '" + kind + "'");
    }
    return a;
}

Rule parse_rule(const json& j, size_t position) {
    const std::string where = "rule at position " + std::to_string(position);
    if (!j.is_object()) {
        throw Error(where + ": must be an object");
    }
    Rule r;
    r.name = j.value("name", "");
    if (r.name.empty()) {
        throw Error(where + ": missing name");
    }
    r.priority = j.at("priority").get<int>();
    const std::string stage = j.at("stage").get<std::string>();
    if (stage == "pre") {
        r.stage = Rule::Stage::pre;
    } else if (stage == "post") {
        r.stage = Rule::Stage::post;
    } else {
        throw Error("rule '" + r.name + "': unknown stage '" + stage + "'");
    }

    const auto& conditions = j.at("conditions");
    if (!conditions.is_array() || conditions.empty()) {
        throw Error("rule '" + r.name + "': needs at least one condition");
    }
    size_t cond_index = 0;
    for (const auto& cj : conditions) {
        r.conditions.push_back(parse_condition(cj, r, cond_index++));
    }
    r.action = parse_action(j.at("action"), r);

    if (r.stage == Rule::Stage::pre) {
        for (const auto& c : r.conditions) {
            if (c.field == Condition::Field::predicted_group) {
                throw Error("rule '" + r.name +
                            "': predicted_group conditions are only valid at stage=post");
            }
        }
        // remap and resolve_zone both consume the predicted group, so neither
        // can run before classification.
        if (r.action.kind != RuleAction::Kind::assign) {
            throw Error("rule '" + r.name +
                        "': only assign actions are valid at stage=pre");
        }
    }
    return r;
}

bool condition_matches(const Condition& c, const Ticket& ticket,
                       const std::string* predicted_group) {
    const std::string* text = nullptr;
    switch (c.field) {
        case Condition::Field::subject:
            text = &ticket.subject;
            break;
        case Condition::Field::body:
            text = &ticket.body;
            break;
        case Condition::Field::metadata: {
            auto it = ticket.metadata.find(c.metadata_key);
            if (it == ticket.metadata.end()) {
                return false;
            }
            text = &it->second;
            break;
        }
        case Condition::Field::predicted_group:
            if (predicted_group == nullptr) {
                return false;
            }
            text = predicted_group;
            break;
    }
    switch (c.matcher) {
        case Condition::Matcher::regex:
            return std::regex_search(*text, c.compiled);
        case Condition::Matcher::exact:
            return *text == c.value;
        case Condition::Matcher::member_of:
            return std::find(c.values.begin(), c.values.end(), *text) != c.values.end();
    }
    return false;
}

bool rule_matches(const Rule& r, const Ticket& ticket, const std::string* predicted_group) {
    for (const auto& c : r.conditions) {
        if (!condition_matches(c, ticket, predicted_group)) {
            return false;
        }
    }
    return true;
}

} // namespace

RuleSet RuleSet::parse(const std::string& document) {
    std::vector<Rule> rules;
    const std::string trimmed =
        document.find_first_not_of(" \t\r\n") == std::string::npos ? "[]" : document;
    json doc = json::parse(trimmed, nullptr, false);
    if (doc.is_discarded()) {
        throw Error("rule document: invalid JSON");
    }
    const json* list = &doc;
    if (doc.is_object() && doc.contains("rules")) {
        list = &doc.at("rules");
    }
    if (!list->is_array()) {
        throw Error("rule document must be a list of rules (or {\"rules\": [...]})");
    }
    std::set<std::string> names;
    size_t position = 0;
    for (const auto& j : *list) {
        Rule r = parse_rule(j, position++);
        if (!names.insert(r.name).second) {
            throw Error("duplicate rule name '" + r.name + "'");
        }
        rules.push_back(std::move(r));
    }
    std::stable_sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
        if (a.priority != b.priority) return a.priority < b.priority;
        return a.name < b.name;
    });
    return RuleSet(std::move(rules));
}

RuleSet RuleSet::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open rule file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<PreRuleHit> evaluate_pre(const Ticket& ticket, const RuleSet& rules) {
    for (const auto& r : rules.rules()) {
        if (r.stage != Rule::Stage::pre) {
            continue;
        }
        if (rule_matches(r, ticket, nullptr)) {
            return PreRuleHit{r.action.group, r.name};
        }
    }
    return std::nullopt;
}

PostRuleOutcome evaluate_post(const Ticket& ticket, const std::string& predicted_group,
                              double confidence, const RuleSet& rules) {
    PostRuleOutcome out;
    out.group = predicted_group;
    out.confidence = confidence;
    for (const auto& r : rules.rules()) {
        if (r.stage != Rule::Stage::post) {
            continue;
        }
        // A remap only concerns tickets predicted as its from-group.
        if (r.action.kind == RuleAction::Kind::remap && predicted_group != r.action.from) {
            continue;
        }
        if (!rule_matches(r, ticket, &predicted_group)) {
            continue;
        }
        out.rule_name = r.name;
        out.action_kind = r.action.kind;
        switch (r.action.kind) {
            case RuleAction::Kind::assign:
                out.group = r.action.group;
                out.confidence = 1.0;
                out.overridden = true;
                break;
            case RuleAction::Kind::remap:
                out.group = r.action.to;
                out.overridden = true;
                break;
            case RuleAction::Kind::resolve_zone: {
                auto meta = ticket.metadata.find(r.action.metadata_key);
                if (meta == ticket.metadata.end()) {
                    out.zone_unresolved = true;
                    break;
                }
                auto mapped = r.action.zone_map.find(meta->second);
                if (mapped == r.action.zone_map.end()) {
                    out.zone_unresolved = true;
                    break;
                }
                out.group = mapped->second;
                out.overridden = true;
                break;
            }
        }
        break; // first matching rule applies
    }
    return out;
}

} // namespace ticketd
