#include "ticketd/ingestion.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

std::string stringify(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

/// Field-level validation shared by both formats. Returns a non-empty reason
/// on rejection.
std::string check_ticket(const Ticket& t) {
    if (t.id.empty()) {
        return "missing or empty id";
    }
    if (t.subject.empty() && t.body.empty()) {
        return "subject and body are both empty";
    }
    if (t.gold_group && *t.gold_group == kManualQueue) {
        return "gold_group uses the reserved manual-queue label";
    }
    return {};
}

bool parse_jsonl_record(const std::string& line, Ticket& out, std::string& reason) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        reason = "invalid JSON object";
        return false;
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "id" || key == "subject" || key == "body") {
            if (!value.is_string()) {
                reason = "field '" + key + "' must be a string";
                return false;
            }
        }
    }
    if (!j.contains("id")) {
        reason = "missing or empty id";
        return false;
    }
    out.id = j.value("id", "");
    out.subject = j.value("subject", "");
    out.body = j.value("body", "");
    if (j.contains("gold_group") && !j.at("gold_group").is_null()) {
        const std::string g = stringify(j.at("gold_group"));
        if (!g.empty()) {
            out.gold_group = g;
        }
    }
    if (j.contains("metadata")) {
        if (!j.at("metadata").is_object()) {
            reason = "field 'metadata' must be an object";
            return false;
        }
        for (const auto& [key, value] : j.at("metadata").items()) {
            out.metadata[key] = stringify(value);
        }
    }
    // Unknown extra fields are preserved as metadata; adapters differ per tool.
    for (const auto& [key, value] : j.items()) {
        if (key == "id" || key == "subject" || key == "body" || key == "gold_group" ||
            key == "metadata") {
            continue;
        }
        out.metadata.emplace(key, stringify(value));
    }
    return true;
}

/// Quote-aware split of one CSV line (RFC-style doubled quotes; records do
/// not span lines). Returns false on an unterminated quote.
bool split_csv_line(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::string cur;
    bool in_quote = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            if (in_quote && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else {
                in_quote = !in_quote;
            }
        } else if (c == ',' && !in_quote) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return !in_quote;
}

LoadResult load_jsonl(std::istream& in) {
    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        Ticket t;
        std::string reason;
        if (!parse_jsonl_record(line, t, reason)) {
            result.rejected.push_back({lineno, t.id, reason});
            continue;
        }
        reason = check_ticket(t);
        if (!reason.empty()) {
            result.rejected.push_back({lineno, t.id, reason});
            continue;
        }
        if (!seen_ids.insert(t.id).second) {
            result.rejected.push_back({lineno, t.id, "duplicate id '" + t.id + "'"});
            continue;
        }
        result.corpus.tickets.push_back(std::move(t));
    }
    return result;
}

LoadResult load_csv(std::istream& in, const std::string& path_for_errors) {
    std::string header;
    if (!std::getline(in, header)) {
        throw Error("csv file has no header row: " + path_for_errors);
    }
    if (!header.empty() && header.back() == '\r') {
        header.pop_back();
    }
    std::vector<std::string> columns;
    if (!split_csv_line(header, columns)) {
        throw Error("csv header has an unterminated quote: " + path_for_errors);
    }
    auto column_of = [&](const std::string& name) -> int {
        for (size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int id_col = column_of("id");
    const int subject_col = column_of("subject");
    const int body_col = column_of("body");
    if (id_col < 0 || subject_col < 0 || body_col < 0) {
        throw Error("csv header must contain id, subject and body columns: " +
                    path_for_errors);
    }

    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t lineno = 1; // header was line 1
    std::vector<std::string> cells;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!split_csv_line(line, cells)) {
            result.rejected.push_back({lineno, "", "unterminated quote"});
            continue;
        }
        if (cells.size() != columns.size()) {
            result.rejected.push_back(
                {lineno, "",
                 "expected " + std::to_string(columns.size()) + " columns, got " +
                     std::to_string(cells.size())});
            continue;
        }
        Ticket t;
        for (size_t i = 0; i < columns.size(); ++i) {
            const std::string& name = columns[i];
            const std::string& value = cells[i];
            if (static_cast<int>(i) == id_col) {
                t.id = value;
            } else if (static_cast<int>(i) == subject_col) {
                t.subject = value;
            } else if (static_cast<int>(i) == body_col) {
                t.body = value;
            } else if (name == "gold_group") {
                if (!value.empty()) {
                    t.gold_group = value;
                }
            } else if (name.rfind("meta_", 0) == 0) {
                if (!value.empty()) {
                    t.metadata[name.substr(5)] = value;
                }
            } else if (!value.empty()) {
                t.metadata[name] = value; // unknown columns kept as metadata
            }
        }
        const std::string reason = check_ticket(t);
        if (!reason.empty()) {
            result.rejected.push_back({lineno, t.id, reason});
            continue;
        }
        if (!seen_ids.insert(t.id).second) {
            result.rejected.push_back({lineno, t.id, "duplicate id '" + t.id + "'"});
            continue;
        }
        result.corpus.tickets.push_back(std::move(t));
    }
    return result;
}

} // namespace

CorpusFormat corpus_format_from_string(const std::string& s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "csv") return CorpusFormat::csv;
    throw Error("unknown corpus format '" + s + "' (expected jsonl or csv)");
}

LoadResult load_tickets(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open ticket file: " + path.string());
    }
    LoadResult result = format == CorpusFormat::jsonl ? load_jsonl(in)
                                                      : load_csv(in, path.string());
    if (result.corpus.tickets.empty()) {
        throw Error("no valid records in " + path.string() + " (" +
                    std::to_string(result.rejected.size()) + " rejected)");
    }
    result.corpus.rebuild_label_set();
    return result;
}

void write_tickets_jsonl(const TicketCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open ticket file for writing: " + path.string());
    }
    for (const auto& t : corpus.tickets) {
        json j = {{"id", t.id}, {"subject", t.subject}, {"body", t.body}};
        if (t.gold_group) {
            j["gold_group"] = *t.gold_group;
        }
        if (!t.metadata.empty()) {
            j["metadata"] = t.metadata;
        }
        out << j.dump() << '\n';
    }
    if (!out) {
        throw Error("failed while writing tickets: " + path.string());
    }
}

void write_assignments(const std::vector<DispatchDecision>& decisions,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open assignments file for writing: " + path.string());
    }
    for (const auto& d : decisions) {
        json trace = json::array();
        for (const auto& r : d.trace) {
            trace.push_back({{"stage", r.stage}, {"outcome", r.outcome}});
        }
        const json j = {{"id", d.ticket_id},
                        {"group", d.group},
                        {"confidence", d.confidence},
                        {"source", to_string(d.source)},
                        {"trace", trace}};
        out << j.dump() << '\n';
    }
    if (!out) {
        throw Error("failed while writing assignments: " + path.string());
    }
}

std::vector<DispatchDecision> read_assignments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open assignments file: " + path.string());
    }
    std::vector<DispatchDecision> decisions;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error("assignments line " + std::to_string(lineno) + ": invalid JSON");
        }
        DispatchDecision d;
        d.ticket_id = j.at("id").get<std::string>();
        d.group = j.at("group").get<std::string>();
        d.confidence = j.at("confidence").get<double>();
        d.source = decision_source_from_string(j.at("source").get<std::string>());
        for (const auto& r : j.value("trace", json::array())) {
            d.trace.push_back({r.at("stage").get<std::string>(),
                               r.at("outcome").get<std::string>()});
        }
        decisions.push_back(std::move(d));
    }
    return decisions;
}

} // namespace ticketd
