#include "ticketd/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

MergeFamily family_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error("merge family must be an object");
    }
    MergeFamily f;
    f.merged_label = j.at("merged_label").get<std::string>();
    for (const auto& m : j.at("members")) {
        f.members.push_back(m.get<std::string>());
    }
    const std::string kind = j.value("kind", "escalation");
    if (kind == "escalation") {
        f.kind = MergeFamily::Kind::escalation;
    } else if (kind == "zone") {
        f.kind = MergeFamily::Kind::zone;
    } else {
        throw Error("merge family '" + f.merged_label + "': unknown kind '" + kind + "'");
    }
    if (f.merged_label.empty() || f.members.empty()) {
        throw Error("merge family needs a merged_label and at least one member");
    }
    return f;
}

} // namespace

MergeMap build_merge_map(const std::vector<MergeFamily>& families) {
    MergeMap map;
    for (const auto& f : families) {
        for (const auto& member : f.members) {
            if (member == f.merged_label) {
                continue; // the default level maps to itself; not an entry
            }
            auto it = map.entries.find(member);
            if (it != map.entries.end() && it->second != f.merged_label) {
                throw Error("label '" + member + "' is assigned to both '" + it->second +
                            "' and '" + f.merged_label + "'");
            }
            map.entries[member] = f.merged_label;
        }
        if (f.kind == MergeFamily::Kind::zone) {
            map.zone_labels.insert(f.merged_label);
        }
    }
    for (const auto& [from, to] : map.entries) {
        if (map.entries.count(to)) {
            throw Error("merged label '" + to + "' is itself merged away (chain via '" +
                        from + "')");
        }
    }
    return map;
}

std::vector<MergeFamily> load_merge_families(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open merge configuration: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::vector<MergeFamily> families;
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (!doc.is_discarded()) {
        const nlohmann::json* list = &doc;
        if (doc.is_object() && doc.contains("families")) {
            list = &doc.at("families");
        }
        if (!list->is_array()) {
            throw Error("merge configuration must be a list of families: " + path.string());
        }
        for (const auto& j : *list) {
            families.push_back(family_from_json(j));
        }
        return families;
    }

    // jsonl fallback: one family object per line
    std::istringstream lines(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error("merge configuration line " + std::to_string(lineno) +
                        ": invalid JSON");
        }
        families.push_back(family_from_json(j));
    }
    return families;
}

TicketCorpus apply_merge(const TicketCorpus& corpus, const MergeMap& map) {
    TicketCorpus out;
    out.tickets.reserve(corpus.tickets.size());
    for (const auto& t : corpus.tickets) {
        Ticket copy = t;
        if (copy.gold_group) {
            copy.gold_group = map.resolve(*copy.gold_group);
        }
        out.tickets.push_back(std::move(copy));
    }
    out.rebuild_label_set();
    return out;
}

LongTailSplit split_long_tail(const TicketCorpus& corpus,
                              double min_retained,
                              double max_group_fraction) {
    if (corpus.tickets.empty()) {
        throw Error("split_long_tail: empty corpus");
    }
    std::map<std::string, size_t> freq;
    for (const auto& t : corpus.tickets) {
        if (!t.gold_group) {
            throw Error("split_long_tail: ticket '" + t.id + "' has no gold group");
        }
        ++freq[*t.gold_group];
    }

    // Descending frequency, ties by label.
    std::vector<std::pair<std::string, size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const double total = static_cast<double>(corpus.tickets.size());
    LongTailSplit split;
    size_t cum = 0;
    size_t head_count = 0;
    for (const auto& [label, n] : ranked) {
        if (head_count > 0 && static_cast<double>(cum) / total >= min_retained) {
            split.tail_labels.insert(label);
            continue;
        }
        split.head_labels.insert(label);
        cum += n;
        ++head_count;
    }
    split.retained_fraction = static_cast<double>(cum) / total;
    split.group_fraction =
        static_cast<double>(head_count) / static_cast<double>(ranked.size());
    split.group_cap_met =
        static_cast<double>(head_count) <= max_group_fraction * static_cast<double>(ranked.size());
    return split;
}

std::vector<std::string> normalize_text(std::string_view subject, std::string_view body) {
    constexpr size_t kMinTokenLen = 2;
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= kMinTokenLen) {
            tokens.push_back(current);
        }
        current.clear();
    };
    auto scan = [&](std::string_view text) {
        for (const char ch : text) {
            const unsigned char c = static_cast<unsigned char>(ch);
            if (std::isalnum(c)) {
                current.push_back(static_cast<char>(std::tolower(c)));
            } else {
                flush();
            }
        }
        flush(); // subject/body boundary acts as a separator
    };
    scan(subject);
    scan(body);
    return tokens;
}

} // namespace ticketd
