#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ticketd/ticket.hpp"

namespace ticketd {

/// Flattened, chain-free relabeling of resolver groups. Applying it twice
/// equals applying it once: no merged label ever appears as a key.
struct MergeMap {
    std::map<std::string, std::string> entries;
    std::set<std::string> zone_labels;

    bool empty() const { return entries.empty(); }

    /// Mapped label for `group`, or `group` itself when unmapped.
    const std::string& resolve(const std::string& group) const {
        auto it = entries.find(group);
        return it == entries.end() ? group : it->second;
    }
};

/// One merge family from the configuration document: members collapse into
/// merged_label. Zone families introduce a new placeholder label that the
/// rule engine resolves back from ticket metadata after classification.
struct MergeFamily {
    enum class Kind { escalation, zone };

    std::string merged_label;
    std::vector<std::string> members;
    Kind kind = Kind::escalation;
};

MergeMap build_merge_map(const std::vector<MergeFamily>& families);

/// Reads a merge configuration file: either a JSON document with a top-level
/// array (or {"families": [...]}) of {merged_label, members, kind}, or jsonl
/// with one family object per line.
std::vector<MergeFamily> load_merge_families(const std::filesystem::path& path);

/// Relabels every gold_group through the map. Ticket count is conserved.
TicketCorpus apply_merge(const TicketCorpus& corpus, const MergeMap& map);

/// Frequency cut of the corpus labels into a trainable head and a
/// rule-handled tail. retained_fraction is the head's ticket share.
struct LongTailSplit {
    std::set<std::string> head_labels;
    std::set<std::string> tail_labels;
    double retained_fraction = 0.0;
    double group_fraction = 0.0;
    /// False when meeting min_retained needed more than
    /// max_group_fraction * |label_set| groups (retention wins).
    bool group_cap_met = true;
};

/// Smallest descending-frequency prefix whose cumulative ticket share
/// reaches min_retained. Frequency ties break by lexicographic label order.
LongTailSplit split_long_tail(const TicketCorpus& corpus,
                              double min_retained = 0.98,
                              double max_group_fraction = 0.20);

/// Lowercased alphanumeric tokens of "subject body", runs of [a-z0-9]
/// of length >= 2, order preserved.
std::vector<std::string> normalize_text(std::string_view subject, std::string_view body);

} // namespace ticketd
