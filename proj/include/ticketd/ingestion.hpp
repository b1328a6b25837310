#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ticketd/decision.hpp"
#include "ticketd/ticket.hpp"

namespace ticketd {

enum class CorpusFormat { jsonl, csv };

CorpusFormat corpus_format_from_string(const std::string& s);

/// Per-record rejection diagnostic. `line` is 1-based in the source file.
struct RecordError {
    size_t line = 0;
    std::string id;
    std::string reason;
};

struct LoadResult {
    TicketCorpus corpus;
    std::vector<RecordError> rejected;
};

/// Loads a ticket corpus, preserving file order. Invalid records are
/// rejected with diagnostics; throws only on unreadable files, an unusable
/// header, or when zero valid records remain.
LoadResult load_tickets(const std::filesystem::path& path, CorpusFormat format);

/// Writes a corpus in the canonical jsonl schema.
void write_tickets_jsonl(const TicketCorpus& corpus, const std::filesystem::path& path);

/// Writes one jsonl record per decision: {id, group, confidence, source,
/// trace}. Round-trips losslessly through read_assignments.
void write_assignments(const std::vector<DispatchDecision>& decisions,
                       const std::filesystem::path& path);

std::vector<DispatchDecision> read_assignments(const std::filesystem::path& path);

} // namespace ticketd
