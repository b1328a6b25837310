#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketd/ticket.hpp"

namespace ticketd::synthetic {

/// Synthetic helpdesk corpus: 40 resolver groups with a zipfian long tail,
/// per-class keyword multinomials over a shared noise vocabulary, one pair of
/// template-confused hardware groups distinguished only by a metadata field,
/// and marker-keyword tail groups matching the default rule file. Fully
/// deterministic under the seed.
struct Options {
    size_t n_tickets = 20000;
    uint64_t seed = 1;
    /// Probability that a head ticket mixes in another class's keywords.
    double ambiguity = 0.12;
};

TicketCorpus generate_corpus(const Options& options = {});

/// Rule document matching the generated corpus: pre rules routing each tail
/// group on its marker keyword, post rules resolving the template-confused
/// hardware groups from the form_type metadata field.
std::string default_rule_document();

/// Pipeline configuration tuned for the generated corpus.
std::string default_config_document(uint64_t seed = 1);

const std::vector<std::string>& head_labels();
const std::vector<std::string>& tail_labels();

} // namespace ticketd::synthetic
