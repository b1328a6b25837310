#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ticketd {

/// One helpdesk email. subject/body may each be empty but never both;
/// gold_group is present on training data only.
struct Ticket {
    std::string id;
    std::string subject;
    std::string body;
    std::map<std::string, std::string> metadata;
    std::optional<std::string> gold_group;

    bool operator==(const Ticket&) const = default;
};

/// An immutable, ordered collection of tickets. label_set tracks the exact
/// set of gold_group values present.
struct TicketCorpus {
    std::vector<Ticket> tickets;
    std::set<std::string> label_set;

    size_t size() const { return tickets.size(); }

    void rebuild_label_set() {
        label_set.clear();
        for (const auto& t : tickets) {
            if (t.gold_group) {
                label_set.insert(*t.gold_group);
            }
        }
    }

    static TicketCorpus from_tickets(std::vector<Ticket> tickets) {
        TicketCorpus c;
        c.tickets = std::move(tickets);
        c.rebuild_label_set();
        return c;
    }
};

} // namespace ticketd
