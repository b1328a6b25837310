#include "ticketd/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ticketd/rng.hpp"

namespace ticketd::synthetic {

namespace {

struct HeadClass {
    const char* label;
    std::vector<const char*> keywords;
};

// Ranks 1..6 are ordinary head groups; ranks 7..8 share a hardware-request
// template and carry only weak text signal (their real separator is the
// form_type metadata field, which the rule file consumes).
const std::vector<HeadClass>& head_classes() {
    static const std::vector<HeadClass> classes = {
        {"password_reset",
         {"password", "reset", "locked", "unlock", "login", "credentials", "expired",
          "account"}},
        {"vpn_access",
         {"vpn", "tunnel", "remote", "token", "gateway", "anyconnect", "certificate",
          "dropped"}},
        {"email_delivery",
         {"email", "mailbox", "outlook", "smtp", "bounce", "undelivered", "spam", "inbox"}},
        {"network_connectivity",
         {"network", "wifi", "ethernet", "dns", "outage", "latency", "switch", "router"}},
        {"erp_finance",
         {"erp", "invoice", "ledger", "posting", "approval", "workflow", "vendor",
          "payment"}},
        {"crm_sales",
         {"crm", "salesforce", "lead", "opportunity", "quote", "pipeline", "dashboard",
          "forecast"}},
        {"hw_provisioning", {"workstation", "imaging"}},
        {"hw_peripherals", {"headset", "webcam"}},
    };
    return classes;
}

const std::vector<const char*>& template_words() {
    static const std::vector<const char*> words = {
        "hardware", "request", "form", "submitted", "portal", "reference", "item",
        "category"};
    return words;
}

const std::vector<const char*>& tail_markers() {
    static const std::vector<const char*> markers = {
        "mainframe", "payroll",    "telephony", "printing",  "badge",     "parking",
        "cafeteria", "travel",     "visa",      "procurement", "warehouse", "fleet",
        "signage",   "intercom",   "turnstile", "lockers",   "shredding", "courier",
        "catering",  "janitorial", "hvac",      "elevator",  "generator", "biometric",
        "cctv",      "firealarm",  "pbx",       "kiosk",     "scanner",   "plotter",
        "projector", "whiteboard"};
    return markers;
}

const std::vector<const char*>& noise_words() {
    static const std::vector<const char*> words = {
        "hello",   "team",    "please",  "help",     "urgent",  "issue",    "problem",
        "since",   "morning", "yesterday", "today",  "working", "unable",   "failed",
        "message", "screen",  "system",  "ticket",   "need",    "thanks",   "regards",
        "asap",    "attached", "screenshot", "trying", "still",  "getting",  "every",
        "time",    "when",    "open",    "start",    "update",  "version",  "windows",
        "computer", "machine", "device", "user",     "colleague", "manager", "floor",
        "building", "site",   "branch",  "phone",    "call",    "meeting"};
    return words;
}

constexpr size_t kHeadCount = 8;
constexpr size_t kTailCount = 32;
constexpr size_t kTailFloor = 4; // guaranteed tickets per tail group
constexpr size_t kTemplateA = 6; // head index of hw_provisioning
constexpr size_t kTemplateB = 7; // head index of hw_peripherals
constexpr double kHeadMass = 0.992;

std::string tail_label(size_t i) {
    return std::string("svc_") + tail_markers()[i];
}

/// Per-class sampling weights: gentle decay over the head, zipfian tail.
std::vector<double> class_cdf() {
    std::vector<double> weights(kHeadCount + kTailCount, 0.0);
    double head_norm = 0.0;
    for (size_t k = 0; k < kHeadCount; ++k) {
        head_norm += std::pow(static_cast<double>(k + 1), -0.7);
    }
    for (size_t k = 0; k < kHeadCount; ++k) {
        weights[k] = kHeadMass * std::pow(static_cast<double>(k + 1), -0.7) / head_norm;
    }
    double tail_norm = 0.0;
    for (size_t k = 0; k < kTailCount; ++k) {
        tail_norm += std::pow(static_cast<double>(k + 1), -1.5);
    }
    for (size_t k = 0; k < kTailCount; ++k) {
        weights[kHeadCount + k] =
            (1.0 - kHeadMass) * std::pow(static_cast<double>(k + 1), -1.5) / tail_norm;
    }
    std::vector<double> cdf(weights.size());
    double cum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        cdf[i] = cum;
    }
    cdf.back() = 1.0;
    return cdf;
}

const char* pick(Rng& rng, const std::vector<const char*>& words) {
    return words[rng.below(words.size())];
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

const char* pick_location(Rng& rng) {
    static const std::vector<const char*> locations = {"east", "west", "north", "south"};
    return pick(rng, locations);
}

Ticket make_head_ticket(Rng& rng, size_t class_index, double ambiguity) {
    const auto& classes = head_classes();
    const auto& own = classes[class_index].keywords;

    // Ambiguous tickets mix another head group's keywords 50/50.
    const std::vector<const char*>* other = nullptr;
    if (rng.uniform() < ambiguity) {
        size_t alt = rng.below(kHeadCount - 1);
        if (alt >= class_index) ++alt;
        other = &classes[alt].keywords;
    }
    auto keyword = [&]() -> const char* {
        if (other != nullptr && rng.uniform() < 0.5) {
            return pick(rng, *other);
        }
        return pick(rng, own);
    };

    Ticket t;
    std::vector<std::string> subject;
    subject.push_back(keyword());
    subject.push_back(pick(rng, noise_words()));
    if (rng.uniform() < 0.5) {
        subject.push_back(keyword());
    }
    t.subject = join(subject);

    std::vector<std::string> body;
    const size_t len = 12 + rng.below(19); // 12..30 tokens
    for (size_t i = 0; i < len; ++i) {
        body.push_back(rng.uniform() < 0.30 ? keyword() : pick(rng, noise_words()));
    }
    // Burst noise: one generic word repeated, which raw counts overweight
    // and idf damps.
    if (rng.uniform() < 0.5) {
        const char* burst = pick(rng, noise_words());
        const size_t reps = 3 + rng.below(5);
        for (size_t i = 0; i < reps; ++i) {
            body.push_back(burst);
        }
    }
    t.body = join(body);
    return t;
}

Ticket make_template_ticket(Rng& rng, size_t class_index) {
    Ticket t;
    char assetbuf[16];
    std::snprintf(assetbuf, sizeof(assetbuf), "AST%05llu",
                  static_cast<unsigned long long>(rng.below(100000)));
    t.subject = std::string("New Hardware Request - ") + assetbuf;

    const auto& weak = head_classes()[class_index].keywords;
    std::vector<std::string> body;
    for (const char* w : template_words()) {
        body.push_back(w);
    }
    const size_t len = 6 + rng.below(9);
    for (size_t i = 0; i < len; ++i) {
        body.push_back(rng.uniform() < 0.12 ? pick(rng, weak) : pick(rng, noise_words()));
    }
    t.body = join(body);
    t.metadata["form_type"] =
        class_index == kTemplateA ? "provisioning" : "peripherals";
    return t;
}

Ticket make_tail_ticket(Rng& rng, size_t tail_index) {
    const char* marker = tail_markers()[tail_index];
    Ticket t;
    std::vector<std::string> subject = {marker, "support"};
    t.subject = join(subject);
    std::vector<std::string> body = {marker}; // the marker the pre rule keys on
    const size_t len = 8 + rng.below(11);
    for (size_t i = 0; i < len; ++i) {
        body.push_back(rng.uniform() < 0.15 ? marker : pick(rng, noise_words()));
    }
    t.body = join(body);
    return t;
}

} // namespace

const std::vector<std::string>& head_labels() {
    static const std::vector<std::string> labels = [] {
        std::vector<std::string> out;
        for (const auto& c : head_classes()) {
            out.push_back(c.label);
        }
        return out;
    }();
    return labels;
}

const std::vector<std::string>& tail_labels() {
    static const std::vector<std::string> labels = [] {
        std::vector<std::string> out;
        for (size_t i = 0; i < kTailCount; ++i) {
            out.push_back(tail_label(i));
        }
        return out;
    }();
    return labels;
}

TicketCorpus generate_corpus(const Options& options) {
    Rng rng(options.seed);
    const std::vector<double> cdf = class_cdf();

    std::vector<size_t> class_of;
    class_of.reserve(options.n_tickets);
    // Floor keeps every tail group present regardless of corpus size.
    for (size_t tail = 0; tail < kTailCount; ++tail) {
        for (size_t i = 0; i < kTailFloor && class_of.size() < options.n_tickets; ++i) {
            class_of.push_back(kHeadCount + tail);
        }
    }
    while (class_of.size() < options.n_tickets) {
        class_of.push_back(rng.pick_cdf(cdf));
    }
    rng.shuffle(class_of);

    TicketCorpus corpus;
    corpus.tickets.reserve(options.n_tickets);
    for (size_t i = 0; i < class_of.size(); ++i) {
        const size_t cls = class_of[i];
        Ticket t;
        if (cls >= kHeadCount) {
            t = make_tail_ticket(rng, cls - kHeadCount);
            t.gold_group = tail_label(cls - kHeadCount);
        } else if (cls == kTemplateA || cls == kTemplateB) {
            t = make_template_ticket(rng, cls);
            t.gold_group = head_classes()[cls].label;
        } else {
            t = make_head_ticket(rng, cls, options.ambiguity);
            t.gold_group = head_classes()[cls].label;
        }
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "t%06zu", i + 1);
        t.id = idbuf;
        char mailbuf[40];
        std::snprintf(mailbuf, sizeof(mailbuf), "user%04llu@corp.example",
                      static_cast<unsigned long long>(rng.below(5000)));
        t.metadata["originator_email"] = mailbuf;
        t.metadata["user_location"] = pick_location(rng);
        corpus.tickets.push_back(std::move(t));
    }
    corpus.rebuild_label_set();
    return corpus;
}

std::string default_rule_document() {
    nlohmann::json rules = nlohmann::json::array();
    rules.push_back({{"name", "hw_template_provisioning"},
                     {"priority", 10},
                     {"stage", "post"},
                     {"conditions",
                      nlohmann::json::array(
                          {{{"field", "subject"},
                            {"matcher", "regex"},
                            {"value", "(?i)^new hardware request"}},
                           {{"field", "metadata.form_type"},
                            {"matcher", "exact"},
                            {"value", "provisioning"}}})},
                     {"action", {{"kind", "assign"}, {"group", "hw_provisioning"}}}});
    rules.push_back({{"name", "hw_template_peripherals"},
                     {"priority", 11},
                     {"stage", "post"},
                     {"conditions",
                      nlohmann::json::array(
                          {{{"field", "subject"},
                            {"matcher", "regex"},
                            {"value", "(?i)^new hardware request"}},
                           {{"field", "metadata.form_type"},
                            {"matcher", "exact"},
                            {"value", "peripherals"}}})},
                     {"action", {{"kind", "assign"}, {"group", "hw_peripherals"}}}});
    const auto& markers = tail_markers();
    for (size_t i = 0; i < markers.size(); ++i) {
        rules.push_back(
            {{"name", "tail_" + std::string(markers[i])},
             {"priority", 100 + static_cast<int>(i)},
             {"stage", "pre"},
             {"conditions",
              nlohmann::json::array({{{"field", "body"},
                                      {"matcher", "regex"},
                                      {"value", "\\b" + std::string(markers[i]) + "\\b"}}})},
             {"action", {{"kind", "assign"}, {"group", tail_label(i)}}}});
    }
    return nlohmann::json{{"rules", rules}}.dump(2) + "\n";
}

std::string default_config_document(uint64_t seed) {
    nlohmann::json cfg = {
        {"seed", seed},
        {"preprocessing", {{"min_retained", 0.98}, {"max_group_fraction", 0.20}}},
        {"vectorizer", {{"min_df", 3}, {"ngram_range", {1, 2}}, {"weighting", "tfidf"}}},
        {"classifiers",
         {{"svm", {{"learning_rate", 0.1}, {"l2", 1e-4}, {"epochs", 20}, {"batch_size", 64}}},
          {"mlp",
           {{"learning_rate", 0.01},
            {"epochs", 20},
            {"batch_size", 64},
            {"hidden", 128},
            {"momentum", 0.9}}}}},
        {"ensemble",
         {{"members", {"svm", "mlp"}},
          {"target_accuracy", 0.85},
          {"validation_fraction", 0.1}}}};
    return cfg.dump(2) + "\n";
}

} // namespace ticketd::synthetic
