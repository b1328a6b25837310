#include <doctest.h>

#include <cmath>

#include "ticketd/dispatcher.hpp"
#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"

using namespace ticketd;

namespace {

// Bias-only linear model: predicts softmax(bias) for every input, which
// makes dispatch outcomes exact.
Model constant_model(const std::vector<double>& distribution, size_t n_features) {
    Model m;
    m.kind = ModelKind::svm;
    m.n_features = n_features;
    m.n_classes = distribution.size();
    m.weights.assign(m.n_classes * n_features, 0.0);
    m.bias.resize(m.n_classes);
    for (size_t c = 0; c < m.n_classes; ++c) {
        m.bias[c] = std::log(distribution[c]);
    }
    return m;
}

struct Fixture {
    Vocabulary vocab;
    LabelCodec codec;
    Model model_a;
    Model model_b;
    EnsembleConfig cfg;

    Fixture(const std::vector<double>& dist_a, const std::vector<double>& dist_b,
            double ta = 0.5, double tb = 0.6) {
        FitOptions fo;
        fo.min_df = 1;
        fo.max_ngram = 1;
        vocab = fit_vocabulary({{"aa", "bb"}}, fo);
        codec = LabelCodec::from_labels({"G1", "G2"});
        model_a = constant_model(dist_a, vocab.size());
        model_b = constant_model(dist_b, vocab.size());
        cfg.threshold_a = ta;
        cfg.threshold_b = tb;
    }

    AssignmentEngine engine(const RuleSet& rules, DispatchOptions options = {}) const {
        return AssignmentEngine(vocab, codec, model_a, model_b, cfg, rules, options);
    }
};

Ticket make_ticket(const std::string& id, const std::string& subject, const std::string& body,
                   std::map<std::string, std::string> metadata = {}) {
    Ticket t;
    t.id = id;
    t.subject = subject;
    t.body = body;
    t.metadata = std::move(metadata);
    return t;
}

std::vector<std::string> stages(const DispatchDecision& d) {
    std::vector<std::string> out;
    for (const auto& r : d.trace) out.push_back(r.stage);
    return out;
}

} // namespace

TEST_CASE("a pre-rule hit bypasses classification") {
    const Fixture fx({0.9, 0.1}, {0.9, 0.1});
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"vpn","priority":1,"stage":"pre",
       "conditions":[{"field":"body","matcher":"regex","value":"vpn"}],
       "action":{"kind":"assign","group":"VPN_SUPPORT"}}
    ])");
    const DispatchDecision d = fx.engine(rules).dispatch(make_ticket("t1", "s", "vpn down"));
    CHECK(d.group == "VPN_SUPPORT");
    CHECK(d.confidence == 1.0);
    CHECK(d.source == DecisionSource::rule_pre);
    CHECK(stages(d) == std::vector<std::string>{"pre_rules", "ensemble", "post_rules"});
    CHECK(d.trace[1].outcome == "skipped");
    CHECK(d.trace[2].outcome == "skipped");
}

TEST_CASE("ensemble assignment passes through without post rules") {
    const Fixture fx({0.8, 0.2}, {0.7, 0.3});
    const RuleSet no_rules;
    const DispatchDecision d = fx.engine(no_rules).dispatch(make_ticket("t1", "aa", "bb"));
    CHECK(d.group == "G1");
    CHECK(d.confidence == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(d.source == DecisionSource::ensemble);
    CHECK(stages(d) == std::vector<std::string>{"pre_rules", "ensemble", "post_rules"});
}

TEST_CASE("abstention lands in the manual queue at the best member confidence") {
    const Fixture fx({0.45, 0.55}, {0.41, 0.59}, 0.6, 0.7); // both members below
    const RuleSet no_rules;
    const DispatchDecision d = fx.engine(no_rules).dispatch(make_ticket("t1", "aa", "bb"));
    CHECK(d.group == kManualQueue);
    CHECK(d.confidence == doctest::Approx(0.59).epsilon(1e-12));
    CHECK(d.source == DecisionSource::manual);
}

TEST_CASE("a post assign-rule rescues an abstained ticket") {
    const Fixture fx({0.45, 0.55}, {0.41, 0.59}, 0.6, 0.7);
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"hw_rescue","priority":1,"stage":"post",
       "conditions":[{"field":"subject","matcher":"regex","value":"hardware"}],
       "action":{"kind":"assign","group":"HW_DESK"}}
    ])");
    const DispatchDecision d =
        fx.engine(rules).dispatch(make_ticket("t1", "new hardware", "bb"));
    CHECK(d.group == "HW_DESK");
    CHECK(d.confidence == 1.0);
    CHECK(d.source == DecisionSource::rule_post);

    DispatchOptions no_rescue;
    no_rescue.post_rule_rescue = false;
    const DispatchDecision manual =
        fx.engine(rules, no_rescue).dispatch(make_ticket("t1", "new hardware", "bb"));
    CHECK(manual.group == kManualQueue);
    CHECK(manual.source == DecisionSource::manual);
}

TEST_CASE("a remap rule cannot rescue an abstention") {
    const Fixture fx({0.45, 0.55}, {0.41, 0.59}, 0.6, 0.7);
    // G2 is the best member label; the remap matches it but keeps the
    // sub-threshold confidence, so the ticket still goes manual.
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"rename","priority":1,"stage":"post",
       "conditions":[{"field":"subject","matcher":"regex","value":".*"}],
       "action":{"kind":"remap","from":"G2","to":"G2_NEW"}}
    ])");
    const DispatchDecision d = fx.engine(rules).dispatch(make_ticket("t1", "aa", "bb"));
    CHECK(d.group == kManualQueue);
    CHECK(d.source == DecisionSource::manual);
}

TEST_CASE("post rules override an assigned prediction") {
    const Fixture fx({0.8, 0.2}, {0.75, 0.25});
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"zone","priority":1,"stage":"post",
       "conditions":[{"field":"predicted_group","matcher":"exact","value":"G1"}],
       "action":{"kind":"resolve_zone","metadata_key":"user_location",
                 "map":{"east":"G1_EAST"}}}
    ])");
    const DispatchDecision east = fx.engine(rules).dispatch(
        make_ticket("t1", "aa", "bb", {{"user_location", "east"}}));
    CHECK(east.group == "G1_EAST");
    CHECK(east.confidence == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(east.source == DecisionSource::rule_post);

    const DispatchDecision unresolved = fx.engine(rules).dispatch(
        make_ticket("t2", "aa", "bb", {{"user_location", "moon"}}));
    CHECK(unresolved.group == "G1");
    CHECK(unresolved.source == DecisionSource::ensemble);
    CHECK(unresolved.trace[2].outcome.find("zone_unresolved") != std::string::npos);
}

TEST_CASE("manual source if and only if manual-queue group") {
    // Both members sit below their thresholds, so only the pre rule assigns.
    const Fixture fx({0.55, 0.45}, {0.62, 0.38}, 0.6, 0.7);
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"vpn","priority":1,"stage":"pre",
       "conditions":[{"field":"body","matcher":"regex","value":"vpn"}],
       "action":{"kind":"assign","group":"VPN_SUPPORT"}}
    ])");
    Rng rng(3);
    TicketCorpus corpus;
    for (int i = 0; i < 50; ++i) {
        corpus.tickets.push_back(make_ticket("t" + std::to_string(i), "aa",
                                             rng.uniform() < 0.4 ? "vpn" : "bb"));
    }
    const auto decisions = fx.engine(rules).dispatch_batch(corpus);
    size_t manual = 0;
    for (const auto& d : decisions) {
        CHECK((d.source == DecisionSource::manual) == (d.group == kManualQueue));
        if (d.source == DecisionSource::manual) ++manual;
    }
    CHECK(manual > 0);
    CHECK(manual < decisions.size());
}

TEST_CASE("dispatch_batch: empty corpus and element-wise law") {
    const Fixture fx({0.8, 0.2}, {0.7, 0.3});
    const RuleSet no_rules;
    const auto engine = fx.engine(no_rules);
    CHECK(engine.dispatch_batch(TicketCorpus{}).empty());

    TicketCorpus corpus;
    corpus.tickets = {make_ticket("t1", "aa", "bb"), make_ticket("t2", "bb", "aa"),
                      make_ticket("t3", "aa bb", "")};
    const auto batch = engine.dispatch_batch(corpus);
    REQUIRE(batch.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(batch[i] == engine.dispatch(corpus.tickets[i]));
    }
}

TEST_CASE("dispatch_batch is invariant to partitioning") {
    const Fixture fx({0.52, 0.48}, {0.65, 0.35});
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"vpn","priority":1,"stage":"pre",
       "conditions":[{"field":"body","matcher":"regex","value":"vpn"}],
       "action":{"kind":"assign","group":"VPN_SUPPORT"}}
    ])");
    const auto engine = fx.engine(rules);

    Rng rng(7);
    TicketCorpus corpus;
    for (int i = 0; i < 100; ++i) {
        corpus.tickets.push_back(make_ticket("t" + std::to_string(i), "aa",
                                             rng.uniform() < 0.2 ? "vpn issue" : "bb"));
    }
    const auto whole = engine.dispatch_batch(corpus);

    std::vector<DispatchDecision> chunked;
    for (size_t start = 0; start < corpus.tickets.size(); start += 7) {
        TicketCorpus chunk;
        for (size_t i = start; i < std::min(corpus.tickets.size(), start + 7); ++i) {
            chunk.tickets.push_back(corpus.tickets[i]);
        }
        const auto part = engine.dispatch_batch(chunk);
        chunked.insert(chunked.end(), part.begin(), part.end());
    }
    CHECK(whole == chunked);
}

TEST_CASE("thresholds 0.0 disable abstention entirely") {
    const Fixture fx({0.52, 0.48}, {0.51, 0.49}, 0.0, 0.0);
    const RuleSet no_rules;
    const auto engine = fx.engine(no_rules);
    TicketCorpus corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.tickets.push_back(make_ticket("t" + std::to_string(i), "aa", "bb"));
    }
    for (const auto& d : engine.dispatch_batch(corpus)) {
        CHECK(d.source == DecisionSource::ensemble);
        CHECK(d.group == "G1"); // agreement rule argmax
    }
}

TEST_CASE("at thresholds 1.0 only confidence-1.0 predictions assign") {
    const Fixture fx({0.99, 0.01}, {0.98, 0.02}, 1.0, 1.0);
    const RuleSet rules = RuleSet::parse(R"([
      {"name":"vpn","priority":1,"stage":"pre",
       "conditions":[{"field":"body","matcher":"regex","value":"vpn"}],
       "action":{"kind":"assign","group":"VPN_SUPPORT"}}
    ])");
    const auto engine = fx.engine(rules);
    const DispatchDecision abstained = engine.dispatch(make_ticket("t1", "aa", "bb"));
    CHECK(abstained.group == kManualQueue);
    // Rule decisions carry confidence 1.0 and still assign.
    const DispatchDecision ruled = engine.dispatch(make_ticket("t2", "aa", "vpn"));
    CHECK(ruled.group == "VPN_SUPPORT");
    CHECK(ruled.confidence == 1.0);
}

TEST_CASE("engine construction validates shapes") {
    const Fixture fx({0.8, 0.2}, {0.7, 0.3});
    Model wrong_classes = fx.model_a;
    wrong_classes.n_classes = 3;
    wrong_classes.bias.push_back(0.0);
    wrong_classes.weights.resize(3 * fx.vocab.size(), 0.0);
    const RuleSet no_rules;
    CHECK_THROWS_AS(AssignmentEngine(fx.vocab, fx.codec, wrong_classes, fx.model_b, fx.cfg,
                                     no_rules),
                    Error);
}
