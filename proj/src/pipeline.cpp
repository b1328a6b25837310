#include "ticketd/pipeline.hpp"

#include <sstream>

#include <json.hpp>

#include "ticketd/error.hpp"
#include "ticketd/preprocess.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

std::vector<TrainExample> vectorize_labeled(const TicketCorpus& corpus,
                                            const Vocabulary& vocab,
                                            const LabelCodec& codec) {
    std::vector<TrainExample> examples;
    examples.reserve(corpus.size());
    for (const auto& t : corpus.tickets) {
        TrainExample ex;
        ex.x = transform(normalize_text(t.subject, t.body), vocab);
        ex.label = codec.require(*t.gold_group);
        examples.push_back(std::move(ex));
    }
    return examples;
}

TicketCorpus filter_head(const TicketCorpus& corpus, const LongTailSplit& split) {
    TicketCorpus head;
    for (const auto& t : corpus.tickets) {
        if (split.head_labels.count(*t.gold_group)) {
            head.tickets.push_back(t);
        }
    }
    head.rebuild_label_set();
    return head;
}

/// Distinct per-member training seeds derived from the run seed.
uint64_t member_seed(uint64_t seed, ModelKind kind) {
    return seed + static_cast<uint64_t>(kind) + 1;
}

} // namespace

TrainResult train_pipeline(const TicketCorpus& corpus, const PipelineConfig& config,
                           const std::string& data_digest) {
    for (const auto& t : corpus.tickets) {
        if (!t.gold_group) {
            throw Error("train: ticket '" + t.id + "' has no gold group");
        }
    }

    TrainResult result;
    ModelBundle& bundle = result.bundle;

    MergeMap merge;
    if (config.preprocessing.merge_config) {
        merge = build_merge_map(load_merge_families(*config.preprocessing.merge_config));
    }
    const TicketCorpus merged = merge.empty() ? corpus : apply_merge(corpus, merge);

    const LongTailSplit split = split_long_tail(merged, config.preprocessing.min_retained,
                                                config.preprocessing.max_group_fraction);
    if (!split.group_cap_met) {
        result.warnings.push_back(
            "long-tail split: retention target needed more than the configured group "
            "fraction (retention wins)");
    }
    const TicketCorpus head = filter_head(merged, split);
    if (head.label_set.size() < 2) {
        throw Error("train: need at least two head labels after the long-tail cut");
    }

    // Tail tickets are excluded from the vocabulary fit as well as from
    // classifier training; rules own those groups entirely.
    const TicketCorpus* fit_corpus = &head;
    HoldoutSplit validation_split;
    const bool select = !config.ensemble.thresholds.has_value();
    if (select) {
        validation_split =
            split_holdout(head, config.ensemble.validation_fraction, config.seed);
        for (auto& w : validation_split.warnings) {
            result.warnings.push_back("validation split: " + w);
        }
        fit_corpus = &validation_split.train;
    }

    std::vector<TokenDoc> docs;
    docs.reserve(fit_corpus->size());
    for (const auto& t : fit_corpus->tickets) {
        docs.push_back(normalize_text(t.subject, t.body));
    }
    bundle.vocab = fit_vocabulary(docs, config.vectorizer);
    bundle.codec = LabelCodec::from_labels(head.label_set);

    const std::vector<TrainExample> train_set =
        vectorize_labeled(*fit_corpus, bundle.vocab, bundle.codec);

    EnsembleConfig ecfg;
    ecfg.member_a = config.ensemble.member_a;
    ecfg.member_b = config.ensemble.member_b;
    ecfg.target_accuracy = config.ensemble.target_accuracy;
    for (const ModelKind kind : {ecfg.member_a, ecfg.member_b}) {
        TimedTrain tt = timed_train(kind, train_set, bundle.vocab.size(), bundle.codec.size(),
                                    config.hyperparams_for(kind), member_seed(config.seed, kind));
        result.train_seconds[to_string(kind)] = tt.seconds;
        bundle.models.emplace(to_string(kind), std::move(tt.model));
    }

    if (select) {
        std::vector<ValidationSample> samples;
        samples.reserve(validation_split.test.size());
        const Model& ma = bundle.model(ecfg.member_a);
        const Model& mb = bundle.model(ecfg.member_b);
        for (const auto& t : validation_split.test.tickets) {
            ValidationSample s;
            const SparseVector x = transform(normalize_text(t.subject, t.body), bundle.vocab);
            s.a = predict(ma, x);
            s.b = predict(mb, x);
            s.gold_class = bundle.codec.require(*t.gold_group);
            samples.push_back(std::move(s));
        }
        const std::vector<double> grid = default_threshold_grid();
        const ThresholdSelection sel = select_thresholds(
            samples, ecfg.member_a, ecfg.member_b, config.ensemble.target_accuracy, grid);
        ecfg.threshold_a = sel.config.threshold_a;
        ecfg.threshold_b = sel.config.threshold_b;
        if (!sel.target_met) {
            result.warnings.push_back(
                "threshold selection: no grid pair met the accuracy target; using the "
                "maximum-accuracy pair");
        }
        result.selection = sel;
    } else {
        ecfg.threshold_a = config.ensemble.thresholds->first;
        ecfg.threshold_b = config.ensemble.thresholds->second;
    }

    bundle.ensemble = ecfg;
    bundle.merge_map = merge;
    bundle.long_tail = split;
    bundle.provenance.data_digest = data_digest;
    bundle.provenance.seed = config.seed;
    return result;
}

GoldMap build_gold_map(const TicketCorpus& corpus, const MergeMap& merge) {
    GoldMap gold;
    gold.reserve(corpus.size());
    for (const auto& t : corpus.tickets) {
        if (!t.gold_group) {
            throw Error("evaluate: ticket '" + t.id + "' has no gold group");
        }
        GoldLabel g;
        g.merged = merge.resolve(*t.gold_group);
        if (g.merged != *t.gold_group) {
            g.raw = *t.gold_group;
        }
        gold.emplace(t.id, std::move(g));
    }
    return gold;
}

EvalReport evaluate_engine(const TicketCorpus& corpus, const ModelBundle& bundle,
                           const RuleSet& rules) {
    const GoldMap gold = build_gold_map(corpus, bundle.merge_map);
    const Model& ma = bundle.model(bundle.ensemble.member_a);
    const Model& mb = bundle.model(bundle.ensemble.member_b);

    const RuleSet no_rules;
    const AssignmentEngine bare(bundle.vocab, bundle.codec, ma, mb, bundle.ensemble, no_rules);
    const AssignmentEngine full(bundle.vocab, bundle.codec, ma, mb, bundle.ensemble, rules);

    EvalReport report;
    report.n_tickets = corpus.size();
    report.ensemble_only =
        compute_metrics(bare.dispatch_batch(corpus), gold, MetricsMode::ensemble_only);
    report.full_engine =
        compute_metrics(full.dispatch_batch(corpus), gold, MetricsMode::full_engine);
    return report;
}

std::vector<ValidationSample> cache_predictions(const TicketCorpus& corpus,
                                                const ModelBundle& bundle) {
    const Model& ma = bundle.model(bundle.ensemble.member_a);
    const Model& mb = bundle.model(bundle.ensemble.member_b);
    std::vector<ValidationSample> samples;
    samples.reserve(corpus.size());
    for (const auto& t : corpus.tickets) {
        ValidationSample s;
        const SparseVector x = transform(normalize_text(t.subject, t.body), bundle.vocab);
        s.a = predict(ma, x);
        s.b = predict(mb, x);
        if (t.gold_group) {
            const std::string merged = bundle.merge_map.resolve(*t.gold_group);
            s.gold_class = bundle.codec.contains(merged) ? bundle.codec.require(merged) : -1;
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

std::string accuracy_text(const Metrics& m) {
    return m.accuracy ? format_confidence(*m.accuracy) : "n/a";
}

json metrics_json(const Metrics& m) {
    json j = {{"label", to_string(m.mode)},  {"coverage", m.coverage},
              {"n_total", m.n_total},        {"n_assigned", m.n_assigned},
              {"n_correct", m.n_correct}};
    if (m.accuracy) {
        j["accuracy"] = *m.accuracy;
    }
    return j;
}

} // namespace

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "metric                                    value\n";
    out << "number of email tickets (n)               " << n_tickets << "\n";
    out << "ensemble accuracy (x_acc)                 " << accuracy_text(ensemble_only) << "\n";
    out << "ensemble coverage (x_cov)                 " << format_confidence(ensemble_only.coverage)
        << "\n";
    out << "assignment engine accuracy (e_acc)        " << accuracy_text(full_engine) << "\n";
    out << "assignment engine coverage (e_cov)        " << format_confidence(full_engine.coverage)
        << "\n";
    return out.str();
}

std::string EvalReport::to_jsonl() const {
    std::ostringstream out;
    out << metrics_json(ensemble_only).dump() << '\n';
    out << metrics_json(full_engine).dump() << '\n';
    return out.str();
}

std::string sweep_to_jsonl(const SweepCurve& curve) {
    std::ostringstream out;
    for (const auto& p : curve.points) {
        json j = {{"threshold_a", p.threshold_a},
                  {"threshold_b", p.threshold_b},
                  {"coverage", p.metrics.coverage},
                  {"n_total", p.metrics.n_total},
                  {"n_assigned", p.metrics.n_assigned},
                  {"n_correct", p.metrics.n_correct}};
        if (p.metrics.accuracy) {
            j["accuracy"] = *p.metrics.accuracy;
        }
        out << j.dump() << '\n';
    }
    return out.str();
}

} // namespace ticketd
