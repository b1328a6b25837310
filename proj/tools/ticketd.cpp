#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ticketd/bundle.hpp"
#include "ticketd/config.hpp"
#include "ticketd/dispatcher.hpp"
#include "ticketd/error.hpp"
#include "ticketd/evaluation.hpp"
#include "ticketd/ingestion.hpp"
#include "ticketd/pipeline.hpp"
#include "ticketd/service.hpp"
#include "ticketd/synthetic.hpp"

namespace {

using namespace ticketd;

TicketCorpus load_corpus(const std::string& path, const std::string& format,
                         bool quiet = false) {
    const LoadResult result = load_tickets(path, corpus_format_from_string(format));
    if (!quiet) {
        for (const auto& r : result.rejected) {
            std::cerr << path << ":" << r.line << ": rejected record"
                      << (r.id.empty() ? "" : " id=" + r.id) << ": " << r.reason << "\n";
        }
        std::cerr << path << ": " << result.corpus.size() << " tickets loaded, "
                  << result.rejected.size() << " rejected\n";
    }
    return result.corpus;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open file for writing: " + path);
    }
    out << content;
    if (!out) {
        throw Error("failed while writing: " + path);
    }
}

RuleSet load_rules_or_empty(const std::string& path) {
    return path.empty() ? RuleSet() : RuleSet::from_file(path);
}

std::vector<double> parse_grid(const std::string& spec) {
    if (spec.empty()) {
        return default_threshold_grid();
    }
    std::vector<double> grid;
    std::string token;
    std::istringstream in(spec);
    while (std::getline(in, token, ',')) {
        grid.push_back(std::stod(token));
    }
    return grid;
}

int cmd_gen_data(const std::string& out, const std::string& test_out, double test_fraction,
                 const std::string& rules_out, size_t n_tickets, uint64_t seed) {
    synthetic::Options options;
    options.n_tickets = n_tickets;
    options.seed = seed;
    const TicketCorpus corpus = synthetic::generate_corpus(options);

    if (!test_out.empty()) {
        const HoldoutSplit split = split_holdout(corpus, test_fraction, seed);
        for (const auto& w : split.warnings) {
            std::cerr << "gen-data: " << w << "\n";
        }
        write_tickets_jsonl(split.train, out);
        write_tickets_jsonl(split.test, test_out);
        std::cout << "wrote " << split.train.size() << " train tickets to " << out << " and "
                  << split.test.size() << " test tickets to " << test_out << "\n";
    } else {
        write_tickets_jsonl(corpus, out);
        std::cout << "wrote " << corpus.size() << " tickets to " << out << "\n";
    }
    if (!rules_out.empty()) {
        write_text_file(rules_out, synthetic::default_rule_document());
        std::cout << "wrote rule file to " << rules_out << "\n";
    }
    return 0;
}

int cmd_train(const std::string& data, const std::string& format, const std::string& config_path,
              const std::string& out, std::optional<uint64_t> seed_override,
              const std::string& timestamp) {
    PipelineConfig config =
        config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (seed_override) {
        config.seed = *seed_override;
    }
    const TicketCorpus corpus = load_corpus(data, format);
    TrainResult result = train_pipeline(corpus, config, file_digest(data));
    result.bundle.provenance.timestamp = timestamp;
    for (const auto& w : result.warnings) {
        std::cerr << "train: warning: " << w << "\n";
    }
    save_bundle(result.bundle, out);

    std::cout << "trained " << result.bundle.codec.size() << " head groups ("
              << result.bundle.long_tail.tail_labels.size() << " tail groups left to rules)\n";
    for (const auto& [kind, seconds] : result.train_seconds) {
        std::cout << "  " << kind << " train time: " << format_confidence(seconds) << " s\n";
    }
    std::cout << "  thresholds: " << to_string(result.bundle.ensemble.member_a) << ">="
              << result.bundle.ensemble.threshold_a << ", "
              << to_string(result.bundle.ensemble.member_b) << ">="
              << result.bundle.ensemble.threshold_b << "\n";
    if (result.selection) {
        std::cout << "  validation accuracy " << format_confidence(result.selection->accuracy)
                  << ", coverage " << format_confidence(result.selection->coverage)
                  << (result.selection->target_met ? "" : " (target unmet)") << "\n";
    }
    std::cout << "bundle written to " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& data, const std::string& format,
                 const std::string& bundle_path, const std::string& rules_path,
                 const std::string& report_path, size_t cv_k,
                 const std::string& config_path, uint64_t cv_seed) {
    const TicketCorpus corpus = load_corpus(data, format);
    const ModelBundle bundle = load_bundle(bundle_path);
    const RuleSet rules = load_rules_or_empty(rules_path);

    const EvalReport report = evaluate_engine(corpus, bundle, rules);
    std::cout << report.to_text();
    if (!report_path.empty()) {
        write_text_file(report_path, report.to_text());
        write_text_file(report_path + ".jsonl", report.to_jsonl());
        std::cout << "report written to " << report_path << " and " << report_path
                  << ".jsonl\n";
    }

    if (cv_k >= 2) {
        if (config_path.empty()) {
            throw Error("evaluate --cv requires --config to retrain per fold");
        }
        const PipelineConfig config = load_config(config_path);
        const RuleSet* rules_ptr = &rules;
        const FoldEvaluator fold_eval = [&config, rules_ptr](const TicketCorpus& train,
                                                             const TicketCorpus& test) {
            const TrainResult fold = train_pipeline(train, config);
            const EvalReport r = evaluate_engine(test, fold.bundle, *rules_ptr);
            return r.full_engine;
        };
        const CrossValidation cv = cross_validate(corpus, cv_k, fold_eval, cv_seed);
        std::cout << cv_k << "-fold cross-validation (full engine):\n";
        for (size_t i = 0; i < cv.folds.size(); ++i) {
            const auto& m = cv.folds[i];
            std::cout << "  fold " << i << ": accuracy "
                      << (m.accuracy ? format_confidence(*m.accuracy) : "n/a") << ", coverage "
                      << format_confidence(m.coverage) << "\n";
        }
        if (cv.mean_accuracy) {
            std::cout << "  mean accuracy " << format_confidence(*cv.mean_accuracy) << " +- "
                      << format_confidence(*cv.stdev_accuracy) << "\n";
        }
        std::cout << "  mean coverage " << format_confidence(cv.mean_coverage) << " +- "
                  << format_confidence(cv.stdev_coverage) << "\n";
    }
    return 0;
}

int cmd_dispatch(const std::string& data, const std::string& format,
                 const std::string& bundle_path, const std::string& rules_path,
                 const std::string& out) {
    const TicketCorpus corpus = load_corpus(data, format);
    const ModelBundle bundle = load_bundle(bundle_path);
    const RuleSet rules = load_rules_or_empty(rules_path);
    const AssignmentEngine engine(bundle.vocab, bundle.codec,
                                  bundle.model(bundle.ensemble.member_a),
                                  bundle.model(bundle.ensemble.member_b), bundle.ensemble,
                                  rules);
    const std::vector<DispatchDecision> decisions = engine.dispatch_batch(corpus);
    write_assignments(decisions, out);
    size_t manual = 0;
    for (const auto& d : decisions) {
        if (d.source == DecisionSource::manual) ++manual;
    }
    std::cout << decisions.size() << " decisions written to " << out << " (" << manual
              << " to the manual queue)\n";
    return 0;
}

int cmd_sweep(const std::string& data, const std::string& format,
              const std::string& bundle_path, const std::string& grid_spec,
              const std::string& out) {
    const TicketCorpus corpus = load_corpus(data, format);
    const ModelBundle bundle = load_bundle(bundle_path);
    const std::vector<ValidationSample> samples = cache_predictions(corpus, bundle);
    const std::vector<double> grid = parse_grid(grid_spec);
    const SweepCurve curve = sweep_thresholds(samples, grid);
    const std::string jsonl = sweep_to_jsonl(curve);
    if (out.empty()) {
        std::cout << jsonl;
    } else {
        write_text_file(out, jsonl);
        std::cout << curve.points.size() << " grid points written to " << out << "\n";
    }
    return 0;
}

int cmd_serve(const std::string& bundle_path, const std::string& rules_path,
              const std::string& host, int port) {
    ClassifyService service;
    service.set_artifacts(load_bundle(bundle_path), load_rules_or_empty(rules_path));
    std::cout << "listening on " << host << ":" << port << "\n";
    service.listen(host, port);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"helpdesk ticket assignment engine"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate the seeded synthetic corpus");
    std::string gen_out = "tickets.jsonl", gen_test_out, gen_rules_out;
    size_t gen_n = 20000;
    uint64_t gen_seed = 1;
    double gen_test_fraction = 0.10;
    gen->add_option("--out", gen_out, "output corpus (jsonl)");
    gen->add_option("--test-out", gen_test_out, "optional held-out test corpus (jsonl)");
    gen->add_option("--test-fraction", gen_test_fraction, "held-out fraction");
    gen->add_option("--rules-out", gen_rules_out, "write the matching rule file");
    gen->add_option("--tickets", gen_n, "corpus size");
    gen->add_option("--seed", gen_seed, "generator seed");

    // train
    auto* train = app.add_subcommand("train", "train a model bundle");
    std::string train_data, train_format = "jsonl", train_config, train_out = "bundle.json";
    std::string train_timestamp;
    std::optional<uint64_t> train_seed;
    train->add_option("--data", train_data, "training corpus")->required();
    train->add_option("--format", train_format, "corpus format (jsonl|csv)");
    train->add_option("--config", train_config, "pipeline configuration (json)");
    train->add_option("--out", train_out, "bundle output path");
    train->add_option("--seed", train_seed, "override the config seed");
    train->add_option("--timestamp", train_timestamp,
                      "provenance timestamp (empty keeps bundles byte-reproducible)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "measure accuracy and coverage");
    std::string eval_data, eval_format = "jsonl", eval_bundle, eval_rules, eval_report;
    std::string eval_config;
    size_t eval_cv = 0;
    uint64_t eval_cv_seed = 1;
    evaluate->add_option("--data", eval_data, "labeled evaluation corpus")->required();
    evaluate->add_option("--format", eval_format, "corpus format (jsonl|csv)");
    evaluate->add_option("--bundle", eval_bundle, "trained bundle")->required();
    evaluate->add_option("--rules", eval_rules, "rule file (optional)");
    evaluate->add_option("--report", eval_report, "report path (text; .jsonl added)");
    evaluate->add_option("--cv", eval_cv, "also run k-fold cross-validation (needs --config)");
    evaluate->add_option("--config", eval_config, "pipeline config for --cv retraining");
    evaluate->add_option("--cv-seed", eval_cv_seed, "fold assignment seed");

    // dispatch
    auto* dispatch = app.add_subcommand("dispatch", "assign a ticket file");
    std::string dis_data, dis_format = "jsonl", dis_bundle, dis_rules, dis_out = "decisions.jsonl";
    dispatch->add_option("--data", dis_data, "ticket corpus")->required();
    dispatch->add_option("--format", dis_format, "corpus format (jsonl|csv)");
    dispatch->add_option("--bundle", dis_bundle, "trained bundle")->required();
    dispatch->add_option("--rules", dis_rules, "rule file (optional)");
    dispatch->add_option("--out", dis_out, "decisions output (jsonl)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "threshold grid sweep");
    std::string sweep_data, sweep_format = "jsonl", sweep_bundle, sweep_grid, sweep_out;
    sweep->add_option("--data", sweep_data, "labeled corpus")->required();
    sweep->add_option("--format", sweep_format, "corpus format (jsonl|csv)");
    sweep->add_option("--bundle", sweep_bundle, "trained bundle")->required();
    sweep->add_option("--grid", sweep_grid, "comma-separated thresholds (default 0.1..0.9)");
    sweep->add_option("--out", sweep_out, "curve output (jsonl; stdout when omitted)");

    // serve
    auto* serve = app.add_subcommand("serve", "classification HTTP service");
    std::string serve_bundle, serve_rules, serve_host = "127.0.0.1";
    int serve_port = 8080;
    serve->add_option("--bundle", serve_bundle, "trained bundle")->required();
    serve->add_option("--rules", serve_rules, "rule file (optional)");
    serve->add_option("--host", serve_host, "bind address");
    serve->add_option("--port", serve_port, "bind port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_data(gen_out, gen_test_out, gen_test_fraction, gen_rules_out, gen_n,
                                gen_seed);
        }
        if (train->parsed()) {
            return cmd_train(train_data, train_format, train_config, train_out, train_seed,
                             train_timestamp);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(eval_data, eval_format, eval_bundle, eval_rules, eval_report,
                                eval_cv, eval_config, eval_cv_seed);
        }
        if (dispatch->parsed()) {
            return cmd_dispatch(dis_data, dis_format, dis_bundle, dis_rules, dis_out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_data, sweep_format, sweep_bundle, sweep_grid, sweep_out);
        }
        if (serve->parsed()) {
            return cmd_serve(serve_bundle, serve_rules, serve_host, serve_port);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
