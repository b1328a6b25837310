#include "ticketd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

Hyperparams hyperparams_override(ModelKind kind, const json& j) {
    Hyperparams hp = default_hyperparams(kind);
    if (j.contains("learning_rate")) hp.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("lr_decay")) hp.lr_decay = j.at("lr_decay").get<bool>();
    if (j.contains("l2")) hp.l2 = j.at("l2").get<double>();
    if (j.contains("epochs")) hp.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) hp.batch_size = j.at("batch_size").get<int>();
    if (j.contains("hidden")) hp.hidden = j.at("hidden").get<int>();
    if (j.contains("momentum")) hp.momentum = j.at("momentum").get<double>();
    if (j.contains("alpha")) hp.alpha = j.at("alpha").get<double>();
    return hp;
}

} // namespace

PipelineConfig parse_config(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error("config: invalid JSON document");
    }
    PipelineConfig cfg;
    cfg.seed = doc.value("seed", static_cast<uint64_t>(0));

    if (doc.contains("preprocessing")) {
        const auto& p = doc.at("preprocessing");
        cfg.preprocessing.min_retained = p.value("min_retained", cfg.preprocessing.min_retained);
        cfg.preprocessing.max_group_fraction =
            p.value("max_group_fraction", cfg.preprocessing.max_group_fraction);
        if (p.contains("merge_config")) {
            cfg.preprocessing.merge_config = p.at("merge_config").get<std::string>();
        }
    }
    if (doc.contains("vectorizer")) {
        const auto& v = doc.at("vectorizer");
        cfg.vectorizer.min_df = v.value("min_df", cfg.vectorizer.min_df);
        if (v.contains("ngram_range")) {
            const auto& range = v.at("ngram_range");
            if (!range.is_array() || range.size() != 2 || range.at(0).get<int>() != 1) {
                throw Error("config: vectorizer.ngram_range must be [1, n]");
            }
            cfg.vectorizer.max_ngram = range.at(1).get<int>();
        }
        if (v.contains("weighting")) {
            const std::string w = v.at("weighting").get<std::string>();
            if (w == "tfidf") {
                cfg.vectorizer.use_idf = true;
            } else if (w == "count") {
                cfg.vectorizer.use_idf = false;
            } else {
                throw Error("config: vectorizer.weighting must be 'tfidf' or 'count'");
            }
        }
        if (cfg.vectorizer.max_ngram < 1 || cfg.vectorizer.max_ngram > 2) {
            throw Error("config: vectorizer max ngram must be 1 or 2");
        }
    }
    if (doc.contains("classifiers")) {
        for (const auto& [name, hj] : doc.at("classifiers").items()) {
            const ModelKind kind = model_kind_from_string(name);
            cfg.classifiers[name] = hyperparams_override(kind, hj);
        }
    }
    if (doc.contains("ensemble")) {
        const auto& e = doc.at("ensemble");
        if (e.contains("members")) {
            const auto& members = e.at("members");
            if (!members.is_array() || members.size() != 2) {
                throw Error("config: ensemble.members must list exactly two model kinds");
            }
            cfg.ensemble.member_a = model_kind_from_string(members.at(0).get<std::string>());
            cfg.ensemble.member_b = model_kind_from_string(members.at(1).get<std::string>());
            if (cfg.ensemble.member_a == cfg.ensemble.member_b) {
                throw Error("config: ensemble members must be distinct kinds");
            }
        }
        if (e.contains("thresholds")) {
            const auto& t = e.at("thresholds");
            if (!t.is_array() || t.size() != 2) {
                throw Error("config: ensemble.thresholds must be [threshold_a, threshold_b]");
            }
            const double ta = t.at(0).get<double>();
            const double tb = t.at(1).get<double>();
            if (ta < 0.0 || ta > 1.0 || tb < 0.0 || tb > 1.0) {
                throw Error("config: ensemble thresholds must lie in [0,1]");
            }
            cfg.ensemble.thresholds = {ta, tb};
        }
        cfg.ensemble.target_accuracy = e.value("target_accuracy", cfg.ensemble.target_accuracy);
        cfg.ensemble.validation_fraction =
            e.value("validation_fraction", cfg.ensemble.validation_fraction);
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace ticketd
