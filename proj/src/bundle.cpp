#include "ticketd/bundle.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

json hyperparams_to_json(const Hyperparams& hp) {
    return {{"learning_rate", hp.learning_rate}, {"lr_decay", hp.lr_decay},
            {"l2", hp.l2},                       {"epochs", hp.epochs},
            {"batch_size", hp.batch_size},       {"hidden", hp.hidden},
            {"momentum", hp.momentum},           {"alpha", hp.alpha}};
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams hp;
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.lr_decay = j.at("lr_decay").get<bool>();
    hp.l2 = j.at("l2").get<double>();
    hp.epochs = j.at("epochs").get<int>();
    hp.batch_size = j.at("batch_size").get<int>();
    hp.hidden = j.at("hidden").get<int>();
    hp.momentum = j.at("momentum").get<double>();
    hp.alpha = j.at("alpha").get<double>();
    return hp;
}

json model_to_json(const Model& m) {
    json j = {{"kind", to_string(m.kind)},
              {"n_features", m.n_features},
              {"n_classes", m.n_classes},
              {"hyperparams", hyperparams_to_json(m.hp)},
              {"train_seed", m.train_seed}};
    switch (m.kind) {
        case ModelKind::nb:
            j["log_prior"] = m.log_prior;
            j["log_likelihood"] = m.log_likelihood;
            break;
        case ModelKind::lr:
        case ModelKind::svm:
            j["weights"] = m.weights;
            j["bias"] = m.bias;
            break;
        case ModelKind::mlp:
            j["hidden_units"] = m.hidden;
            j["w1"] = m.w1;
            j["b1"] = m.b1;
            j["w2"] = m.w2;
            j["b2"] = m.b2;
            break;
    }
    return j;
}

Model model_from_json(const json& j) {
    Model m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.n_features = j.at("n_features").get<size_t>();
    m.n_classes = j.at("n_classes").get<size_t>();
    m.hp = hyperparams_from_json(j.at("hyperparams"));
    m.train_seed = j.at("train_seed").get<uint64_t>();
    switch (m.kind) {
        case ModelKind::nb:
            m.log_prior = j.at("log_prior").get<std::vector<double>>();
            m.log_likelihood = j.at("log_likelihood").get<std::vector<double>>();
            break;
        case ModelKind::lr:
        case ModelKind::svm:
            m.weights = j.at("weights").get<std::vector<double>>();
            m.bias = j.at("bias").get<std::vector<double>>();
            break;
        case ModelKind::mlp:
            m.hidden = j.at("hidden_units").get<size_t>();
            m.w1 = j.at("w1").get<std::vector<double>>();
            m.b1 = j.at("b1").get<std::vector<double>>();
            m.w2 = j.at("w2").get<std::vector<double>>();
            m.b2 = j.at("b2").get<std::vector<double>>();
            break;
    }
    return m;
}

void check_model_shapes(const Model& m) {
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) {
            throw Error("bundle: inconsistent " + what + " for model " + to_string(m.kind));
        }
    };
    switch (m.kind) {
        case ModelKind::nb:
            expect(m.log_prior.size() == m.n_classes, "log_prior shape");
            expect(m.log_likelihood.size() == m.n_classes * m.n_features,
                   "log_likelihood shape");
            break;
        case ModelKind::lr:
        case ModelKind::svm:
            expect(m.weights.size() == m.n_classes * m.n_features, "weights shape");
            expect(m.bias.size() == m.n_classes, "bias shape");
            break;
        case ModelKind::mlp:
            expect(m.w1.size() == m.n_features * m.hidden, "w1 shape");
            expect(m.b1.size() == m.hidden, "b1 shape");
            expect(m.w2.size() == m.hidden * m.n_classes, "w2 shape");
            expect(m.b2.size() == m.n_classes, "b2 shape");
            break;
    }
}

json payload_to_json(const ModelBundle& b) {
    json models = json::object();
    for (const auto& [name, model] : b.models) {
        models[name] = model_to_json(model);
    }
    return {
        {"vocab",
         {{"terms", b.vocab.terms},
          {"idf", b.vocab.idf},
          {"min_df", b.vocab.options.min_df},
          {"max_ngram", b.vocab.options.max_ngram},
          {"use_idf", b.vocab.options.use_idf}}},
        {"codec", {{"labels", b.codec.labels}}},
        {"models", models},
        {"ensemble",
         {{"member_a", to_string(b.ensemble.member_a)},
          {"member_b", to_string(b.ensemble.member_b)},
          {"threshold_a", b.ensemble.threshold_a},
          {"threshold_b", b.ensemble.threshold_b},
          {"target_accuracy", b.ensemble.target_accuracy}}},
        {"merge_map",
         {{"entries", b.merge_map.entries},
          {"zone_labels", std::vector<std::string>(b.merge_map.zone_labels.begin(),
                                                   b.merge_map.zone_labels.end())}}},
        {"long_tail",
         {{"head_labels", std::vector<std::string>(b.long_tail.head_labels.begin(),
                                                   b.long_tail.head_labels.end())},
          {"tail_labels", std::vector<std::string>(b.long_tail.tail_labels.begin(),
                                                   b.long_tail.tail_labels.end())},
          {"retained_fraction", b.long_tail.retained_fraction},
          {"group_fraction", b.long_tail.group_fraction},
          {"group_cap_met", b.long_tail.group_cap_met}}},
        {"provenance",
         {{"data_digest", b.provenance.data_digest},
          {"seed", b.provenance.seed},
          {"timestamp", b.provenance.timestamp}}}};
}

ModelBundle payload_from_json(const json& p) {
    ModelBundle b;
    const auto& v = p.at("vocab");
    b.vocab.terms = v.at("terms").get<std::vector<std::string>>();
    b.vocab.idf = v.at("idf").get<std::vector<double>>();
    b.vocab.options.min_df = v.at("min_df").get<size_t>();
    b.vocab.options.max_ngram = v.at("max_ngram").get<int>();
    b.vocab.options.use_idf = v.at("use_idf").get<bool>();
    if (b.vocab.idf.size() != b.vocab.terms.size()) {
        throw Error("bundle: vocabulary terms/idf size mismatch");
    }
    b.vocab.rebuild_index();

    std::set<std::string> labels;
    for (const auto& l : p.at("codec").at("labels")) {
        labels.insert(l.get<std::string>());
    }
    b.codec = LabelCodec::from_labels(labels);
    if (b.codec.size() != p.at("codec").at("labels").size()) {
        throw Error("bundle: duplicate labels in codec");
    }

    for (const auto& [name, mj] : p.at("models").items()) {
        Model m = model_from_json(mj);
        if (to_string(m.kind) != name) {
            throw Error("bundle: model key '" + name + "' does not match kind");
        }
        if (m.n_features != b.vocab.size() || m.n_classes != b.codec.size()) {
            throw Error("bundle: model " + name + " shape does not match vocab/codec");
        }
        check_model_shapes(m);
        b.models.emplace(name, std::move(m));
    }

    const auto& e = p.at("ensemble");
    b.ensemble.member_a = model_kind_from_string(e.at("member_a").get<std::string>());
    b.ensemble.member_b = model_kind_from_string(e.at("member_b").get<std::string>());
    b.ensemble.threshold_a = e.at("threshold_a").get<double>();
    b.ensemble.threshold_b = e.at("threshold_b").get<double>();
    b.ensemble.target_accuracy = e.at("target_accuracy").get<double>();

    const auto& mm = p.at("merge_map");
    b.merge_map.entries = mm.at("entries").get<std::map<std::string, std::string>>();
    for (const auto& z : mm.at("zone_labels")) {
        b.merge_map.zone_labels.insert(z.get<std::string>());
    }

    const auto& lt = p.at("long_tail");
    for (const auto& l : lt.at("head_labels")) {
        b.long_tail.head_labels.insert(l.get<std::string>());
    }
    for (const auto& l : lt.at("tail_labels")) {
        b.long_tail.tail_labels.insert(l.get<std::string>());
    }
    b.long_tail.retained_fraction = lt.at("retained_fraction").get<double>();
    b.long_tail.group_fraction = lt.at("group_fraction").get<double>();
    b.long_tail.group_cap_met = lt.at("group_cap_met").get<bool>();

    const auto& prov = p.at("provenance");
    b.provenance.data_digest = prov.at("data_digest").get<std::string>();
    b.provenance.seed = prov.at("seed").get<uint64_t>();
    b.provenance.timestamp = prov.at("timestamp").get<std::string>();
    return b;
}

} // namespace

const Model& ModelBundle::model(ModelKind kind) const {
    auto it = models.find(to_string(kind));
    if (it == models.end()) {
        throw Error("bundle has no model of kind '" + to_string(kind) + "'");
    }
    return it->second;
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file for digest: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return fnv1a_hex(buf.str());
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    const std::string payload = payload_to_json(bundle).dump();
    json doc = {{"format_version", bundle.format_version},
                {"checksum", fnv1a_hex(payload)},
                {"payload", json::parse(payload)}};
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open bundle file for writing: " + path.string());
    }
    out << doc.dump() << '\n';
    if (!out) {
        throw Error("failed while writing bundle: " + path.string());
    }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open bundle file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error("corrupt bundle (not valid JSON): " + path.string());
    }
    if (!doc.contains("format_version") || !doc.at("format_version").is_number_integer()) {
        throw Error("corrupt bundle (missing format_version): " + path.string());
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
        throw Error("unsupported bundle format_version " + std::to_string(version) +
                    " (supported: " + std::to_string(kBundleFormatVersion) + ")");
    }
    if (!doc.contains("checksum") || !doc.contains("payload")) {
        throw Error("corrupt bundle (missing checksum or payload): " + path.string());
    }
    const std::string payload = doc.at("payload").dump();
    if (fnv1a_hex(payload) != doc.at("checksum").get<std::string>()) {
        throw Error("corrupt bundle (checksum mismatch): " + path.string());
    }
    ModelBundle b = payload_from_json(doc.at("payload"));
    b.format_version = version;
    return b;
}

} // namespace ticketd
