#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ticketd/bundle.hpp"
#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"

using namespace ticketd;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "ticketd_bundle_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Small but fully populated bundle with trained svm + mlp members.
ModelBundle make_bundle() {
    Rng rng(7);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon"};
    std::vector<TokenDoc> docs;
    for (int i = 0; i < 20; ++i) {
        TokenDoc doc;
        for (int j = 0; j < 5; ++j) doc.push_back(words[rng.below(words.size())]);
        docs.push_back(std::move(doc));
    }
    FitOptions fo;
    fo.min_df = 1;

    ModelBundle b;
    b.vocab = fit_vocabulary(docs, fo);
    b.codec = LabelCodec::from_labels({"G1", "G2", "G3"});

    std::vector<TrainExample> data;
    for (const auto& doc : docs) {
        data.push_back(
            {transform(doc, b.vocab), static_cast<int>(rng.below(b.codec.size()))});
    }
    for (size_t c = 0; c < 3; ++c) {
        data[c].label = static_cast<int>(c); // every class populated
    }
    Hyperparams svm_hp = default_hyperparams(ModelKind::svm);
    svm_hp.epochs = 3;
    Hyperparams mlp_hp = default_hyperparams(ModelKind::mlp);
    mlp_hp.epochs = 3;
    mlp_hp.hidden = 8;
    b.models.emplace("svm", train(ModelKind::svm, data, b.vocab.size(), 3, svm_hp, 1));
    b.models.emplace("mlp", train(ModelKind::mlp, data, b.vocab.size(), 3, mlp_hp, 2));

    b.ensemble.member_a = ModelKind::svm;
    b.ensemble.member_b = ModelKind::mlp;
    b.ensemble.threshold_a = 0.5;
    b.ensemble.threshold_b = 0.6;
    b.merge_map.entries["G2_T2"] = "G2";
    b.merge_map.zone_labels.insert("G3");
    b.long_tail.head_labels = {"G1", "G2", "G3"};
    b.long_tail.tail_labels = {"RARE"};
    b.long_tail.retained_fraction = 0.99;
    b.long_tail.group_fraction = 0.75;
    b.provenance.data_digest = "00112233aabbccdd";
    b.provenance.seed = 42;
    return b;
}

} // namespace

TEST_CASE("bundle round-trip preserves predictions bit-exactly") {
    const ModelBundle original = make_bundle();
    const auto path = temp_dir() / "roundtrip.json";
    save_bundle(original, path);
    const ModelBundle loaded = load_bundle(path);

    CHECK(loaded.codec.labels == original.codec.labels);
    CHECK(loaded.vocab.terms == original.vocab.terms);
    CHECK(loaded.vocab.idf == original.vocab.idf);
    CHECK(loaded.model(ModelKind::svm) == original.model(ModelKind::svm));
    CHECK(loaded.model(ModelKind::mlp) == original.model(ModelKind::mlp));
    CHECK(loaded.ensemble == original.ensemble);
    CHECK(loaded.merge_map.entries == original.merge_map.entries);
    CHECK(loaded.long_tail.head_labels == original.long_tail.head_labels);
    CHECK(loaded.provenance.data_digest == original.provenance.data_digest);

    Rng rng(13);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "zzz"};
    for (int i = 0; i < 100; ++i) {
        TokenDoc doc;
        for (int j = 0; j < 6; ++j) doc.push_back(words[rng.below(words.size())]);
        const SparseVector x = transform(doc, original.vocab);
        for (const ModelKind kind : {ModelKind::svm, ModelKind::mlp}) {
            const ScoredPrediction a = predict(original.model(kind), x);
            const ScoredPrediction b = predict(loaded.model(kind), x);
            CHECK(a.distribution == b.distribution); // bit-identical
            CHECK(a.top_class == b.top_class);
        }
    }
}

TEST_CASE("bundle serialization is byte-deterministic") {
    const ModelBundle bundle = make_bundle();
    const auto path_a = temp_dir() / "a.json";
    const auto path_b = temp_dir() / "b.json";
    save_bundle(bundle, path_a);
    save_bundle(bundle, path_b);
    CHECK(slurp(path_a) == slurp(path_b));

    // save -> load -> save is also stable
    const auto path_c = temp_dir() / "c.json";
    save_bundle(load_bundle(path_a), path_c);
    CHECK(slurp(path_a) == slurp(path_c));
}

TEST_CASE("load_bundle rejects future format versions") {
    const ModelBundle bundle = make_bundle();
    const auto path = temp_dir() / "future.json";
    save_bundle(bundle, path);
    std::string text = slurp(path);
    const std::string needle = "\"format_version\":1";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"format_version\":9");
    {
        std::ofstream out(path);
        out << text;
    }
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("format_version"), Error);
}

TEST_CASE("load_bundle rejects truncated files") {
    const ModelBundle bundle = make_bundle();
    const auto path = temp_dir() / "truncated.json";
    save_bundle(bundle, path);
    const std::string text = slurp(path);
    {
        std::ofstream out(path);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("corrupt"), Error);
}

TEST_CASE("load_bundle detects payload tampering") {
    const ModelBundle bundle = make_bundle();
    const auto path = temp_dir() / "tampered.json";
    save_bundle(bundle, path);
    std::string text = slurp(path);
    const std::string needle = "\"threshold_a\":0.5";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"threshold_a\":0.9");
    {
        std::ofstream out(path);
        out << text;
    }
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("checksum"), Error);
}

TEST_CASE("load_bundle requires a readable file") {
    CHECK_THROWS_AS(load_bundle(temp_dir() / "does_not_exist.json"), Error);
}

TEST_CASE("fnv1a digest is stable") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == fnv1a_hex("a"));
    CHECK(fnv1a_hex("a") != fnv1a_hex("b"));

    const auto path = temp_dir() / "digest.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "ticket data";
    }
    CHECK(file_digest(path) == fnv1a_hex("ticket data"));
}
