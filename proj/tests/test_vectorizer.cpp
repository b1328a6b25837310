#include <doctest.h>

#include <cmath>

#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"
#include "ticketd/vectorizer.hpp"

using namespace ticketd;

TEST_CASE("fit_vocabulary collects unigrams and adjacent bigrams") {
    FitOptions fo;
    fo.min_df = 1;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    CHECK(vocab.terms == std::vector<std::string>{"a", "a_b", "a_c", "b", "c"});
    // df(a) = 2 -> idf = ln(3/3) + 1 = 1
    CHECK(vocab.idf[vocab.term_index.at("a")] == doctest::Approx(1.0).epsilon(1e-15));
    const double expected_b = std::log(3.0 / 2.0) + 1.0;
    CHECK(vocab.idf[vocab.term_index.at("b")] == doctest::Approx(expected_b).epsilon(1e-15));
}

TEST_CASE("fit_vocabulary honors the df threshold") {
    FitOptions fo;
    fo.min_df = 2;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    CHECK(vocab.terms == std::vector<std::string>{"a"});
}

TEST_CASE("idf is strictly decreasing in document frequency") {
    FitOptions fo;
    fo.min_df = 1;
    fo.max_ngram = 1;
    // df: common=4, mid=2, rare=1
    const Vocabulary vocab = fit_vocabulary(
        {{"common", "mid"}, {"common", "mid"}, {"common", "rare"}, {"common"}}, fo);
    const double idf_common = vocab.idf[vocab.term_index.at("common")];
    const double idf_mid = vocab.idf[vocab.term_index.at("mid")];
    const double idf_rare = vocab.idf[vocab.term_index.at("rare")];
    CHECK(idf_common < idf_mid);
    CHECK(idf_mid < idf_rare);
    CHECK(idf_common > 0.0);
}

TEST_CASE("transform of a repeated single term normalizes to 1") {
    FitOptions fo;
    fo.min_df = 1;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    const SparseVector v = transform({"a", "a"}, vocab); // bigram a_a is unknown
    REQUIRE(v.nnz() == 1);
    CHECK(v.indices[0] == vocab.term_index.at("a"));
    CHECK(v.values[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("transform of a fully out-of-vocabulary doc is the zero vector") {
    FitOptions fo;
    fo.min_df = 1;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    CHECK(transform({"z"}, vocab).empty());
}

TEST_CASE("transform matches an independent hand computation") {
    FitOptions fo;
    fo.min_df = 1;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    const SparseVector v = transform({"a", "b"}, vocab);
    // terms hit: a (tf 1), b (tf 1), a_b (tf 1)
    const double w_a = 1.0 * (std::log(3.0 / 3.0) + 1.0);
    const double w_b = 1.0 * (std::log(3.0 / 2.0) + 1.0);
    const double w_ab = 1.0 * (std::log(3.0 / 2.0) + 1.0);
    const double norm = std::sqrt(w_a * w_a + w_b * w_b + w_ab * w_ab);
    REQUIRE(v.nnz() == 3);
    CHECK(v.indices[0] == vocab.term_index.at("a"));
    CHECK(v.indices[1] == vocab.term_index.at("a_b"));
    CHECK(v.indices[2] == vocab.term_index.at("b"));
    CHECK(v.values[0] == doctest::Approx(w_a / norm).epsilon(1e-12));
    CHECK(v.values[1] == doctest::Approx(w_ab / norm).epsilon(1e-12));
    CHECK(v.values[2] == doctest::Approx(w_b / norm).epsilon(1e-12));
}

TEST_CASE("transform output has strictly increasing indices and unit norm") {
    Rng rng(23);
    const std::vector<std::string> words = {"aa", "bb", "cc", "dd", "ee", "ff", "gg"};
    std::vector<TokenDoc> docs;
    for (int i = 0; i < 30; ++i) {
        TokenDoc doc;
        const size_t len = rng.below(12);
        for (size_t j = 0; j < len; ++j) {
            doc.push_back(words[rng.below(words.size())]);
        }
        docs.push_back(std::move(doc));
    }
    std::vector<TokenDoc> nonempty;
    for (auto& d : docs) {
        if (!d.empty()) nonempty.push_back(d);
    }
    const Vocabulary vocab = fit_vocabulary(nonempty, {});
    for (const auto& doc : docs) {
        const SparseVector v = transform(doc, vocab);
        for (size_t k = 1; k < v.nnz(); ++k) {
            CHECK(v.indices[k] > v.indices[k - 1]);
        }
        if (!v.empty()) {
            double norm_sq = 0.0;
            for (const double x : v.values) norm_sq += x * x;
            CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("fitting is deterministic") {
    Rng rng(29);
    const std::vector<std::string> words = {"xx", "yy", "zz", "ww"};
    std::vector<TokenDoc> docs;
    for (int i = 0; i < 20; ++i) {
        TokenDoc doc;
        for (size_t j = 0; j < 3 + rng.below(5); ++j) {
            doc.push_back(words[rng.below(words.size())]);
        }
        docs.push_back(std::move(doc));
    }
    const Vocabulary a = fit_vocabulary(docs, {});
    const Vocabulary b = fit_vocabulary(docs, {});
    CHECK(a.terms == b.terms);
    CHECK(a.idf == b.idf);
}

TEST_CASE("a doc of n tokens contributes max(n-1, 0) bigrams") {
    FitOptions fo;
    fo.min_df = 1;
    const Vocabulary vocab = fit_vocabulary({{"a", "b", "c"}}, fo);
    size_t bigrams = 0;
    for (const auto& term : vocab.terms) {
        if (term.find('_') != std::string::npos) ++bigrams;
    }
    CHECK(bigrams == 2); // a_b, b_c

    FitOptions unigram_only;
    unigram_only.min_df = 1;
    unigram_only.max_ngram = 1;
    const Vocabulary v1 = fit_vocabulary({{"a", "b", "c"}}, unigram_only);
    CHECK(v1.terms == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("fit_vocabulary error cases") {
    CHECK_THROWS_AS(fit_vocabulary({}, {}), Error);
    CHECK_THROWS_AS(fit_vocabulary({{}, {}}, {}), Error); // all documents empty
}

TEST_CASE("count weighting stores unit idf") {
    FitOptions fo;
    fo.min_df = 1;
    fo.use_idf = false;
    const Vocabulary vocab = fit_vocabulary({{"a", "b"}, {"a", "c"}}, fo);
    for (const double idf : vocab.idf) {
        CHECK(idf == 1.0);
    }
}
