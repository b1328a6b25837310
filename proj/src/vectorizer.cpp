#include "ticketd/vectorizer.hpp"

#include <cmath>
#include <map>

#include "ticketd/error.hpp"

namespace ticketd {

namespace {

template <typename Fn>
void for_each_term(const TokenDoc& doc, int max_ngram, Fn&& fn) {
    for (const auto& tok : doc) {
        fn(tok);
    }
    if (max_ngram >= 2) {
        for (size_t i = 0; i + 1 < doc.size(); ++i) {
            fn(doc[i] + "_" + doc[i + 1]);
        }
    }
}

} // namespace

Vocabulary fit_vocabulary(const std::vector<TokenDoc>& docs, const FitOptions& options) {
    if (docs.empty()) {
        throw Error("fit_vocabulary: no documents");
    }
    // std::map keeps terms lexicographic, which fixes the index assignment.
    std::map<std::string, size_t> df;
    bool any_tokens = false;
    std::map<std::string, bool> seen_in_doc;
    for (const auto& doc : docs) {
        if (!doc.empty()) {
            any_tokens = true;
        }
        seen_in_doc.clear();
        for_each_term(doc, options.max_ngram,
                      [&](const std::string& term) { seen_in_doc.emplace(term, true); });
        for (const auto& [term, _] : seen_in_doc) {
            ++df[term];
        }
    }
    if (!any_tokens) {
        throw Error("fit_vocabulary: all documents are empty");
    }

    Vocabulary vocab;
    vocab.options = options;
    const double d = static_cast<double>(docs.size());
    for (const auto& [term, count] : df) {
        if (count < options.min_df) {
            continue;
        }
        vocab.terms.push_back(term);
        vocab.idf.push_back(options.use_idf
                                ? std::log((1.0 + d) / (1.0 + static_cast<double>(count))) + 1.0
                                : 1.0);
    }
    vocab.rebuild_index();
    return vocab;
}

SparseVector transform(const TokenDoc& doc, const Vocabulary& vocab) {
    std::map<uint32_t, double> tf;
    for_each_term(doc, vocab.options.max_ngram, [&](const std::string& term) {
        auto it = vocab.term_index.find(term);
        if (it != vocab.term_index.end()) {
            tf[it->second] += 1.0;
        }
    });

    SparseVector v;
    v.indices.reserve(tf.size());
    v.values.reserve(tf.size());
    double norm_sq = 0.0;
    for (const auto& [index, count] : tf) {
        const double w = count * vocab.idf[index];
        v.indices.push_back(index);
        v.values.push_back(w);
        norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& value : v.values) {
            value *= inv;
        }
    }
    return v;
}

} // namespace ticketd
