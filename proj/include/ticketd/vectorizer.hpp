#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace ticketd {

/// Sparse tf-idf feature vector: strictly increasing indices, values
/// L2-normalized to unit length unless the vector is empty.
struct SparseVector {
    std::vector<uint32_t> indices;
    std::vector<double> values;

    size_t nnz() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    bool operator==(const SparseVector&) const = default;
};

struct FitOptions {
    size_t min_df = 2;
    int max_ngram = 2;   // 1 = unigrams only, 2 = unigrams + adjacent bigrams
    bool use_idf = true; // false stores idf == 1 for every term (raw tf weighting)
};

/// Fitted n-gram vocabulary. Terms are ordered lexicographically, indices are
/// 0..|vocab|-1 with no gaps, and every idf value is > 0. Bigram terms join
/// their tokens with '_'.
struct Vocabulary {
    std::vector<std::string> terms;
    std::unordered_map<std::string, uint32_t> term_index;
    std::vector<double> idf;
    FitOptions options;

    size_t size() const { return terms.size(); }

    void rebuild_index() {
        term_index.clear();
        term_index.reserve(terms.size());
        for (uint32_t i = 0; i < terms.size(); ++i) {
            term_index.emplace(terms[i], i);
        }
    }
};

using TokenDoc = std::vector<std::string>;

/// Builds the vocabulary over every unigram and adjacent bigram occurring in
/// at least min_df documents. idf(t) = ln((1+D)/(1+df(t))) + 1.
Vocabulary fit_vocabulary(const std::vector<TokenDoc>& docs, const FitOptions& options = {});

/// tf * idf over in-vocabulary terms, L2-normalized. Out-of-vocabulary terms
/// are dropped; a document with no known terms maps to the zero vector.
SparseVector transform(const TokenDoc& doc, const Vocabulary& vocab);

} // namespace ticketd
