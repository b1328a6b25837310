#include <doctest.h>

#include <cmath>

#include "ticketd/classifier.hpp"
#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"

using namespace ticketd;

namespace {

SparseVector sparse(std::vector<std::pair<uint32_t, double>> entries) {
    SparseVector v;
    for (const auto& [i, x] : entries) {
        v.indices.push_back(i);
        v.values.push_back(x);
    }
    return v;
}

/// Independent posterior oracle: probability-space enumeration from the raw
/// counts with long double pow, no logs, no shared code with predict().
std::vector<double> nb_bruteforce(const std::vector<TrainExample>& data, size_t n_features,
                                  size_t n_classes, double alpha, const SparseVector& x) {
    std::vector<long double> counts(n_classes * n_features, 0.0L);
    std::vector<long double> totals(n_classes, 0.0L);
    std::vector<size_t> docs(n_classes, 0);
    for (const auto& ex : data) {
        const size_t c = static_cast<size_t>(ex.label);
        ++docs[c];
        for (size_t k = 0; k < ex.x.nnz(); ++k) {
            counts[c * n_features + ex.x.indices[k]] += ex.x.values[k];
            totals[c] += ex.x.values[k];
        }
    }
    std::vector<long double> post(n_classes);
    long double sum = 0.0L;
    for (size_t c = 0; c < n_classes; ++c) {
        long double p = static_cast<long double>(docs[c]) / static_cast<long double>(data.size());
        for (size_t k = 0; k < x.nnz(); ++k) {
            const long double cond =
                (counts[c * n_features + x.indices[k]] + static_cast<long double>(alpha)) /
                (totals[c] + static_cast<long double>(alpha) * static_cast<long double>(n_features));
            p *= powl(cond, static_cast<long double>(x.values[k]));
        }
        post[c] = p;
        sum += p;
    }
    std::vector<double> out(n_classes);
    for (size_t c = 0; c < n_classes; ++c) {
        out[c] = static_cast<double>(post[c] / sum);
    }
    return out;
}

std::vector<TrainExample> random_instance(Rng& rng, size_t n_features, size_t n_classes,
                                          size_t n_examples) {
    std::vector<TrainExample> data;
    for (size_t c = 0; c < n_classes; ++c) {
        data.push_back({sparse({{static_cast<uint32_t>(c % n_features), 1.0}}),
                        static_cast<int>(c)});
    }
    while (data.size() < n_examples) {
        TrainExample ex;
        ex.label = static_cast<int>(rng.below(n_classes));
        for (uint32_t v = 0; v < n_features; ++v) {
            if (rng.uniform() < 0.6) {
                ex.x.indices.push_back(v);
                ex.x.values.push_back(rng.uniform(0.05, 1.0));
            }
        }
        data.push_back(std::move(ex));
    }
    return data;
}

/// 2-feature linearly separable set: class 0 lives on axis 0, class 1 on
/// axis 1.
std::vector<TrainExample> separable_set(size_t n_points, uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainExample> data;
    for (size_t i = 0; i < n_points; ++i) {
        const int label = static_cast<int>(i % 2);
        data.push_back(
            {sparse({{static_cast<uint32_t>(label), rng.uniform(0.6, 1.0)}}), label});
    }
    return data;
}

size_t count_train_errors(const Model& m, const std::vector<TrainExample>& data) {
    size_t errors = 0;
    for (const auto& ex : data) {
        if (predict(m, ex.x).top_class != ex.label) ++errors;
    }
    return errors;
}

} // namespace

TEST_CASE("nb training matches the closed-form hand computation") {
    const std::vector<TrainExample> data = {{sparse({{0, 3.0}}), 0}, {sparse({{1, 3.0}}), 1}};
    const Model m = train(ModelKind::nb, data, 2, 2, default_hyperparams(ModelKind::nb), 0);
    // P(a|0) = (3+1)/(3+2) = 0.8, P(a|1) = (0+1)/(3+2) = 0.2
    CHECK(std::exp(m.log_likelihood[0]) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(std::exp(m.log_likelihood[2]) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::exp(m.log_prior[0]) == doctest::Approx(0.5).epsilon(1e-12));

    // Bayes rule by hand: posterior(class0 | unit vector on a) = 0.8
    const ScoredPrediction p = predict(m, sparse({{0, 1.0}}));
    CHECK(p.distribution[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(p.top_class == 0);
    CHECK(p.top_confidence == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("nb on the zero vector returns the priors") {
    const std::vector<TrainExample> data = {{sparse({{0, 2.0}}), 0},
                                            {sparse({{1, 1.0}}), 1},
                                            {sparse({{1, 2.0}}), 1}};
    const Model m = train(ModelKind::nb, data, 2, 2, default_hyperparams(ModelKind::nb), 0);
    const ScoredPrediction p = predict(m, SparseVector{});
    CHECK(p.distribution[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p.distribution[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("nb matches the brute-force posterior oracle on random instances") {
    Rng rng(101);
    for (int round = 0; round < 60; ++round) {
        const size_t n_features = 2 + rng.below(4); // V <= 5
        const size_t n_classes = 2 + rng.below(2);  // C <= 3
        const auto data = random_instance(rng, n_features, n_classes, 6 + rng.below(6));
        const Model m =
            train(ModelKind::nb, data, n_features, n_classes, default_hyperparams(ModelKind::nb), 0);
        SparseVector x;
        for (uint32_t v = 0; v < n_features; ++v) {
            if (rng.uniform() < 0.5) {
                x.indices.push_back(v);
                x.values.push_back(rng.uniform(0.0, 2.0));
            }
        }
        const std::vector<double> expected = nb_bruteforce(data, n_features, n_classes, 1.0, x);
        const ScoredPrediction got = predict(m, x);
        for (size_t c = 0; c < n_classes; ++c) {
            CHECK(got.distribution[c] == doctest::Approx(expected[c]).epsilon(1e-9));
        }
    }
}

TEST_CASE("every prediction is a proper distribution") {
    Rng rng(55);
    const auto data = random_instance(rng, 6, 3, 24);
    for (const ModelKind kind : {ModelKind::nb, ModelKind::lr, ModelKind::svm, ModelKind::mlp}) {
        Hyperparams hp = default_hyperparams(kind);
        hp.epochs = 3;
        hp.hidden = 8;
        const Model m = train(kind, data, 6, 3, hp, 42);
        for (int round = 0; round < 20; ++round) {
            SparseVector x;
            for (uint32_t v = 0; v < 6; ++v) {
                if (rng.uniform() < 0.5) {
                    x.indices.push_back(v);
                    x.values.push_back(rng.uniform(0.0, 1.0));
                }
            }
            const ScoredPrediction p = predict(m, x);
            double sum = 0.0;
            for (const double d : p.distribution) {
                CHECK(d >= 0.0);
                sum += d;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
            CHECK(p.top_confidence == p.distribution[static_cast<size_t>(p.top_class)]);
        }
    }
}

TEST_CASE("argmax ties resolve to the lowest class index") {
    Model m;
    m.kind = ModelKind::nb;
    m.n_features = 2;
    m.n_classes = 3;
    m.log_prior = {std::log(1.0 / 3), std::log(1.0 / 3), std::log(1.0 / 3)};
    m.log_likelihood.assign(6, std::log(0.5));
    const ScoredPrediction p = predict(m, sparse({{0, 1.0}}));
    CHECK(p.top_class == 0);
    CHECK(p.top_confidence == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("lr, svm and mlp separate a linearly separable set perfectly") {
    const auto data = separable_set(200, 77);
    for (const ModelKind kind : {ModelKind::lr, ModelKind::svm, ModelKind::mlp}) {
        Hyperparams hp = default_hyperparams(kind);
        if (kind == ModelKind::mlp) hp.hidden = 16;
        const Model m = train(kind, data, 2, 2, hp, 9);
        CHECK_MESSAGE(count_train_errors(m, data) == 0, to_string(kind));
    }
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
    Rng rng(13);
    const auto data = random_instance(rng, 8, 3, 40);
    for (const ModelKind kind : {ModelKind::nb, ModelKind::lr, ModelKind::svm, ModelKind::mlp}) {
        Hyperparams hp = default_hyperparams(kind);
        hp.epochs = 4;
        hp.hidden = 8;
        const Model a = train(kind, data, 8, 3, hp, 123);
        const Model b = train(kind, data, 8, 3, hp, 123);
        CHECK(a == b);
    }
}

TEST_CASE("full-set training loss is non-increasing with a small fixed rate") {
    Rng rng(31);
    const auto data = random_instance(rng, 6, 3, 30);
    for (const ModelKind kind : {ModelKind::lr, ModelKind::svm, ModelKind::mlp}) {
        Hyperparams hp = default_hyperparams(kind);
        hp.learning_rate = 1e-3;
        hp.lr_decay = false;
        hp.momentum = 0.0;
        hp.batch_size = 8;
        hp.hidden = 8;
        double previous = std::numeric_limits<double>::infinity();
        for (int epochs = 1; epochs <= 5; ++epochs) {
            hp.epochs = epochs;
            const Model m = train(kind, data, 6, 3, hp, 7);
            const double loss = objective(m, data);
            CHECK_MESSAGE(loss <= previous + 1e-12,
                          to_string(kind) << " epoch " << epochs);
            previous = loss;
        }
    }
}

TEST_CASE("gradient check: lr on a random small instance") {
    Rng rng(41);
    const auto data = random_instance(rng, 5, 3, 6);
    const Model m = make_random_model(ModelKind::lr, 5, 3, default_hyperparams(ModelKind::lr), 3);
    CHECK(gradient_check(m, data, 1e-5) <= 1e-4);
}

TEST_CASE("gradient check: svm away from the hinge kink") {
    Rng rng(43);
    const auto data = random_instance(rng, 5, 3, 6);
    const Model m =
        make_random_model(ModelKind::svm, 5, 3, default_hyperparams(ModelKind::svm), 5);
    CHECK(gradient_check(m, data, 1e-5) <= 1e-4);
}

TEST_CASE("gradient check: mlp with a small hidden layer") {
    Rng rng(47);
    const auto data = random_instance(rng, 5, 3, 6);
    Hyperparams hp = default_hyperparams(ModelKind::mlp);
    hp.hidden = 4;
    const Model m = make_random_model(ModelKind::mlp, 5, 3, hp, 11);
    CHECK(gradient_check(m, data, 1e-5) <= 1e-4);
}

TEST_CASE("zero-weight lr model with zero input has zero weight gradient") {
    Model m;
    m.kind = ModelKind::lr;
    m.n_features = 4;
    m.n_classes = 2;
    m.hp = default_hyperparams(ModelKind::lr);
    m.weights.assign(8, 0.0);
    m.bias.assign(2, 0.0);
    const std::vector<TrainExample> data = {{SparseVector{}, 0}};
    const std::vector<double> grad = analytic_gradient(m, data);
    for (size_t i = 0; i < 8; ++i) {
        CHECK(grad[i] == 0.0); // regularizer gradient of zero weights is exactly zero
    }
    CHECK(gradient_check(m, data, 1e-5) <= 1e-6);
}

TEST_CASE("train rejects invalid inputs") {
    const std::vector<TrainExample> missing_class = {{sparse({{0, 1.0}}), 0},
                                                     {sparse({{1, 1.0}}), 2}};
    CHECK_THROWS_AS(train(ModelKind::nb, missing_class, 2, 3, {}, 0), Error);
    CHECK_THROWS_AS(train(ModelKind::lr, {}, 2, 2, {}, 0), Error);
    const std::vector<TrainExample> out_of_range = {{sparse({{9, 1.0}}), 0},
                                                    {sparse({{0, 1.0}}), 1}};
    CHECK_THROWS_AS(train(ModelKind::svm, out_of_range, 2, 2, {}, 0), Error);
}

TEST_CASE("predict rejects vectors outside the model dimension") {
    const std::vector<TrainExample> data = {{sparse({{0, 1.0}}), 0}, {sparse({{1, 1.0}}), 1}};
    const Model m = train(ModelKind::nb, data, 2, 2, {}, 0);
    CHECK_THROWS_AS(predict(m, sparse({{5, 1.0}})), Error);
}
