#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ticketd/vectorizer.hpp"

namespace ticketd {

enum class ModelKind { nb, lr, svm, mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Bijection between resolver-group labels and class indices 0..C-1.
/// Labels are kept sorted so the mapping is reproducible.
struct LabelCodec {
    std::vector<std::string> labels;
    std::unordered_map<std::string, int> index;

    static LabelCodec from_labels(const std::set<std::string>& labels);

    size_t size() const { return labels.size(); }
    const std::string& label(int cls) const { return labels.at(static_cast<size_t>(cls)); }
    int require(const std::string& label) const;
    bool contains(const std::string& label) const { return index.count(label) > 0; }
};

struct Hyperparams {
    double learning_rate = 0.1;
    bool lr_decay = true; // eta_t = learning_rate / sqrt(t) when set
    double l2 = 1e-4;
    int epochs = 20;
    int batch_size = 64;
    // mlp
    int hidden = 256;
    double momentum = 0.9;
    // nb
    double alpha = 1.0;
};

Hyperparams default_hyperparams(ModelKind kind);

struct TrainExample {
    SparseVector x;
    int label = 0;
};

/// Trained classifier state. Only the blocks for `kind` are populated.
struct Model {
    ModelKind kind = ModelKind::nb;
    size_t n_features = 0;
    size_t n_classes = 0;
    Hyperparams hp;
    uint64_t train_seed = 0;

    // nb
    std::vector<double> log_prior;      // C
    std::vector<double> log_likelihood; // C x V, row-major per class

    // lr / svm
    std::vector<double> weights; // C x V, row-major per class
    std::vector<double> bias;    // C

    // mlp
    size_t hidden = 0;
    std::vector<double> w1; // V x H, row-major per feature
    std::vector<double> b1; // H
    std::vector<double> w2; // H x C, row-major per hidden unit
    std::vector<double> b2; // C

    bool operator==(const Model&) const = default;
};

inline bool operator==(const Hyperparams& a, const Hyperparams& b) {
    return a.learning_rate == b.learning_rate && a.lr_decay == b.lr_decay && a.l2 == b.l2 &&
           a.epochs == b.epochs && a.batch_size == b.batch_size && a.hidden == b.hidden &&
           a.momentum == b.momentum && a.alpha == b.alpha;
}

/// Confidence distribution over classes. Sums to 1 within 1e-9; argmax ties
/// resolve to the lowest class index.
struct ScoredPrediction {
    std::vector<double> distribution;
    int top_class = 0;
    double top_confidence = 0.0;
};

/// Trains a model of the given kind. Deterministic: the same seed and data
/// produce bit-identical parameters.
Model train(ModelKind kind, std::span<const TrainExample> data, size_t n_features,
            size_t n_classes, const Hyperparams& hp, uint64_t seed);

struct TimedTrain {
    Model model;
    double seconds = 0.0;
};

/// train() wrapped in a steady_clock measurement (training only; any
/// vectorization happens before the clock starts).
TimedTrain timed_train(ModelKind kind, std::span<const TrainExample> data, size_t n_features,
                       size_t n_classes, const Hyperparams& hp, uint64_t seed);

ScoredPrediction predict(const Model& model, const SparseVector& x);

/// Full training objective on `data`: mean loss plus the L2 term the
/// trainers minimize.
double objective(const Model& model, std::span<const TrainExample> data);

/// Analytic gradient of objective() in flat parameter order
/// (lr/svm: weights then bias; mlp: w1, b1, w2, b2).
std::vector<double> analytic_gradient(const Model& model, std::span<const TrainExample> data);

/// Model with uniform(-0.5, 0.5) parameters for gradient verification.
Model make_random_model(ModelKind kind, size_t n_features, size_t n_classes,
                        const Hyperparams& hp, uint64_t seed);

/// Max relative error between analytic_gradient and central finite
/// differences of objective(). Coordinates whose perturbation could cross a
/// hinge or ReLU kink are skipped.
double gradient_check(const Model& model, std::span<const TrainExample> data, double epsilon);

} // namespace ticketd
