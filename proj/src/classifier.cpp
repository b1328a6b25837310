#include "ticketd/classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ticketd/error.hpp"
#include "ticketd/rng.hpp"

namespace ticketd {

namespace {

constexpr double kTinyProb = 1e-300;

void validate_training_data(std::span<const TrainExample> data, size_t n_features,
                            size_t n_classes) {
    if (data.empty()) {
        throw Error("train: empty training data");
    }
    if (n_classes == 0) {
        throw Error("train: zero classes");
    }
    std::vector<size_t> per_class(n_classes, 0);
    for (const auto& ex : data) {
        if (ex.label < 0 || static_cast<size_t>(ex.label) >= n_classes) {
            throw Error("train: class index " + std::to_string(ex.label) + " out of range");
        }
        ++per_class[static_cast<size_t>(ex.label)];
        if (!ex.x.indices.empty() && ex.x.indices.back() >= n_features) {
            throw Error("train: feature index " + std::to_string(ex.x.indices.back()) +
                        " out of range");
        }
    }
    for (size_t c = 0; c < n_classes; ++c) {
        if (per_class[c] == 0) {
            throw Error("train: class " + std::to_string(c) + " has zero examples");
        }
    }
}

/// In-place softmax with max-shift.
void softmax(std::vector<double>& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (auto& s : scores) {
        s = std::exp(s - top);
        sum += s;
    }
    for (auto& s : scores) {
        s /= sum;
    }
}

void linear_scores(const Model& m, const SparseVector& x, std::vector<double>& scores) {
    const size_t v_dim = m.n_features;
    for (size_t c = 0; c < m.n_classes; ++c) {
        double s = m.bias[c];
        const double* row = m.weights.data() + c * v_dim;
        for (size_t k = 0; k < x.nnz(); ++k) {
            s += row[x.indices[k]] * x.values[k];
        }
        scores[c] = s;
    }
}

void mlp_forward(const Model& m, const SparseVector& x, std::vector<double>& z,
                 std::vector<double>& h, std::vector<double>& logits) {
    const size_t hd = m.hidden;
    z.assign(m.b1.begin(), m.b1.end());
    for (size_t k = 0; k < x.nnz(); ++k) {
        const double val = x.values[k];
        const double* row = m.w1.data() + static_cast<size_t>(x.indices[k]) * hd;
        for (size_t j = 0; j < hd; ++j) {
            z[j] += val * row[j];
        }
    }
    h.resize(hd);
    for (size_t j = 0; j < hd; ++j) {
        h[j] = z[j] > 0.0 ? z[j] : 0.0;
    }
    logits.assign(m.b2.begin(), m.b2.end());
    for (size_t j = 0; j < hd; ++j) {
        const double hj = h[j];
        if (hj == 0.0) continue;
        const double* row = m.w2.data() + j * m.n_classes;
        for (size_t c = 0; c < m.n_classes; ++c) {
            logits[c] += hj * row[c];
        }
    }
}

Model train_nb(std::span<const TrainExample> data, size_t n_features, size_t n_classes,
               const Hyperparams& hp, uint64_t seed) {
    Model m;
    m.kind = ModelKind::nb;
    m.n_features = n_features;
    m.n_classes = n_classes;
    m.hp = hp;
    m.train_seed = seed;
    m.log_prior.assign(n_classes, 0.0);
    m.log_likelihood.assign(n_classes * n_features, 0.0);

    std::vector<double> counts(n_classes * n_features, 0.0);
    std::vector<double> totals(n_classes, 0.0);
    std::vector<size_t> docs_per_class(n_classes, 0);
    for (const auto& ex : data) {
        const size_t c = static_cast<size_t>(ex.label);
        ++docs_per_class[c];
        double* row = counts.data() + c * n_features;
        for (size_t k = 0; k < ex.x.nnz(); ++k) {
            row[ex.x.indices[k]] += ex.x.values[k];
            totals[c] += ex.x.values[k];
        }
    }
    const double n = static_cast<double>(data.size());
    const double alpha = hp.alpha;
    for (size_t c = 0; c < n_classes; ++c) {
        m.log_prior[c] = std::log(static_cast<double>(docs_per_class[c]) / n);
        const double denom = totals[c] + alpha * static_cast<double>(n_features);
        const double* crow = counts.data() + c * n_features;
        double* lrow = m.log_likelihood.data() + c * n_features;
        for (size_t v = 0; v < n_features; ++v) {
            lrow[v] = std::log((crow[v] + alpha) / denom);
        }
    }
    return m;
}

Model train_linear(ModelKind kind, std::span<const TrainExample> data, size_t n_features,
                   size_t n_classes, const Hyperparams& hp, uint64_t seed) {
    Model m;
    m.kind = kind;
    m.n_features = n_features;
    m.n_classes = n_classes;
    m.hp = hp;
    m.train_seed = seed;
    m.weights.assign(n_classes * n_features, 0.0);
    m.bias.assign(n_classes, 0.0);

    Rng rng(seed);
    std::vector<uint32_t> order(data.size());
    std::iota(order.begin(), order.end(), 0u);

    const size_t batch = std::max(1, hp.batch_size);
    std::vector<double> grad_w(n_classes * n_features);
    std::vector<double> grad_b(n_classes);
    std::vector<double> scores(n_classes);
    size_t step = 0;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(order.size(), start + batch);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            ++step;
            const double eta =
                hp.lr_decay ? hp.learning_rate / std::sqrt(static_cast<double>(step))
                            : hp.learning_rate;
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);

            for (size_t i = start; i < end; ++i) {
                const auto& ex = data[order[i]];
                linear_scores(m, ex.x, scores);
                if (kind == ModelKind::lr) {
                    softmax(scores);
                    epoch_loss -= std::log(std::max(scores[ex.label], kTinyProb));
                    for (size_t c = 0; c < n_classes; ++c) {
                        const double coeff =
                            (scores[c] - (static_cast<int>(c) == ex.label ? 1.0 : 0.0)) * inv_b;
                        if (coeff == 0.0) continue;
                        double* grow = grad_w.data() + c * n_features;
                        for (size_t k = 0; k < ex.x.nnz(); ++k) {
                            grow[ex.x.indices[k]] += coeff * ex.x.values[k];
                        }
                        grad_b[c] += coeff;
                    }
                } else { // one-vs-rest hinge
                    for (size_t c = 0; c < n_classes; ++c) {
                        const double target = static_cast<int>(c) == ex.label ? 1.0 : -1.0;
                        const double margin = target * scores[c];
                        if (margin < 1.0) {
                            epoch_loss += 1.0 - margin;
                            const double coeff = -target * inv_b;
                            double* grow = grad_w.data() + c * n_features;
                            for (size_t k = 0; k < ex.x.nnz(); ++k) {
                                grow[ex.x.indices[k]] += coeff * ex.x.values[k];
                            }
                            grad_b[c] += coeff;
                        }
                    }
                }
            }

            for (size_t idx = 0; idx < grad_w.size(); ++idx) {
                m.weights[idx] -= eta * (grad_w[idx] + hp.l2 * m.weights[idx]);
            }
            for (size_t c = 0; c < n_classes; ++c) {
                m.bias[c] -= eta * grad_b[c];
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw Error("train(" + to_string(kind) + "): non-finite loss at epoch " +
                        std::to_string(epoch));
        }
    }
    return m;
}

Model train_mlp(std::span<const TrainExample> data, size_t n_features, size_t n_classes,
                const Hyperparams& hp, uint64_t seed) {
    if (hp.hidden <= 0) {
        throw Error("train(mlp): hidden layer size must be positive");
    }
    const size_t hd = static_cast<size_t>(hp.hidden);

    Model m;
    m.kind = ModelKind::mlp;
    m.n_features = n_features;
    m.n_classes = n_classes;
    m.hp = hp;
    m.train_seed = seed;
    m.hidden = hd;
    m.w1.resize(n_features * hd);
    m.b1.assign(hd, 0.0);
    m.w2.resize(hd * n_classes);
    m.b2.assign(n_classes, 0.0);

    Rng rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(std::max<size_t>(1, n_features)));
    for (auto& w : m.w1) w = rng.uniform(-s1, s1);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hd));
    for (auto& w : m.w2) w = rng.uniform(-s2, s2);

    std::vector<double> vel_w1(m.w1.size(), 0.0), vel_b1(hd, 0.0);
    std::vector<double> vel_w2(m.w2.size(), 0.0), vel_b2(n_classes, 0.0);
    std::vector<double> grad_w1(m.w1.size(), 0.0), grad_b1(hd);
    std::vector<double> grad_w2(m.w2.size(), 0.0), grad_b2(n_classes);
    // grad_w1 rows are zeroed lazily via a per-batch stamp; untouched rows
    // read from zero_row during the update.
    std::vector<uint64_t> row_stamp(n_features, 0);
    const std::vector<double> zero_row(hd, 0.0);

    std::vector<uint32_t> order(data.size());
    std::iota(order.begin(), order.end(), 0u);
    const size_t batch = std::max(1, hp.batch_size);
    std::vector<double> z(hd), h(hd), logits(n_classes), dh(hd);
    uint64_t batch_id = 0;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(order.size(), start + batch);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            ++batch_id;
            std::fill(grad_b1.begin(), grad_b1.end(), 0.0);
            std::fill(grad_b2.begin(), grad_b2.end(), 0.0);
            std::fill(grad_w2.begin(), grad_w2.end(), 0.0);

            for (size_t i = start; i < end; ++i) {
                const auto& ex = data[order[i]];
                mlp_forward(m, ex.x, z, h, logits);
                softmax(logits);
                epoch_loss -= std::log(std::max(logits[ex.label], kTinyProb));

                // logits now hold p; reuse as dlogit
                logits[ex.label] -= 1.0;
                for (size_t c = 0; c < n_classes; ++c) {
                    logits[c] *= inv_b;
                    grad_b2[c] += logits[c];
                }
                for (size_t j = 0; j < hd; ++j) {
                    const double* w2row = m.w2.data() + j * n_classes;
                    double* g2row = grad_w2.data() + j * n_classes;
                    double acc = 0.0;
                    const double hj = h[j];
                    for (size_t c = 0; c < n_classes; ++c) {
                        g2row[c] += hj * logits[c];
                        acc += w2row[c] * logits[c];
                    }
                    dh[j] = z[j] > 0.0 ? acc : 0.0;
                    grad_b1[j] += dh[j];
                }
                for (size_t k = 0; k < ex.x.nnz(); ++k) {
                    const uint32_t v = ex.x.indices[k];
                    double* grow = grad_w1.data() + static_cast<size_t>(v) * hd;
                    if (row_stamp[v] != batch_id) {
                        row_stamp[v] = batch_id;
                        std::fill(grow, grow + hd, 0.0);
                    }
                    const double val = ex.x.values[k];
                    for (size_t j = 0; j < hd; ++j) {
                        grow[j] += val * dh[j];
                    }
                }
            }

            const double eta = hp.learning_rate;
            const double mu = hp.momentum;
            for (size_t v = 0; v < n_features; ++v) {
                const double* grow =
                    row_stamp[v] == batch_id ? grad_w1.data() + v * hd : zero_row.data();
                double* wrow = m.w1.data() + v * hd;
                double* vrow = vel_w1.data() + v * hd;
                for (size_t j = 0; j < hd; ++j) {
                    vrow[j] = mu * vrow[j] - eta * (grow[j] + hp.l2 * wrow[j]);
                    wrow[j] += vrow[j];
                }
            }
            for (size_t j = 0; j < hd; ++j) {
                vel_b1[j] = mu * vel_b1[j] - eta * grad_b1[j];
                m.b1[j] += vel_b1[j];
            }
            for (size_t idx = 0; idx < m.w2.size(); ++idx) {
                vel_w2[idx] = mu * vel_w2[idx] - eta * (grad_w2[idx] + hp.l2 * m.w2[idx]);
                m.w2[idx] += vel_w2[idx];
            }
            for (size_t c = 0; c < n_classes; ++c) {
                vel_b2[c] = mu * vel_b2[c] - eta * grad_b2[c];
                m.b2[c] += vel_b2[c];
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw Error("train(mlp): non-finite loss at epoch " + std::to_string(epoch));
        }
    }
    return m;
}

} // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::nb: return "nb";
        case ModelKind::lr: return "lr";
        case ModelKind::svm: return "svm";
        case ModelKind::mlp: return "mlp";
    }
    return "nb";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "nb") return ModelKind::nb;
    if (s == "lr") return ModelKind::lr;
    if (s == "svm") return ModelKind::svm;
    if (s == "mlp") return ModelKind::mlp;
    throw Error("unknown model kind '" + s + "'");
}

LabelCodec LabelCodec::from_labels(const std::set<std::string>& labels) {
    LabelCodec codec;
    codec.labels.assign(labels.begin(), labels.end());
    for (int i = 0; i < static_cast<int>(codec.labels.size()); ++i) {
        codec.index.emplace(codec.labels[static_cast<size_t>(i)], i);
    }
    return codec;
}

int LabelCodec::require(const std::string& label) const {
    auto it = index.find(label);
    if (it == index.end()) {
        throw Error("label '" + label + "' is not in the codec");
    }
    return it->second;
}

Hyperparams default_hyperparams(ModelKind kind) {
    Hyperparams hp;
    switch (kind) {
        case ModelKind::nb:
            break;
        case ModelKind::lr:
        case ModelKind::svm:
            hp.learning_rate = 0.1;
            hp.l2 = 1e-4;
            hp.epochs = 20;
            hp.batch_size = 64;
            break;
        case ModelKind::mlp:
            hp.learning_rate = 0.01;
            hp.l2 = 0.0;
            hp.epochs = 30;
            hp.batch_size = 64;
            hp.hidden = 256;
            hp.momentum = 0.9;
            break;
    }
    return hp;
}

Model train(ModelKind kind, std::span<const TrainExample> data, size_t n_features,
            size_t n_classes, const Hyperparams& hp, uint64_t seed) {
    validate_training_data(data, n_features, n_classes);
    switch (kind) {
        case ModelKind::nb: return train_nb(data, n_features, n_classes, hp, seed);
        case ModelKind::lr:
        case ModelKind::svm: return train_linear(kind, data, n_features, n_classes, hp, seed);
        case ModelKind::mlp: return train_mlp(data, n_features, n_classes, hp, seed);
    }
    throw Error("train: unknown model kind");
}

TimedTrain timed_train(ModelKind kind, std::span<const TrainExample> data, size_t n_features,
                       size_t n_classes, const Hyperparams& hp, uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Model m = train(kind, data, n_features, n_classes, hp, seed);
    const auto t1 = std::chrono::steady_clock::now();
    return {std::move(m), std::chrono::duration<double>(t1 - t0).count()};
}

ScoredPrediction predict(const Model& model, const SparseVector& x) {
    if (!x.indices.empty() && x.indices.back() >= model.n_features) {
        throw Error("predict: feature index " + std::to_string(x.indices.back()) +
                    " exceeds model dimension " + std::to_string(model.n_features));
    }
    ScoredPrediction pred;
    pred.distribution.resize(model.n_classes);

    if (model.kind == ModelKind::nb) {
        for (size_t c = 0; c < model.n_classes; ++c) {
            double s = model.log_prior[c];
            const double* row = model.log_likelihood.data() + c * model.n_features;
            for (size_t k = 0; k < x.nnz(); ++k) {
                s += row[x.indices[k]] * x.values[k];
            }
            pred.distribution[c] = s;
        }
        softmax(pred.distribution); // exact posterior normalization in log space
    } else if (model.kind == ModelKind::mlp) {
        std::vector<double> z, h;
        mlp_forward(model, x, z, h, pred.distribution);
        softmax(pred.distribution);
    } else {
        linear_scores(model, x, pred.distribution);
        softmax(pred.distribution); // for svm: calibration over one-vs-rest margins
    }

    pred.top_class = 0;
    for (size_t c = 1; c < model.n_classes; ++c) {
        if (pred.distribution[c] > pred.distribution[static_cast<size_t>(pred.top_class)]) {
            pred.top_class = static_cast<int>(c);
        }
    }
    pred.top_confidence = pred.distribution[static_cast<size_t>(pred.top_class)];
    return pred;
}

double objective(const Model& model, std::span<const TrainExample> data) {
    const size_t n_classes = model.n_classes;
    double loss = 0.0;
    std::vector<double> scores(n_classes), z, h;
    for (const auto& ex : data) {
        if (model.kind == ModelKind::lr) {
            linear_scores(model, ex.x, scores);
            softmax(scores);
            loss -= std::log(std::max(scores[ex.label], kTinyProb));
        } else if (model.kind == ModelKind::svm) {
            linear_scores(model, ex.x, scores);
            for (size_t c = 0; c < n_classes; ++c) {
                const double target = static_cast<int>(c) == ex.label ? 1.0 : -1.0;
                loss += std::max(0.0, 1.0 - target * scores[c]);
            }
        } else if (model.kind == ModelKind::mlp) {
            mlp_forward(model, ex.x, z, h, scores);
            softmax(scores);
            loss -= std::log(std::max(scores[ex.label], kTinyProb));
        } else {
            throw Error("objective: not defined for nb");
        }
    }
    loss /= static_cast<double>(data.size());

    double reg = 0.0;
    for (const double w : model.weights) reg += w * w;
    for (const double w : model.w1) reg += w * w;
    for (const double w : model.w2) reg += w * w;
    return loss + 0.5 * model.hp.l2 * reg;
}

std::vector<double> analytic_gradient(const Model& model, std::span<const TrainExample> data) {
    const size_t n_classes = model.n_classes;
    const size_t v_dim = model.n_features;
    const double inv_n = 1.0 / static_cast<double>(data.size());

    if (model.kind == ModelKind::lr || model.kind == ModelKind::svm) {
        std::vector<double> grad(n_classes * v_dim + n_classes, 0.0);
        double* gw = grad.data();
        double* gb = grad.data() + n_classes * v_dim;
        std::vector<double> scores(n_classes);
        for (const auto& ex : data) {
            linear_scores(model, ex.x, scores);
            if (model.kind == ModelKind::lr) {
                softmax(scores);
                for (size_t c = 0; c < n_classes; ++c) {
                    const double coeff =
                        (scores[c] - (static_cast<int>(c) == ex.label ? 1.0 : 0.0)) * inv_n;
                    double* grow = gw + c * v_dim;
                    for (size_t k = 0; k < ex.x.nnz(); ++k) {
                        grow[ex.x.indices[k]] += coeff * ex.x.values[k];
                    }
                    gb[c] += coeff;
                }
            } else {
                for (size_t c = 0; c < n_classes; ++c) {
                    const double target = static_cast<int>(c) == ex.label ? 1.0 : -1.0;
                    if (target * scores[c] < 1.0) {
                        const double coeff = -target * inv_n;
                        double* grow = gw + c * v_dim;
                        for (size_t k = 0; k < ex.x.nnz(); ++k) {
                            grow[ex.x.indices[k]] += coeff * ex.x.values[k];
                        }
                        gb[c] += coeff;
                    }
                }
            }
        }
        for (size_t idx = 0; idx < n_classes * v_dim; ++idx) {
            gw[idx] += model.hp.l2 * model.weights[idx];
        }
        return grad;
    }

    if (model.kind == ModelKind::mlp) {
        const size_t hd = model.hidden;
        std::vector<double> grad(v_dim * hd + hd + hd * n_classes + n_classes, 0.0);
        double* gw1 = grad.data();
        double* gb1 = gw1 + v_dim * hd;
        double* gw2 = gb1 + hd;
        double* gb2 = gw2 + hd * n_classes;
        std::vector<double> z, h, p(n_classes), dh(hd);
        for (const auto& ex : data) {
            mlp_forward(model, ex.x, z, h, p);
            softmax(p);
            p[ex.label] -= 1.0;
            for (size_t c = 0; c < n_classes; ++c) {
                p[c] *= inv_n;
                gb2[c] += p[c];
            }
            for (size_t j = 0; j < hd; ++j) {
                const double* w2row = model.w2.data() + j * n_classes;
                double* g2row = gw2 + j * n_classes;
                double acc = 0.0;
                for (size_t c = 0; c < n_classes; ++c) {
                    g2row[c] += h[j] * p[c];
                    acc += w2row[c] * p[c];
                }
                dh[j] = z[j] > 0.0 ? acc : 0.0;
                gb1[j] += dh[j];
            }
            for (size_t k = 0; k < ex.x.nnz(); ++k) {
                double* grow = gw1 + static_cast<size_t>(ex.x.indices[k]) * hd;
                for (size_t j = 0; j < hd; ++j) {
                    grow[j] += ex.x.values[k] * dh[j];
                }
            }
        }
        for (size_t idx = 0; idx < v_dim * hd; ++idx) {
            gw1[idx] += model.hp.l2 * model.w1[idx];
        }
        for (size_t idx = 0; idx < hd * n_classes; ++idx) {
            gw2[idx] += model.hp.l2 * model.w2[idx];
        }
        return grad;
    }

    throw Error("analytic_gradient: not defined for nb");
}

Model make_random_model(ModelKind kind, size_t n_features, size_t n_classes,
                        const Hyperparams& hp, uint64_t seed) {
    Model m;
    m.kind = kind;
    m.n_features = n_features;
    m.n_classes = n_classes;
    m.hp = hp;
    m.train_seed = seed;
    Rng rng(seed);
    auto fill = [&](std::vector<double>& v, size_t n) {
        v.resize(n);
        for (auto& w : v) w = rng.uniform(-0.5, 0.5);
    };
    if (kind == ModelKind::lr || kind == ModelKind::svm) {
        fill(m.weights, n_classes * n_features);
        fill(m.bias, n_classes);
    } else if (kind == ModelKind::mlp) {
        m.hidden = static_cast<size_t>(hp.hidden);
        fill(m.w1, n_features * m.hidden);
        fill(m.b1, m.hidden);
        fill(m.w2, m.hidden * n_classes);
        fill(m.b2, n_classes);
    } else {
        throw Error("make_random_model: not defined for nb");
    }
    return m;
}

namespace {

/// Flat parameter view shared by gradient_check and the finite differencer.
std::vector<double*> parameter_slots(Model& m) {
    std::vector<double*> slots;
    auto add = [&](std::vector<double>& v) {
        for (auto& w : v) slots.push_back(&w);
    };
    if (m.kind == ModelKind::lr || m.kind == ModelKind::svm) {
        add(m.weights);
        add(m.bias);
    } else {
        add(m.w1);
        add(m.b1);
        add(m.w2);
        add(m.b2);
    }
    return slots;
}

/// True when perturbing coordinate `slot` by +-epsilon could cross a hinge
/// (svm) or ReLU (mlp) kink for some sample, which would invalidate the
/// central difference.
bool near_kink(const Model& m, std::span<const TrainExample> data, size_t slot,
               double epsilon) {
    const size_t v_dim = m.n_features;
    const size_t n_classes = m.n_classes;
    if (m.kind == ModelKind::svm) {
        // slot -> class row; weight slots also know their feature column.
        size_t cls;
        bool is_bias = slot >= n_classes * v_dim;
        size_t feature = 0;
        if (is_bias) {
            cls = slot - n_classes * v_dim;
        } else {
            cls = slot / v_dim;
            feature = slot % v_dim;
        }
        std::vector<double> scores(n_classes);
        for (const auto& ex : data) {
            linear_scores(m, ex.x, scores);
            const double target = static_cast<int>(cls) == ex.label ? 1.0 : -1.0;
            const double margin = target * scores[cls];
            double x_v = is_bias ? 1.0 : 0.0;
            if (!is_bias) {
                for (size_t k = 0; k < ex.x.nnz(); ++k) {
                    if (ex.x.indices[k] == feature) {
                        x_v = ex.x.values[k];
                        break;
                    }
                }
            }
            if (std::abs(margin - 1.0) < 10.0 * epsilon * std::max(1.0, std::abs(x_v))) {
                return true;
            }
        }
        return false;
    }
    if (m.kind == ModelKind::mlp) {
        const size_t hd = m.hidden;
        const size_t w1_end = v_dim * hd;
        const size_t b1_end = w1_end + hd;
        if (slot >= b1_end) {
            return false; // w2/b2 do not move the ReLU inputs
        }
        size_t unit;
        size_t feature = 0;
        bool is_bias = slot >= w1_end;
        if (is_bias) {
            unit = slot - w1_end;
        } else {
            unit = slot % hd;
            feature = slot / hd;
        }
        std::vector<double> z, h, logits;
        for (const auto& ex : data) {
            mlp_forward(m, ex.x, z, h, logits);
            double x_v = is_bias ? 1.0 : 0.0;
            if (!is_bias) {
                for (size_t k = 0; k < ex.x.nnz(); ++k) {
                    if (ex.x.indices[k] == feature) {
                        x_v = ex.x.values[k];
                        break;
                    }
                }
            }
            if (std::abs(z[unit]) < 10.0 * epsilon * std::max(1.0, std::abs(x_v))) {
                return true;
            }
        }
        return false;
    }
    return false;
}

} // namespace

double gradient_check(const Model& model, std::span<const TrainExample> data, double epsilon) {
    const std::vector<double> analytic = analytic_gradient(model, data);
    Model probe = model;
    std::vector<double*> slots = parameter_slots(probe);
    if (slots.size() != analytic.size()) {
        throw Error("gradient_check: parameter layout mismatch");
    }

    double max_rel = 0.0;
    for (size_t i = 0; i < slots.size(); ++i) {
        if (near_kink(model, data, i, epsilon)) {
            continue;
        }
        const double saved = *slots[i];
        *slots[i] = saved + epsilon;
        const double up = objective(probe, data);
        *slots[i] = saved - epsilon;
        const double down = objective(probe, data);
        *slots[i] = saved;
        const double fd = (up - down) / (2.0 * epsilon);
        // The 1e-3 floor keeps finite-difference roundoff (~1e-8 absolute)
        // from dominating coordinates with near-zero true gradient.
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-3});
        max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
    }
    return max_rel;
}

} // namespace ticketd
