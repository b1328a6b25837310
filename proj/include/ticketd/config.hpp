#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ticketd/classifier.hpp"
#include "ticketd/vectorizer.hpp"

namespace ticketd {

/// Top-level pipeline configuration. Every field has a default; a config
/// document only overrides what it mentions.
struct PipelineConfig {
    uint64_t seed = 0;

    struct Preprocessing {
        double min_retained = 0.98;
        double max_group_fraction = 0.20;
        std::optional<std::filesystem::path> merge_config;
    } preprocessing;

    FitOptions vectorizer;

    /// Per-kind hyperparameter overrides; kinds not listed use defaults.
    std::map<std::string, Hyperparams> classifiers;

    struct Ensemble {
        ModelKind member_a = ModelKind::svm;
        ModelKind member_b = ModelKind::mlp;
        /// Fixed thresholds; when absent they are selected on a validation
        /// split against target_accuracy.
        std::optional<std::pair<double, double>> thresholds;
        double target_accuracy = 0.85;
        double validation_fraction = 0.1;
    } ensemble;

    Hyperparams hyperparams_for(ModelKind kind) const {
        auto it = classifiers.find(to_string(kind));
        return it == classifiers.end() ? default_hyperparams(kind) : it->second;
    }
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);

} // namespace ticketd
