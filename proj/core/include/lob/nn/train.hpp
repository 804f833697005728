#pragma once

#include <span>

#include "lob/nn/model.hpp"

namespace lob::nn {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 1;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
    bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
    std::vector<double> epoch_loss; // mean per-sample cross-entropy
};

/// Mini-batch training with adaptive-moment updates. Deterministic for a
/// fixed (seed, data, config): shuffling, dropout masks, and gradient
/// reduction order do not depend on thread scheduling.
TrainResult train(Model& model, std::span<const labeling::LabeledSample> samples,
                  const TrainConfig& cfg);

/// Eval-mode predictions for every sample (chunk-parallel).
std::vector<labeling::Label> predict_batch(const Model& model,
                                           std::span<const labeling::LabeledSample> samples);

} // namespace lob::nn
