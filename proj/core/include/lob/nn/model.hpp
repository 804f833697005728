#pragma once

#include <array>
#include <filesystem>
#include <utility>

#include "lob/labeling.hpp"
#include "lob/nn/layers.hpp"

namespace lob::nn {

/// A built network: the architecture, its layer pipeline, and one flat
/// parameter block. Forward/backward are const; training mutates only
/// the parameter block, so distinct batch chunks can run concurrently
/// against the same model with private workspaces and gradient buffers.
class Model {
public:
    static Model build(const ArchitectureSpec& spec, uint64_t seed);

    const ArchitectureSpec& spec() const { return spec_; }
    uint64_t seed() const { return seed_; }
    size_t param_count() const { return params_.size(); }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    /// Class probabilities for a batch of windows [B, time, width].
    /// Rows are nonnegative and sum to 1.
    Tensor forward(const Tensor& batch, const Ctx& ctx = {}) const;

    /// Sum of per-sample cross-entropy losses over the batch, with
    /// d(sum)/dparam accumulated into pgrad (callers divide by the full
    /// batch size). Throws NonFiniteActivation / NonFiniteGradient.
    double loss_and_gradients(const Tensor& batch, std::span<const labeling::Label> labels,
                              const Ctx& ctx, std::span<double> pgrad) const;

    /// Eval-mode class for one window (time x width flattened
    /// row-major), argmax ties broken by class order UP < DOWN < STABLE.
    std::pair<labeling::Label, std::array<double, 3>> predict(
        std::span<const double> window) const;

    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);

    uint64_t param_hash() const;

private:
    Model(ArchitectureSpec spec, uint64_t seed);

    Tensor forward_logits(const Tensor& batch, const Ctx& ctx,
                          std::vector<Workspace>* ws) const;
    Tensor input4d(const Tensor& batch) const;

    ArchitectureSpec spec_;
    uint64_t seed_ = 0;
    BuiltLayers built_;
    std::vector<double> params_;
};

/// Stable softmax of a logit row.
std::array<double, 3> softmax3(std::span<const double> logits);

} // namespace lob::nn
