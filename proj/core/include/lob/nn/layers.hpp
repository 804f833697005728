#pragma once

#include <memory>
#include <span>

#include "lob/nn/arch.hpp"
#include "lob/nn/tensor.hpp"
#include "lob/rng.hpp"

namespace lob::nn {

/// Per-forward-call context. sample_seeds drive dropout masks, one seed
/// per batch row, derived by the trainer so that results do not depend
/// on how a batch is chunked across workers.
struct Ctx {
    bool training = false;
    bool need_grad = false;
    std::span<const uint64_t> sample_seeds;
};

/// Scratch a layer stashes during forward for use in backward.
struct Workspace {
    std::vector<Tensor> stash;
    std::vector<std::vector<int32_t>> idx;
    std::vector<std::vector<Workspace>> branches; // inception sub-layers
};

/// A differentiable stage with parameters living in an externally owned
/// flat block. forward/backward are const so chunks of a batch can run
/// concurrently with separate workspaces and gradient buffers.
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string label() const = 0;
    virtual size_t param_count() const { return 0; }
    virtual void init_params(std::span<double> params, Rng& rng) const { (void)params, (void)rng; }
    virtual Tensor forward(const Tensor& x, std::span<const double> params, Workspace& ws,
                           const Ctx& ctx) const = 0;
    /// Gradient w.r.t. the layer input; accumulates parameter gradients
    /// into pgrad (same layout as params).
    virtual Tensor backward(const Tensor& gout, std::span<const double> params,
                            const Workspace& ws, std::span<double> pgrad) const = 0;
};

/// Builds the concrete layer pipeline for a spec, assigning each layer
/// its input shape. Returns the layers and the per-stage shape trace.
struct BuiltLayers {
    std::vector<std::unique_ptr<Layer>> layers;
    std::vector<StageShape> shapes;
    size_t param_count = 0;
    std::vector<std::pair<size_t, size_t>> spans; // (offset, len) per layer
};
BuiltLayers build_layers(const ArchitectureSpec& spec);

} // namespace lob::nn
