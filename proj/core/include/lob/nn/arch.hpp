#pragma once

#include <string>
#include <variant>
#include <vector>

#include "lob/errors.hpp"

namespace lob::nn {

// Declarative network description. Every Conv2D is implicitly followed
// by LeakyReLU(0.01); padding "zero" means output-preserving padding on
// both filter axes at stride 1 (extra padding goes after, as in the
// usual library convention).

struct Conv2DSpec {
    int filters = 32;
    int kh = 1, kw = 1;
    bool zero_pad = false;
    int sh = 1, sw = 1;
    bool operator==(const Conv2DSpec&) const = default;
};

struct InceptionSpec {
    // Three parallel branches on the channel axis: 1x1 then 3x1 convs,
    // 1x1 then 5x1 convs, and 3x1 max-pool then 1x1 conv, each with
    // `filters` output channels, time axis preserved.
    int filters = 64;
    bool operator==(const InceptionSpec&) const = default;
};

struct MaxPoolSpec {
    int kh = 3, kw = 1;
    bool zero_pad = true;
    int sh = 1, sw = 1;
    bool operator==(const MaxPoolSpec&) const = default;
};

struct DropoutSpec {
    double rate = 0.2;
    bool operator==(const DropoutSpec&) const = default;
};

struct LstmSpec {
    int units = 64;
    bool operator==(const LstmSpec&) const = default;
};

struct DenseSpec {
    int units = 3; // softmax head
    bool operator==(const DenseSpec&) const = default;
};

using LayerSpec =
    std::variant<Conv2DSpec, InceptionSpec, MaxPoolSpec, DropoutSpec, LstmSpec, DenseSpec>;

struct ArchitectureSpec {
    int time = 100;
    int width = 40;
    std::vector<LayerSpec> layers;

    /// Structural checks: nonempty, exactly one LSTM, final layer
    /// Dense(3). Shape feasibility is checked by infer_shapes.
    void validate() const;

    std::string to_json() const;
    static ArchitectureSpec from_json(const std::string& text);
    bool operator==(const ArchitectureSpec&) const = default;
};

/// Shape at each stage of the network, for trace tests and debugging.
struct StageShape {
    std::string layer;
    size_t channels = 0, time = 0, width = 0; // width/channels 0 once sequential
    bool operator==(const StageShape&) const = default;
};

/// Walks the spec and returns the (channels, time, width) trace; the
/// LSTM stage reports (units) in `channels` with time/width zero.
/// Throws ShapeMismatch naming the offending layer index.
std::vector<StageShape> infer_shapes(const ArchitectureSpec& spec);

// Named presets.
ArchitectureSpec deeplob_full();           // 100 x 40 full-depth input
ArchitectureSpec level1();                 // 100 x 4 level-1 input
ArchitectureSpec slim(int width);          // reduced conv stack, narrow inputs

/// Preset lookup by name ("deeplob_full", "level1", "slim"); slim takes
/// the input width from the argument.
ArchitectureSpec preset_by_name(const std::string& name, int width);

} // namespace lob::nn
