#include "lob/nn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "lob/hash.hpp"
#include "lob/rng.hpp"

namespace lob::nn {

using labeling::Label;

std::array<double, 3> softmax3(std::span<const double> logits) {
    const double zmax = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> p;
    double sum = 0.0;
    for (size_t i = 0; i < 3; ++i) {
        p[i] = std::exp(logits[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Model::Model(ArchitectureSpec spec, uint64_t seed)
    : spec_(std::move(spec)), seed_(seed), built_(build_layers(spec_)) {
    params_.assign(built_.param_count, 0.0);
}

Model Model::build(const ArchitectureSpec& spec, uint64_t seed) {
    Model m(spec, seed);
    Rng rng(seed);
    for (size_t i = 0; i < m.built_.layers.size(); ++i) {
        const auto [off, len] = m.built_.spans[i];
        m.built_.layers[i]->init_params({m.params_.data() + off, len}, rng);
    }
    return m;
}

Tensor Model::input4d(const Tensor& batch) const {
    if (batch.ndim() != 3 || batch.dim(1) != static_cast<size_t>(spec_.time) ||
        batch.dim(2) != static_cast<size_t>(spec_.width))
        throw ShapeMismatch("model input: expected [B," + std::to_string(spec_.time) + "," +
                            std::to_string(spec_.width) + "], got " + batch.shape_str());
    Tensor x({batch.dim(0), 1, batch.dim(1), batch.dim(2)});
    x.data = batch.data;
    return x;
}

Tensor Model::forward_logits(const Tensor& batch, const Ctx& ctx,
                             std::vector<Workspace>* ws) const {
    Tensor cur = input4d(batch);
    check_finite(cur.data, "model input");
    Workspace scratch;
    for (size_t i = 0; i < built_.layers.size(); ++i) {
        const auto& layer = built_.layers[i];
        const auto [off, len] = built_.spans[i];
        Workspace& w = ws ? (*ws)[i] : scratch;
        cur = layer->forward(cur, {params_.data() + off, len}, w, ctx);
        check_finite(cur.data, layer->label());
    }
    return cur;
}

Tensor Model::forward(const Tensor& batch, const Ctx& ctx) const {
    const Tensor logits = forward_logits(batch, ctx, nullptr);
    Tensor probs(logits.shape);
    const size_t B = logits.dim(0);
    for (size_t b = 0; b < B; ++b) {
        const auto p = softmax3({logits.data.data() + b * 3, 3});
        std::copy(p.begin(), p.end(), probs.data.begin() + b * 3);
    }
    return probs;
}

double Model::loss_and_gradients(const Tensor& batch, std::span<const Label> labels,
                                 const Ctx& ctx, std::span<double> pgrad) const {
    const size_t B = batch.dim(0);
    if (labels.size() != B)
        throw LengthMismatch("batch of " + std::to_string(B) + " with " +
                             std::to_string(labels.size()) + " labels");
    if (pgrad.size() != params_.size()) throw ShapeMismatch("gradient buffer size mismatch");

    Ctx gctx = ctx;
    gctx.need_grad = true;
    std::vector<Workspace> ws(built_.layers.size());
    const Tensor logits = forward_logits(batch, gctx, &ws);

    // fused softmax cross-entropy: loss sum and dlogits
    double loss_sum = 0.0;
    Tensor dlogits(logits.shape);
    for (size_t b = 0; b < B; ++b) {
        const double* z = logits.data.data() + b * 3;
        const auto p = softmax3({z, 3});
        const size_t truth = static_cast<size_t>(labels[b]);
        const double zmax = std::max({z[0], z[1], z[2]});
        const double lse =
            zmax + std::log(std::exp(z[0] - zmax) + std::exp(z[1] - zmax) +
                            std::exp(z[2] - zmax));
        loss_sum += lse - z[truth];
        for (size_t j = 0; j < 3; ++j)
            dlogits.data[b * 3 + j] = p[j] - (j == truth ? 1.0 : 0.0);
    }

    Tensor g = dlogits;
    for (size_t i = built_.layers.size(); i-- > 0;) {
        const auto& layer = built_.layers[i];
        const auto [off, len] = built_.spans[i];
        g = layer->backward(g, {params_.data() + off, len}, ws[i],
                            pgrad.subspan(off, len));
    }
    check_finite_grad(pgrad, "parameter gradients");
    return loss_sum;
}

std::pair<Label, std::array<double, 3>> Model::predict(std::span<const double> window) const {
    const size_t want = static_cast<size_t>(spec_.time) * spec_.width;
    if (window.size() != want)
        throw ShapeMismatch("predict window of " + std::to_string(window.size()) +
                            " values, expected " + std::to_string(want));
    Tensor batch({1, static_cast<size_t>(spec_.time), static_cast<size_t>(spec_.width)});
    std::copy(window.begin(), window.end(), batch.data.begin());
    const Tensor probs = forward(batch, Ctx{});
    std::array<double, 3> p{probs.data[0], probs.data[1], probs.data[2]};
    size_t best = 0;
    for (size_t j = 1; j < 3; ++j)
        if (p[j] > p[best]) best = j; // first max wins: UP < DOWN < STABLE
    return {static_cast<Label>(best), p};
}

// ---------------------------------------------------------------------
// checkpoint io (layout in docs/formats.md)
// ---------------------------------------------------------------------

namespace {
constexpr char kModelMagic[8] = {'L', 'O', 'B', 'M', 'O', 'D', 'L', '1'};
}

void Model::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kModelMagic, sizeof kModelMagic);
    const uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&seed_), sizeof seed_);
    const std::string spec_json = spec_.to_json();
    const uint32_t jlen = static_cast<uint32_t>(spec_json.size());
    out.write(reinterpret_cast<const char*>(&jlen), sizeof jlen);
    out.write(spec_json.data(), jlen);
    const uint64_t count = params_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    const uint64_t checksum = param_hash();
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    if (!out) throw IoError("write failed for " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
        throw IoError(path.string() + ": not a model checkpoint");
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != 1)
        throw IoError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
    uint64_t seed = 0;
    in.read(reinterpret_cast<char*>(&seed), sizeof seed);
    uint32_t jlen = 0;
    in.read(reinterpret_cast<char*>(&jlen), sizeof jlen);
    std::string spec_json(jlen, '\0');
    in.read(spec_json.data(), jlen);
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in) throw IoError(path.string() + ": truncated checkpoint");

    Model m(ArchitectureSpec::from_json(spec_json), seed);
    if (m.params_.size() != count)
        throw IoError(path.string() + ": parameter count mismatch");
    in.read(reinterpret_cast<char*>(m.params_.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    uint64_t checksum = 0;
    in.read(reinterpret_cast<char*>(&checksum), sizeof checksum);
    if (!in) throw IoError(path.string() + ": truncated checkpoint");
    if (checksum != m.param_hash())
        throw IoError(path.string() + ": checksum mismatch");
    return m;
}

uint64_t Model::param_hash() const {
    return fnv1a64({reinterpret_cast<const uint8_t*>(params_.data()),
                    params_.size() * sizeof(double)});
}

} // namespace lob::nn
