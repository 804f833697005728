#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lob/nn/model.hpp"
#include "lob/nn/train.hpp"
#include "lob/rng.hpp"

using namespace lob;
using namespace lob::nn;
using labeling::Label;

namespace {

ArchitectureSpec tiny_arch(double dropout_rate = 0.25) {
    ArchitectureSpec s;
    s.time = 12;
    s.width = 4;
    s.layers = {
        Conv2DSpec{2, 1, 2, false, 1, 2}, // strided width reduction
        Conv2DSpec{2, 3, 1, true, 1, 1},  // zero-padded time conv
        MaxPoolSpec{3, 1, true, 1, 1},
        InceptionSpec{2},
        DropoutSpec{dropout_rate},
        LstmSpec{3},
        DenseSpec{3},
    };
    return s;
}

Tensor random_batch(size_t b, const ArchitectureSpec& s, Rng& rng) {
    Tensor x({b, static_cast<size_t>(s.time), static_cast<size_t>(s.width)});
    for (auto& v : x.data) v = rng.uniform(-1.5, 1.5);
    return x;
}

std::vector<uint64_t> fixed_seeds(size_t b, uint64_t base) {
    std::vector<uint64_t> seeds(b);
    for (size_t i = 0; i < b; ++i) seeds[i] = mix64(base + i);
    return seeds;
}

/// Central finite differences on every parameter against the analytic
/// gradient; tolerance 1e-4 relative (absolute below 1). A perturbation
/// that straddles a LeakyReLU kink or pool tie biases the quotient, so
/// a mismatch is retried at a smaller step before it counts.
void check_gradients(Model& model, const Tensor& x, std::span<const Label> labels,
                     const Ctx& ctx) {
    std::vector<double> analytic(model.param_count(), 0.0);
    model.loss_and_gradients(x, labels, ctx, analytic);

    auto params = model.params();
    std::vector<double> scratch(model.param_count());
    const auto numeric_at = [&](size_t i, double h) {
        const double keep = params[i];
        params[i] = keep + h;
        std::fill(scratch.begin(), scratch.end(), 0.0);
        const double up = model.loss_and_gradients(x, labels, ctx, scratch);
        params[i] = keep - h;
        std::fill(scratch.begin(), scratch.end(), 0.0);
        const double dn = model.loss_and_gradients(x, labels, ctx, scratch);
        params[i] = keep;
        return (up - dn) / (2.0 * h);
    };
    for (size_t i = 0; i < params.size(); ++i) {
        double numeric = numeric_at(i, 1e-5);
        double tol = 1e-4 * std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
        if (std::fabs(analytic[i] - numeric) > tol) {
            numeric = numeric_at(i, 1e-7);
            tol = 1e-4 * std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
        }
        if (std::fabs(analytic[i] - numeric) > tol) {
            CAPTURE(i);
            CAPTURE(analytic[i]);
            CAPTURE(numeric);
            REQUIRE(std::fabs(analytic[i] - numeric) <= tol);
        }
    }
}

} // namespace

TEST_CASE("full-depth preset shape trace") {
    const auto shapes = infer_shapes(deeplob_full());
    REQUIRE(shapes.size() == 14); // input + 9 convs + inception + dropout + lstm + dense
    CHECK(shapes[0] == StageShape{"input", 1, 100, 40});
    CHECK(shapes[1] == StageShape{"conv2d", 32, 100, 20});
    CHECK(shapes[3] == StageShape{"conv2d", 32, 100, 20});
    CHECK(shapes[4] == StageShape{"conv2d", 32, 100, 10});
    CHECK(shapes[7] == StageShape{"conv2d", 32, 100, 1}); // the 1x10 valid conv
    CHECK(shapes[9] == StageShape{"conv2d", 32, 100, 1});
    CHECK(shapes[10] == StageShape{"inception", 192, 100, 1});
    CHECK(shapes[11] == StageShape{"dropout", 192, 100, 1});
    CHECK(shapes[12] == StageShape{"lstm", 64, 0, 0});
    CHECK(shapes[13] == StageShape{"dense", 3, 0, 0});
}

TEST_CASE("level-1 preset reduces width 4 -> 2 -> 1 before the inception module") {
    const auto shapes = infer_shapes(level1());
    CHECK(shapes[0] == StageShape{"input", 1, 100, 4});
    CHECK(shapes[1] == StageShape{"conv2d", 32, 100, 2});
    CHECK(shapes[4] == StageShape{"conv2d", 32, 100, 1});
    CHECK(shapes[7] == StageShape{"inception", 192, 100, 1});
}

TEST_CASE("slim preset accepts narrow inputs; an oversized filter is rejected") {
    const auto shapes = infer_shapes(slim(2));
    CHECK(shapes[0] == StageShape{"input", 1, 100, 2});
    CHECK(shapes[1] == StageShape{"conv2d", 32, 100, 1});
    CHECK(shapes[4] == StageShape{"inception", 192, 100, 1});

    const auto shapes3 = infer_shapes(slim(3));
    CHECK(shapes3[1] == StageShape{"conv2d", 32, 100, 2});

    CHECK_THROWS_AS(infer_shapes(slim(1)), ShapeMismatch);
}

TEST_CASE("architecture json round trip") {
    for (const auto& spec : {deeplob_full(), level1(), slim(3), tiny_arch()}) {
        const auto back = ArchitectureSpec::from_json(spec.to_json());
        CHECK(back == spec);
    }
}

TEST_CASE("architecture validation") {
    ArchitectureSpec s = tiny_arch();
    s.layers.pop_back();
    CHECK_THROWS_AS(s.validate(), ShapeMismatch); // no dense head
    s.layers.push_back(DenseSpec{2});
    CHECK_THROWS_AS(s.validate(), ShapeMismatch); // wrong unit count
}

TEST_CASE("softmax rows sum to one for logits up to |30|") {
    Rng rng(41);
    for (int i = 0; i < 2000; ++i) {
        const std::array<double, 3> z{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0),
                                      rng.uniform(-30.0, 30.0)};
        const auto p = softmax3(z);
        CHECK(std::fabs(p[0] + p[1] + p[2] - 1.0) < 1e-6);
        CHECK(p[0] >= 0.0);
    }
}

TEST_CASE("model forward emits probability rows") {
    auto model = Model::build(tiny_arch(), 7);
    Rng rng(2);
    const auto x = random_batch(5, model.spec(), rng);
    const auto probs = model.forward(x);
    REQUIRE(probs.shape == std::vector<size_t>{5, 3});
    for (size_t b = 0; b < 5; ++b) {
        double sum = 0.0;
        for (size_t j = 0; j < 3; ++j) {
            CHECK(probs.data[b * 3 + j] >= 0.0);
            sum += probs.data[b * 3 + j];
        }
        CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("zeroed parameters give the uniform distribution and the UP tie-break") {
    auto model = Model::build(tiny_arch(0.0), 7);
    std::fill(model.params().begin(), model.params().end(), 0.0);
    Rng rng(3);
    const auto x = random_batch(1, model.spec(), rng);
    const auto probs = model.forward(x);
    for (size_t j = 0; j < 3; ++j) CHECK(probs.data[j] == doctest::Approx(1.0 / 3.0));

    std::vector<double> window(x.data.begin(), x.data.end());
    const auto [label, p] = model.predict(window);
    CHECK(label == Label::Up); // exact three-way tie resolves to UP
}

TEST_CASE("predict follows the argmax with the fixed class order") {
    auto model = Model::build(tiny_arch(0.0), 7);
    // zero everything, then set the dense bias to log-odds (0.2, 0.5, 0.3)
    auto params = model.params();
    std::fill(params.begin(), params.end(), 0.0);
    const size_t P = model.param_count();
    params[P - 3] = std::log(0.2);
    params[P - 2] = std::log(0.5);
    params[P - 1] = std::log(0.3);

    Rng rng(4);
    const auto x = random_batch(1, model.spec(), rng);
    const auto [label, p] = model.predict({x.data.data(), x.data.size()});
    CHECK(p[0] == doctest::Approx(0.2));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == doctest::Approx(0.3));
    CHECK(label == Label::Down);
}

TEST_CASE("cross-entropy endpoints: uniform gives ln 3, a confident truth gives ~0") {
    auto model = Model::build(tiny_arch(0.0), 7);
    auto params = model.params();
    std::fill(params.begin(), params.end(), 0.0);

    Rng rng(5);
    const auto x = random_batch(4, model.spec(), rng);
    const std::vector<Label> labels{Label::Up, Label::Down, Label::Stable, Label::Up};
    std::vector<double> grad(model.param_count(), 0.0);
    const double uniform_loss = model.loss_and_gradients(x, labels, Ctx{}, grad) / 4.0;
    CHECK(uniform_loss == doctest::Approx(std::log(3.0)));

    // confident correct prediction on a single class
    const size_t P = model.param_count();
    params[P - 3] = 50.0; // UP logit
    const std::vector<Label> ups{Label::Up, Label::Up, Label::Up, Label::Up};
    std::fill(grad.begin(), grad.end(), 0.0);
    const double confident = model.loss_and_gradients(x, ups, Ctx{}, grad) / 4.0;
    CHECK(confident == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gradients match central finite differences on the all-layer model") {
    for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto model = Model::build(tiny_arch(), seed);
        Rng rng(seed * 31 + 1);
        const auto x = random_batch(2, model.spec(), rng);
        const std::vector<Label> labels{Label::Down, Label::Stable};

        SUBCASE(("eval path, seed " + std::to_string(seed)).c_str()) {
            check_gradients(model, x, labels, Ctx{});
        }
        SUBCASE(("training path with active dropout, seed " + std::to_string(seed)).c_str()) {
            Ctx ctx;
            ctx.training = true;
            const auto seeds = fixed_seeds(2, seed);
            ctx.sample_seeds = seeds;
            check_gradients(model, x, labels, ctx);
        }
    }
}

TEST_CASE("build determinism: identical seeds give bit-identical parameters") {
    const auto a = Model::build(level1(), 99);
    const auto b = Model::build(level1(), 99);
    const auto c = Model::build(level1(), 100);
    REQUIRE(a.param_count() == b.param_count());
    CHECK(std::memcmp(a.params().data(), b.params().data(),
                      a.param_count() * sizeof(double)) == 0);
    CHECK(a.param_hash() == b.param_hash());
    CHECK(a.param_hash() != c.param_hash());
}

TEST_CASE("eval forward is bit-identical across runs and dropout rates") {
    auto a = Model::build(tiny_arch(0.0), 21);
    auto b = Model::build(tiny_arch(0.2), 21);
    Rng rng(8);
    const auto x = random_batch(3, a.spec(), rng);
    const auto pa = a.forward(x);
    const auto pa2 = a.forward(x);
    const auto pb = b.forward(x);
    CHECK(std::memcmp(pa.data.data(), pa2.data.data(), pa.numel() * sizeof(double)) == 0);
    CHECK(std::memcmp(pa.data.data(), pb.data.data(), pa.numel() * sizeof(double)) == 0);
}

namespace {

std::vector<labeling::LabeledSample> separable_set(const ArchitectureSpec& arch, size_t n,
                                                   uint64_t seed) {
    Rng rng(seed);
    std::vector<labeling::LabeledSample> out;
    const size_t len = static_cast<size_t>(arch.time) * arch.width;
    for (size_t i = 0; i < n; ++i) {
        labeling::LabeledSample s;
        const int cls = static_cast<int>(i % 3);
        s.label = static_cast<Label>(cls);
        const double signal = cls == 0 ? 2.0 : cls == 1 ? -2.0 : 0.0;
        s.window.resize(len);
        for (int t = 0; t < arch.time; ++t)
            for (int w = 0; w < arch.width; ++w)
                s.window[static_cast<size_t>(t) * arch.width + w] =
                    w == 0 ? signal + rng.uniform(-0.2, 0.2) : rng.uniform(-0.5, 0.5);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

TEST_CASE("training separates a toy set keyed on one input column") {
    const auto arch = tiny_arch(0.1);
    auto model = Model::build(arch, 1234);
    const auto samples = separable_set(arch, 300, 55);

    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 32;
    cfg.learning_rate = 5e-3;
    cfg.seed = 77;
    const auto trace = nn::train(model, samples, cfg);
    REQUIRE(trace.epoch_loss.size() == 20);
    CHECK(trace.epoch_loss.front() > trace.epoch_loss.back());

    const auto preds = predict_batch(model, samples);
    size_t hits = 0;
    for (size_t i = 0; i < samples.size(); ++i)
        if (preds[i] == samples[i].label) ++hits;
    CHECK(static_cast<double>(hits) / samples.size() >= 0.95);
}

TEST_CASE("training is deterministic given the seed") {
    const auto arch = tiny_arch(0.2);
    const auto samples = separable_set(arch, 90, 3);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.seed = 5;

    auto m1 = Model::build(arch, 42);
    auto m2 = Model::build(arch, 42);
    const auto t1 = nn::train(m1, samples, cfg);
    const auto t2 = nn::train(m2, samples, cfg);
    CHECK(t1.epoch_loss == t2.epoch_loss);
    CHECK(m1.param_hash() == m2.param_hash());

    cfg.seed = 6;
    auto m3 = Model::build(arch, 42);
    const auto t3 = nn::train(m3, samples, cfg);
    CHECK(t3.epoch_loss != t1.epoch_loss);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);

    auto model = Model::build(tiny_arch(), 1);
    CHECK_THROWS_AS(nn::train(model, {}, TrainConfig{}), EmptyInput);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    auto model = Model::build(tiny_arch(0.2), 31);
    const auto samples = separable_set(model.spec(), 30, 4);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    nn::train(model, samples, cfg);

    const auto path = std::filesystem::temp_directory_path() / "lobx_model_test.lobm";
    model.save(path);
    const auto back = Model::load(path);
    CHECK(back.spec() == model.spec());
    CHECK(back.seed() == model.seed());
    CHECK(back.param_hash() == model.param_hash());
    CHECK(std::memcmp(back.params().data(), model.params().data(),
                      model.param_count() * sizeof(double)) == 0);

    // corruption in the parameter block is detected
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-16, std::ios::end);
        const char junk = 'x';
        f.write(&junk, 1);
    }
    CHECK_THROWS_AS(Model::load(path), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("non-finite inputs trip the activation check") {
    auto model = Model::build(tiny_arch(0.0), 3);
    Rng rng(1);
    auto x = random_batch(1, model.spec(), rng);
    x.data[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(model.forward(x), NonFiniteActivation);
}

TEST_CASE("input width mismatches are rejected") {
    auto model = Model::build(tiny_arch(0.0), 3);
    Tensor bad({1, 12, 5});
    CHECK_THROWS_AS(model.forward(bad), ShapeMismatch);
    CHECK_THROWS_AS(model.predict(std::vector<double>(7, 0.0)), ShapeMismatch);
}
