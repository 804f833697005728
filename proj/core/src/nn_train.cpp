#include "lob/nn/train.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lob/parallel.hpp"
#include "lob/rng.hpp"

namespace lob {

size_t thread_budget() {
    if (const char* env = std::getenv("LOB_THREADS")) {
        const long n = std::atol(env);
        if (n > 0) return static_cast<size_t>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for_index(size_t n, const std::function<void(size_t)>& fn) {
    const size_t workers = std::min(thread_budget(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace lob

namespace lob::nn {

using labeling::Label;
using labeling::LabeledSample;
using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigInvalid("epochs must be >= 1");
    if (batch_size < 1) throw ConfigInvalid("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigInvalid("learning_rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigInvalid("moment decay rates must be in [0,1)");
    if (eps <= 0.0) throw ConfigInvalid("eps must be positive");
}

std::string TrainConfig::to_json() const {
    json j{{"epochs", epochs},       {"batch_size", batch_size},
           {"learning_rate", learning_rate}, {"beta1", beta1},
           {"beta2", beta2},         {"eps", eps},
           {"seed", seed}};
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace {

// Fixed chunk width: the unit of parallel work and of gradient
// reduction order, independent of the thread count.
constexpr size_t kChunk = 8;

struct ChunkBuffers {
    std::vector<double> grad;
    double loss = 0.0;
};

Tensor gather_batch(std::span<const LabeledSample> samples, std::span<const size_t> order,
                    size_t begin, size_t end, size_t time, size_t width) {
    Tensor x({end - begin, time, width});
    const size_t len = time * width;
    for (size_t i = begin; i < end; ++i) {
        const auto& w = samples[order[i]].window;
        if (w.size() != len)
            throw ShapeMismatch("sample window has " + std::to_string(w.size()) +
                                " values, model expects " + std::to_string(len));
        std::copy(w.begin(), w.end(), x.data.begin() + (i - begin) * len);
    }
    return x;
}

} // namespace

TrainResult train(Model& model, std::span<const LabeledSample> samples,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw EmptyInput("training on zero samples");

    const size_t time = static_cast<size_t>(model.spec().time);
    const size_t width = static_cast<size_t>(model.spec().width);
    const size_t n = samples.size();
    const size_t P = model.param_count();

    Rng shuffle_rng(mix64(cfg.seed ^ 0x73687566666c65ULL)); // shuffle stream
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> m1(P, 0.0), m2(P, 0.0), grad(P);
    uint64_t step = 0;
    TrainResult result;

    const size_t max_chunks = (static_cast<size_t>(cfg.batch_size) + kChunk - 1) / kChunk;
    std::vector<ChunkBuffers> chunks(max_chunks);
    for (auto& c : chunks) c.grad.assign(P, 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss_sum = 0.0;

        for (size_t start = 0; start < n; start += cfg.batch_size) {
            const size_t stop = std::min(n, start + static_cast<size_t>(cfg.batch_size));
            const size_t bsize = stop - start;
            const size_t n_chunks = (bsize + kChunk - 1) / kChunk;
            ++step;

            parallel_for_index(n_chunks, [&](size_t ci) {
                const size_t cb = start + ci * kChunk;
                const size_t ce = std::min(stop, cb + kChunk);
                Tensor x = gather_batch(samples, order, cb, ce, time, width);
                std::vector<Label> labels;
                std::vector<uint64_t> seeds;
                labels.reserve(ce - cb);
                seeds.reserve(ce - cb);
                for (size_t i = cb; i < ce; ++i) {
                    labels.push_back(samples[order[i]].label);
                    seeds.push_back(mix64(cfg.seed + step * 0x9E3779B97F4A7C15ULL + i));
                }
                Ctx ctx;
                ctx.training = true;
                ctx.sample_seeds = seeds;
                auto& buf = chunks[ci];
                std::fill(buf.grad.begin(), buf.grad.end(), 0.0);
                buf.loss = model.loss_and_gradients(x, labels, ctx, buf.grad);
            });

            // deterministic reduction in chunk order
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss_sum = 0.0;
            for (size_t ci = 0; ci < n_chunks; ++ci) {
                const auto& buf = chunks[ci];
                for (size_t p = 0; p < P; ++p) grad[p] += buf.grad[p];
                batch_loss_sum += buf.loss;
            }
            epoch_loss_sum += batch_loss_sum;

            // adaptive-moment update with bias correction
            const double inv_b = 1.0 / static_cast<double>(bsize);
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto params = model.params();
            for (size_t p = 0; p < P; ++p) {
                const double g = grad[p] * inv_b;
                m1[p] = cfg.beta1 * m1[p] + (1.0 - cfg.beta1) * g;
                m2[p] = cfg.beta2 * m2[p] + (1.0 - cfg.beta2) * g * g;
                params[p] -= cfg.learning_rate * (m1[p] / bc1) /
                             (std::sqrt(m2[p] / bc2) + cfg.eps);
            }
        }
        result.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(n));
    }
    return result;
}

std::vector<Label> predict_batch(const Model& model, std::span<const LabeledSample> samples) {
    const size_t n = samples.size();
    std::vector<Label> out(n);
    const size_t n_chunks = (n + kChunk - 1) / kChunk;
    const size_t time = static_cast<size_t>(model.spec().time);
    const size_t width = static_cast<size_t>(model.spec().width);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    parallel_for_index(n_chunks, [&](size_t ci) {
        const size_t cb = ci * kChunk;
        const size_t ce = std::min(n, cb + kChunk);
        Tensor x = gather_batch(samples, order, cb, ce, time, width);
        const Tensor probs = model.forward(x, Ctx{});
        for (size_t i = cb; i < ce; ++i) {
            const double* p = probs.data.data() + (i - cb) * 3;
            size_t best = 0;
            for (size_t j = 1; j < 3; ++j)
                if (p[j] > p[best]) best = j;
            out[i] = static_cast<Label>(best);
        }
    });
    return out;
}

} // namespace lob::nn
