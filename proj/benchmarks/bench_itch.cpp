#include <benchmark/benchmark.h>

#include <sstream>

#include "lob/itch.hpp"
#include "lob/rng.hpp"

using namespace lob;

namespace {

std::vector<itch::ItchMessage> sample_messages(size_t n) {
    Rng rng(7);
    std::vector<itch::ItchMessage> msgs;
    msgs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        itch::ItchMessage m;
        m.kind = itch::MessageKind::AddOrder;
        m.stock_locate = 1;
        m.timestamp_ns = 40'000'000'000'000ULL + i;
        m.order_ref = i + 1;
        m.side = rng.bernoulli(0.5) ? itch::Side::Bid : itch::Side::Ask;
        m.shares = static_cast<uint32_t>(1 + rng.below(1000));
        m.price = static_cast<uint32_t>(1'000'000 + rng.below(1'000'000));
        m.set_symbol("BENCH");
        msgs.push_back(m);
    }
    return msgs;
}

} // namespace

static void BM_EncodeAddOrder(benchmark::State& state) {
    const auto msgs = sample_messages(1024);
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(itch::encode_message(msgs[i++ & 1023]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeAddOrder);

static void BM_ParseAddOrder(benchmark::State& state) {
    const auto msgs = sample_messages(1024);
    std::vector<std::vector<uint8_t>> bodies;
    for (const auto& m : msgs) bodies.push_back(itch::encode_message(m));
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(itch::parse_message(bodies[i++ & 1023]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseAddOrder);

static void BM_StreamMessages(benchmark::State& state) {
    const auto msgs = sample_messages(static_cast<size_t>(state.range(0)));
    const auto bytes = itch::frame_messages(msgs);
    const std::string buf(bytes.begin(), bytes.end());
    for (auto _ : state) {
        std::istringstream in(buf);
        benchmark::DoNotOptimize(itch::stream_messages(in));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StreamMessages)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
