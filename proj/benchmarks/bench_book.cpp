#include <benchmark/benchmark.h>

#include "lob/book.hpp"
#include "lob/rng.hpp"

using namespace lob;

namespace {

// Self-contained replay generator: adds in two non-crossing bands with
// executions against live references.
std::vector<itch::ItchMessage> replay(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<itch::ItchMessage> msgs;
    std::vector<std::pair<uint64_t, uint32_t>> live; // ref, remaining
    uint64_t ref = 1;
    for (size_t i = 0; i < n; ++i) {
        itch::ItchMessage m;
        m.stock_locate = 1;
        m.timestamp_ns = book::kOpenNs + i;
        if (live.empty() || rng.bernoulli(0.55)) {
            m.kind = itch::MessageKind::AddOrder;
            m.order_ref = ref++;
            const bool bid = rng.bernoulli(0.5);
            m.side = bid ? itch::Side::Bid : itch::Side::Ask;
            m.shares = static_cast<uint32_t>(100 + rng.below(400));
            m.price = bid ? 1'490'000 - static_cast<uint32_t>(rng.below(40)) * 100
                          : 1'510'000 + static_cast<uint32_t>(rng.below(40)) * 100;
            m.set_symbol("BENCH");
            live.emplace_back(m.order_ref, m.shares);
        } else {
            const size_t pick = rng.below(live.size());
            auto& [r, remaining] = live[pick];
            const uint32_t qty = static_cast<uint32_t>(1 + rng.below(remaining));
            m.kind = itch::MessageKind::OrderExecuted;
            m.order_ref = r;
            m.executed_shares = qty;
            remaining -= qty;
            if (remaining == 0) {
                live[pick] = live.back();
                live.pop_back();
            }
        }
        msgs.push_back(m);
    }
    return msgs;
}

} // namespace

static void BM_BookApply(benchmark::State& state) {
    const auto msgs = replay(static_cast<size_t>(state.range(0)), 3);
    for (auto _ : state) {
        book::OrderBook book;
        for (const auto& m : msgs) benchmark::DoNotOptimize(book.apply(m));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BookApply)->Arg(10000);

static void BM_Reconstruct(benchmark::State& state) {
    const auto msgs = replay(static_cast<size_t>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(book::reconstruct(msgs, "BENCH"));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Reconstruct)->Arg(10000);

static void BM_TopSnapshot(benchmark::State& state) {
    const auto msgs = replay(5000, 3);
    book::OrderBook book;
    for (const auto& m : msgs) book.apply(m);
    for (auto _ : state) benchmark::DoNotOptimize(book.top_snapshot(1));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TopSnapshot);

BENCHMARK_MAIN();
