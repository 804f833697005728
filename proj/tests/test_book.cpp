#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "lob/book.hpp"
#include "lob/snapshot_csv.hpp"
#include "test_util.hpp"

using namespace lob;
using namespace lob::book;
using namespace lobtest;

namespace {

/// From-scratch re-aggregation of the surviving order map: the oracle
/// the incremental ladders must match.
struct LadderOracle {
    std::map<uint32_t, uint64_t, std::greater<uint32_t>> bids;
    std::map<uint32_t, uint64_t> asks;

    explicit LadderOracle(const OrderBook& book) {
        for (const auto& [ref, o] : book.orders()) {
            if (o.side == itch::Side::Bid)
                bids[o.price] += o.remaining;
            else
                asks[o.price] += o.remaining;
        }
    }
};

uint64_t in_hours_ts(int i) { return kOpenNs + 1'000'000ULL * static_cast<uint64_t>(i + 1); }

} // namespace

TEST_CASE("add and decrement semantics") {
    OrderBook book;
    auto ch = book.apply(add_order(1, itch::Side::Bid, 100, 1'500'000));
    CHECK(ch.top_changed);
    REQUIRE(book.bid_ladder().size() == 1);
    CHECK(book.bid_ladder().begin()->first == 1'500'000);
    CHECK(book.bid_ladder().begin()->second == 100);

    book.apply(execute_order(1, 40));
    CHECK(book.bid_ladder().begin()->second == 60);

    book.apply(execute_order(1, 60));
    CHECK(book.bid_ladder().empty());
    CHECK(book.orders().empty());
}

TEST_CASE("apply error paths") {
    OrderBook book;
    CHECK_THROWS_AS(book.apply(delete_order(99)), UnknownOrderRef);

    book.apply(add_order(1, itch::Side::Bid, 100, 1'400'000));
    CHECK_THROWS_AS(book.apply(execute_order(1, 101)), OverExecution);
    CHECK_THROWS_AS(book.apply(add_order(1, itch::Side::Ask, 50, 1'600'000)),
                    DuplicateOrderRef);

    // a crossing add is rejected
    book.apply(add_order(2, itch::Side::Ask, 10, 1'500'000));
    CHECK_THROWS_AS(book.apply(add_order(3, itch::Side::Bid, 10, 1'500'000)), CrossedBook);
}

TEST_CASE("replace moves the order under the new reference, keeping the side") {
    OrderBook book;
    book.apply(add_order(5, itch::Side::Ask, 200, 1'600'000));
    book.apply(replace_order(5, 6, 150, 1'550'000));
    CHECK(book.orders().count(5) == 0);
    REQUIRE(book.orders().count(6) == 1);
    CHECK(book.orders().at(6).side == itch::Side::Ask);
    CHECK(book.ask_ladder().begin()->first == 1'550'000);
    CHECK(book.ask_ladder().begin()->second == 150);
}

TEST_CASE("trade and system events leave the book unchanged") {
    OrderBook book;
    book.apply(add_order(1, itch::Side::Bid, 100, 1'400'000));
    auto trade = base_message(itch::MessageKind::Trade);
    trade.order_ref = 0;
    trade.side = itch::Side::Bid;
    trade.shares = 50;
    trade.price = 1'450'000;
    trade.set_symbol("TEST");
    const auto ch = book.apply(trade);
    CHECK_FALSE(ch.book_changed);
    CHECK_FALSE(ch.top_changed);
    CHECK(book.total_shares() == 100);
}

TEST_CASE("snapshot pads with sentinels and orders levels") {
    OrderBook book;
    SUBCASE("empty book") {
        const auto s = book.top_snapshot(123);
        CHECK(s.valid_asks == 0);
        CHECK(s.valid_bids == 0);
        CHECK(s.asks[0] == Level{});
    }
    SUBCASE("three ask levels ascending, sentinel beyond") {
        book.apply(add_order(1, itch::Side::Ask, 10, 1'520'000));
        book.apply(add_order(2, itch::Side::Ask, 20, 1'500'000));
        book.apply(add_order(3, itch::Side::Ask, 30, 1'510'000));
        const auto s = book.top_snapshot(5);
        CHECK(s.valid_asks == 3);
        CHECK(s.asks[0] == Level{1'500'000, 20});
        CHECK(s.asks[1] == Level{1'510'000, 30});
        CHECK(s.asks[2] == Level{1'520'000, 10});
        for (int i = 3; i < kDepth; ++i) CHECK(s.asks[i] == Level{});
        CHECK(s.timestamp_ns == 5);
    }
    SUBCASE("a shallower requested depth truncates the ladder") {
        book.apply(add_order(1, itch::Side::Ask, 10, 1'520'000));
        book.apply(add_order(2, itch::Side::Ask, 20, 1'500'000));
        book.apply(add_order(3, itch::Side::Ask, 30, 1'510'000));
        const auto s = book.top_snapshot(5, 2);
        CHECK(s.valid_asks == 2);
        CHECK(s.asks[1] == Level{1'510'000, 30});
        CHECK(s.asks[2] == Level{});
        CHECK_THROWS_AS(book.top_snapshot(5, kDepth + 1), Error);
    }
}

TEST_CASE("incremental ladders equal the from-scratch oracle over 10k events") {
    BookFuzzer fuzz(99);
    OrderBook book;
    uint64_t total_before = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto msg = fuzz.next(in_hours_ts(i));
        // conservation bookkeeping
        int64_t delta = 0;
        switch (msg.kind) {
        case itch::MessageKind::AddOrder: delta = msg.shares; break;
        case itch::MessageKind::OrderExecuted: delta = -static_cast<int64_t>(msg.executed_shares); break;
        case itch::MessageKind::OrderCancel: delta = -static_cast<int64_t>(msg.shares); break;
        case itch::MessageKind::OrderDelete:
            delta = -static_cast<int64_t>(book.orders().at(msg.order_ref).remaining);
            break;
        case itch::MessageKind::OrderReplace:
            delta = static_cast<int64_t>(msg.shares) -
                    static_cast<int64_t>(book.orders().at(msg.order_ref).remaining);
            break;
        default: break;
        }
        book.apply(msg);

        const uint64_t total_after = book.total_shares();
        REQUIRE(static_cast<int64_t>(total_after) ==
                static_cast<int64_t>(total_before) + delta);
        total_before = total_after;

        const LadderOracle oracle(book);
        REQUIRE(oracle.bids.size() == book.bid_ladder().size());
        REQUIRE(oracle.asks.size() == book.ask_ladder().size());
        for (const auto& [px, sh] : oracle.bids) REQUIRE(book.bid_ladder().at(px) == sh);
        for (const auto& [px, sh] : oracle.asks) REQUIRE(book.ask_ladder().at(px) == sh);
    }

    // snapshot equals a brute-force top-K of the re-aggregated map
    const LadderOracle oracle(book);
    const auto snap = book.top_snapshot(0);
    int i = 0;
    for (auto it = oracle.asks.begin(); it != oracle.asks.end() && i < kDepth; ++it, ++i) {
        CHECK(snap.asks[i].price == it->first);
        CHECK(snap.asks[i].volume == it->second);
    }
    i = 0;
    for (auto it = oracle.bids.begin(); it != oracle.bids.end() && i < kDepth; ++it, ++i) {
        CHECK(snap.bids[i].price == it->first);
        CHECK(snap.bids[i].volume == it->second);
    }
}

TEST_CASE("reconstruct applies the trading-hours filter") {
    std::vector<itch::ItchMessage> msgs;
    // before the open: book changes, no snapshots
    msgs.push_back(add_order(1, itch::Side::Bid, 100, 1'400'000, kOpenNs - 1000));
    msgs.push_back(add_order(2, itch::Side::Ask, 100, 1'600'000, kOpenNs - 900));

    ReconstructStats stats;
    SUBCASE("all messages pre-open: empty sequence, book state kept") {
        Reconstructor rec("TEST");
        BookSnapshot snap;
        for (const auto& m : msgs) CHECK_FALSE(rec.feed(m, snap));
        CHECK(rec.order_book().total_shares() == 200);
        CHECK(rec.stats().snapshots == 0);
        CHECK(rec.stats().out_of_hours == 2);
    }

    SUBCASE("five top-changing in-hours events produce five snapshots") {
        for (int i = 0; i < 5; ++i)
            msgs.push_back(add_order(10 + i, itch::Side::Bid,
                                     100 + static_cast<uint32_t>(i),
                                     1'410'000 + 100 * static_cast<uint32_t>(i),
                                     in_hours_ts(i)));
        const auto snaps = reconstruct(msgs, "TEST", &stats);
        CHECK(snaps.size() == 5);
        CHECK(stats.snapshots == 5);
        CHECK(stats.out_of_hours == 2);
    }

    SUBCASE("messages after the close emit nothing") {
        msgs.push_back(add_order(50, itch::Side::Bid, 10, 1'450'000, kCloseNs));
        const auto snaps = reconstruct(msgs, "TEST", &stats);
        CHECK(snaps.empty());
    }
}

TEST_CASE("deep-level-only changes beyond the top 10 emit no snapshot") {
    std::vector<itch::ItchMessage> msgs;
    // 12 ask levels, built pre-open
    for (int i = 0; i < 12; ++i)
        msgs.push_back(add_order(1 + i, itch::Side::Ask, 100,
                                 1'500'000 + 100 * static_cast<uint32_t>(i),
                                 kOpenNs - 1000));
    // in hours: change level 12, then level 5
    msgs.push_back(execute_order(12, 50, in_hours_ts(0))); // price 1'501'100, level 12
    msgs.push_back(execute_order(5, 50, in_hours_ts(1)));  // price 1'500'400, level 5

    ReconstructStats stats;
    const auto snaps = reconstruct(msgs, "TEST", &stats);
    REQUIRE(snaps.size() == 1);
    CHECK(snaps[0].timestamp_ns == in_hours_ts(1));
    CHECK(snaps[0].asks[4].volume == 50);
}

TEST_CASE("reconstruct ignores other symbols and reports apply errors with index") {
    std::vector<itch::ItchMessage> msgs;
    msgs.push_back(add_order(1, itch::Side::Bid, 100, 1'400'000, in_hours_ts(0), "TEST"));
    msgs.push_back(add_order(2, itch::Side::Bid, 100, 9'999'999, in_hours_ts(1), "OTHER"));
    ReconstructStats stats;
    const auto snaps = reconstruct(msgs, "TEST", &stats);
    CHECK(snaps.size() == 1);
    CHECK(stats.other_symbol == 1);

    msgs.push_back(delete_order(77, in_hours_ts(2)));
    try {
        reconstruct(msgs, "TEST");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("message 2") != std::string::npos);
        CHECK(std::string(e.what()).find("UnknownOrderRef") != std::string::npos);
    }
}

TEST_CASE("snapshot csv round trip") {
    BookFuzzer fuzz(5);
    OrderBook book;
    std::vector<BookSnapshot> snaps;
    for (int i = 0; i < 300; ++i) {
        book.apply(fuzz.next(in_hours_ts(i)));
        snaps.push_back(book.top_snapshot(in_hours_ts(i)));
    }
    const auto path = std::filesystem::temp_directory_path() / "lobx_snaps_test.csv";
    write_snapshot_csv(path, snaps);
    const auto back = read_snapshot_csv(path);
    REQUIRE(back.size() == snaps.size());
    for (size_t i = 0; i < snaps.size(); ++i) REQUIRE(back[i] == snaps[i]);
    std::filesystem::remove(path);
}

TEST_CASE("snapshot csv rejects malformed input") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    const auto path = dir / "lobx_bad.csv";

    SUBCASE("wrong header") {
        std::ofstream(path) << "ts,nope\n1,2\n";
        CHECK_THROWS_AS(read_snapshot_csv(path), IoError);
    }
    SUBCASE("wrong column count") {
        std::ofstream(path) << kSnapshotCsvHeader << "\n1,2,3\n";
        CHECK_THROWS_AS(read_snapshot_csv(path), IoError);
    }
    SUBCASE("crossed top") {
        std::ofstream out(path);
        out << kSnapshotCsvHeader << "\n";
        out << "1,100,5,200,5";
        for (int i = 0; i < 9; ++i) out << ",0,0,0,0";
        out << "\n";
        out.close();
        CHECK_THROWS_AS(read_snapshot_csv(path), IoError);
    }
    fs::remove(path);
}
