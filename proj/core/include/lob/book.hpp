#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lob/itch.hpp"

namespace lob::book {

constexpr int kDepth = 10;

// regular trading hours, nanoseconds since midnight
constexpr uint64_t kOpenNs = 34'200ULL * 1'000'000'000ULL;  // 09:30
constexpr uint64_t kCloseNs = 57'600ULL * 1'000'000'000ULL; // 16:00

inline bool in_trading_hours(uint64_t ts_ns) {
    return ts_ns >= kOpenNs && ts_ns < kCloseNs;
}

struct Level {
    uint32_t price = 0;  // 1/10000 USD
    uint32_t volume = 0; // shares
    bool operator==(const Level&) const = default;
};

/// Top-K ladder snapshot. Levels beyond valid_asks/valid_bids hold the
/// (0, 0) sentinel. Asks ascend in price, bids descend.
struct BookSnapshot {
    uint64_t timestamp_ns = 0;
    std::array<Level, kDepth> asks{};
    std::array<Level, kDepth> bids{};
    int valid_asks = 0;
    int valid_bids = 0;

    bool operator==(const BookSnapshot&) const = default;
    bool two_sided() const { return valid_asks > 0 && valid_bids > 0; }
};

/// Full displayed book maintained from ITCH events: order map plus
/// price-aggregated ladders per side.
class OrderBook {
public:
    struct Order {
        itch::Side side;
        uint32_t price;
        uint32_t remaining;
    };

    struct Change {
        bool book_changed = false; // any resting order changed
        bool top_changed = false;  // top-K region of either side changed
    };

    /// Applies one message. Throws UnknownOrderRef, OverExecution,
    /// DuplicateOrderRef, CrossedBook. Trade ('P') and SystemEvent leave
    /// the book alone.
    Change apply(const itch::ItchMessage& msg);

    /// Best K levels per side, sentinel-padded.
    BookSnapshot top_snapshot(uint64_t ts_ns, int levels = kDepth) const;

    const std::unordered_map<uint64_t, Order>& orders() const { return orders_; }
    const std::map<uint32_t, uint64_t, std::greater<uint32_t>>& bid_ladder() const {
        return bids_;
    }
    const std::map<uint32_t, uint64_t>& ask_ladder() const { return asks_; }

    uint64_t total_shares() const; // across both ladders

private:
    void insert_order(uint64_t ref, itch::Side side, uint32_t price, uint32_t shares);
    void reduce_order(uint64_t ref, uint32_t shares, const char* what);
    void remove_order(uint64_t ref);
    void check_uncrossed() const;

    std::unordered_map<uint64_t, Order> orders_;
    std::map<uint32_t, uint64_t, std::greater<uint32_t>> bids_;
    std::map<uint32_t, uint64_t> asks_;
};

struct ReconstructStats {
    uint64_t applied = 0;          // messages applied to the book
    uint64_t other_symbol = 0;     // messages for other locates
    uint64_t snapshots = 0;        // emitted (in-hours top changes)
    uint64_t out_of_hours = 0;     // book-changing events outside RTH
};

/// Incremental reconstruction: feed messages in timestamp order, collect
/// a snapshot after every event that changes the top-K region of the
/// tracked symbol's book inside regular trading hours.
class Reconstructor {
public:
    explicit Reconstructor(std::string symbol) : symbol_(std::move(symbol)) {}

    /// Returns true if `out` was filled with a new snapshot.
    bool feed(const itch::ItchMessage& msg, BookSnapshot& out);

    const OrderBook& order_book() const { return book_; }
    const ReconstructStats& stats() const { return stats_; }

private:
    bool tracks(const itch::ItchMessage& msg);

    std::string symbol_;
    bool locate_known_ = false;
    uint16_t locate_ = 0;
    OrderBook book_;
    ReconstructStats stats_;
};

/// Whole-day convenience wrapper around Reconstructor. Errors from apply
/// are rethrown with the offending message index prepended.
std::vector<BookSnapshot> reconstruct(std::span<const itch::ItchMessage> messages,
                                      const std::string& symbol,
                                      ReconstructStats* stats = nullptr);

} // namespace lob::book
