#include "lob/book.hpp"

#include <limits>

namespace lob::book {

using itch::ItchMessage;
using itch::MessageKind;
using itch::Side;

namespace {

uint32_t clamp_u32(uint64_t v) {
    return v > std::numeric_limits<uint32_t>::max()
               ? std::numeric_limits<uint32_t>::max()
               : static_cast<uint32_t>(v);
}

template <typename Ladder>
void top_levels(const Ladder& ladder, int k, std::array<Level, kDepth>& out, int& valid) {
    valid = 0;
    for (auto it = ladder.begin(); it != ladder.end() && valid < k; ++it, ++valid)
        out[valid] = Level{it->first, clamp_u32(it->second)};
    for (int i = valid; i < kDepth; ++i) out[i] = Level{};
}

} // namespace

void OrderBook::insert_order(uint64_t ref, Side side, uint32_t price, uint32_t shares) {
    auto [it, inserted] = orders_.emplace(ref, Order{side, price, shares});
    if (!inserted) throw DuplicateOrderRef("order_ref " + std::to_string(ref));
    if (side == Side::Bid)
        bids_[price] += shares;
    else
        asks_[price] += shares;
}

void OrderBook::reduce_order(uint64_t ref, uint32_t shares, const char* what) {
    auto it = orders_.find(ref);
    if (it == orders_.end()) throw UnknownOrderRef("order_ref " + std::to_string(ref));
    Order& o = it->second;
    if (shares > o.remaining)
        throw OverExecution(std::string(what) + " of " + std::to_string(shares) +
                            " exceeds remaining " + std::to_string(o.remaining) +
                            " on order_ref " + std::to_string(ref));
    const auto dec = [&](auto& ladder) {
        auto lv = ladder.find(o.price);
        lv->second -= shares;
        if (lv->second == 0) ladder.erase(lv);
    };
    if (o.side == Side::Bid)
        dec(bids_);
    else
        dec(asks_);
    o.remaining -= shares;
    if (o.remaining == 0) orders_.erase(it);
}

void OrderBook::remove_order(uint64_t ref) {
    auto it = orders_.find(ref);
    if (it == orders_.end()) throw UnknownOrderRef("order_ref " + std::to_string(ref));
    reduce_order(ref, it->second.remaining, "delete");
}

void OrderBook::check_uncrossed() const {
    if (bids_.empty() || asks_.empty()) return;
    if (bids_.begin()->first >= asks_.begin()->first)
        throw CrossedBook("best bid " + std::to_string(bids_.begin()->first) +
                          " >= best ask " + std::to_string(asks_.begin()->first));
}

OrderBook::Change OrderBook::apply(const ItchMessage& msg) {
    if (msg.kind == MessageKind::SystemEvent || msg.kind == MessageKind::Trade)
        return Change{};

    const BookSnapshot before = top_snapshot(0);

    switch (msg.kind) {
    case MessageKind::AddOrder:
    case MessageKind::AddOrderMpid:
        insert_order(msg.order_ref, msg.side, msg.price, msg.shares);
        check_uncrossed();
        break;
    case MessageKind::OrderExecuted:
    case MessageKind::OrderExecutedWithPrice:
        reduce_order(msg.order_ref, msg.executed_shares, "execution");
        break;
    case MessageKind::OrderCancel:
        reduce_order(msg.order_ref, msg.shares, "cancel");
        break;
    case MessageKind::OrderDelete:
        remove_order(msg.order_ref);
        break;
    case MessageKind::OrderReplace: {
        auto it = orders_.find(msg.order_ref);
        if (it == orders_.end())
            throw UnknownOrderRef("order_ref " + std::to_string(msg.order_ref));
        const Side side = it->second.side;
        remove_order(msg.order_ref);
        insert_order(msg.new_order_ref, side, msg.price, msg.shares);
        check_uncrossed();
        break;
    }
    default:
        break;
    }

    BookSnapshot after = top_snapshot(0);
    Change ch;
    ch.book_changed = true;
    ch.top_changed = !(before.asks == after.asks && before.bids == after.bids);
    return ch;
}

BookSnapshot OrderBook::top_snapshot(uint64_t ts_ns, int levels) const {
    if (levels < 0 || levels > kDepth)
        throw Error("snapshot depth must be in [0, " + std::to_string(kDepth) + "]");
    BookSnapshot snap;
    snap.timestamp_ns = ts_ns;
    top_levels(asks_, levels, snap.asks, snap.valid_asks);
    top_levels(bids_, levels, snap.bids, snap.valid_bids);
    return snap;
}

uint64_t OrderBook::total_shares() const {
    uint64_t sum = 0;
    for (const auto& [px, sh] : bids_) sum += sh;
    for (const auto& [px, sh] : asks_) sum += sh;
    return sum;
}

bool Reconstructor::tracks(const ItchMessage& msg) {
    switch (msg.kind) {
    case MessageKind::SystemEvent:
        return true; // global, never book-changing
    case MessageKind::AddOrder:
    case MessageKind::AddOrderMpid:
    case MessageKind::Trade:
        if (msg.symbol_str() == symbol_) {
            locate_known_ = true;
            locate_ = msg.stock_locate;
            return true;
        }
        return false;
    default:
        return locate_known_ && msg.stock_locate == locate_;
    }
}

bool Reconstructor::feed(const ItchMessage& msg, BookSnapshot& out) {
    if (!tracks(msg)) {
        ++stats_.other_symbol;
        return false;
    }
    const auto change = book_.apply(msg);
    ++stats_.applied;
    if (!change.top_changed) return false;
    if (!in_trading_hours(msg.timestamp_ns)) {
        ++stats_.out_of_hours;
        return false;
    }
    out = book_.top_snapshot(msg.timestamp_ns);
    ++stats_.snapshots;
    return true;
}

std::vector<BookSnapshot> reconstruct(std::span<const itch::ItchMessage> messages,
                                      const std::string& symbol, ReconstructStats* stats) {
    Reconstructor rec(symbol);
    std::vector<BookSnapshot> out;
    BookSnapshot snap;
    for (size_t i = 0; i < messages.size(); ++i) {
        try {
            if (rec.feed(messages[i], snap)) out.push_back(snap);
        } catch (const Error& e) {
            throw Error("message " + std::to_string(i) + ": " + e.what());
        }
    }
    if (stats) *stats = rec.stats();
    return out;
}

} // namespace lob::book
