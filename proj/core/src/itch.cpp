#include "lob/itch.hpp"

#include <algorithm>
#include <cstring>

namespace lob::itch {

namespace {

inline uint16_t be16(const uint8_t* p) {
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

inline uint32_t be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

inline uint64_t be48(const uint8_t* p) {
    return (static_cast<uint64_t>(p[0]) << 40) | (static_cast<uint64_t>(p[1]) << 32) |
           (static_cast<uint64_t>(p[2]) << 24) | (static_cast<uint64_t>(p[3]) << 16) |
           (static_cast<uint64_t>(p[4]) << 8) | p[5];
}

inline uint64_t be64(const uint8_t* p) {
    return (static_cast<uint64_t>(be32(p)) << 32) | be32(p + 4);
}

inline void put16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put48(std::vector<uint8_t>& out, uint64_t v) {
    out.push_back(static_cast<uint8_t>(v >> 40));
    out.push_back(static_cast<uint8_t>(v >> 32));
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put64(std::vector<uint8_t>& out, uint64_t v) {
    put32(out, static_cast<uint32_t>(v >> 32));
    put32(out, static_cast<uint32_t>(v));
}

Side parse_side(uint8_t b) {
    if (b == 'B') return Side::Bid;
    if (b == 'S') return Side::Ask;
    throw InvalidSide("side byte " + std::string(1, static_cast<char>(b)));
}

char side_byte(Side s) { return s == Side::Bid ? 'B' : 'S'; }

} // namespace

std::string ItchMessage::symbol_str() const {
    std::string s(symbol.data(), symbol.size());
    const auto end = s.find_last_not_of(' ');
    return end == std::string::npos ? std::string() : s.substr(0, end + 1);
}

void ItchMessage::set_symbol(std::string_view s) {
    symbol.fill(' ');
    std::copy_n(s.data(), std::min(s.size(), symbol.size()), symbol.data());
}

void ItchMessage::validate() const {
    if (timestamp_ns >= kNsPerDay)
        throw InvalidMessage("timestamp past midnight: " + std::to_string(timestamp_ns));
    switch (kind) {
    case MessageKind::SystemEvent:
        break;
    case MessageKind::AddOrder:
    case MessageKind::AddOrderMpid:
        if (shares == 0) throw InvalidMessage("add order with zero shares");
        if (price == 0) throw InvalidMessage("add order with zero price");
        break;
    case MessageKind::OrderExecuted:
        if (executed_shares == 0) throw InvalidMessage("execution of zero shares");
        break;
    case MessageKind::OrderExecutedWithPrice:
        if (executed_shares == 0) throw InvalidMessage("execution of zero shares");
        if (price == 0) throw InvalidMessage("execution with zero price");
        break;
    case MessageKind::OrderCancel:
        if (shares == 0) throw InvalidMessage("cancel of zero shares");
        break;
    case MessageKind::OrderDelete:
        break;
    case MessageKind::OrderReplace:
        if (shares == 0) throw InvalidMessage("replace with zero shares");
        if (price == 0) throw InvalidMessage("replace with zero price");
        break;
    case MessageKind::Trade:
        if (shares == 0) throw InvalidMessage("trade of zero shares");
        if (price == 0) throw InvalidMessage("trade with zero price");
        break;
    }
}

char type_code(MessageKind kind) {
    switch (kind) {
    case MessageKind::SystemEvent: return 'S';
    case MessageKind::AddOrder: return 'A';
    case MessageKind::AddOrderMpid: return 'F';
    case MessageKind::OrderExecuted: return 'E';
    case MessageKind::OrderExecutedWithPrice: return 'C';
    case MessageKind::OrderCancel: return 'X';
    case MessageKind::OrderDelete: return 'D';
    case MessageKind::OrderReplace: return 'U';
    case MessageKind::Trade: return 'P';
    }
    throw Error("unreachable message kind");
}

std::optional<MessageKind> kind_of(char code) {
    switch (code) {
    case 'S': return MessageKind::SystemEvent;
    case 'A': return MessageKind::AddOrder;
    case 'F': return MessageKind::AddOrderMpid;
    case 'E': return MessageKind::OrderExecuted;
    case 'C': return MessageKind::OrderExecutedWithPrice;
    case 'X': return MessageKind::OrderCancel;
    case 'D': return MessageKind::OrderDelete;
    case 'U': return MessageKind::OrderReplace;
    case 'P': return MessageKind::Trade;
    default: return std::nullopt;
    }
}

size_t body_length(MessageKind kind) {
    switch (kind) {
    case MessageKind::SystemEvent: return 12;
    case MessageKind::AddOrder: return 36;
    case MessageKind::AddOrderMpid: return 40;
    case MessageKind::OrderExecuted: return 31;
    case MessageKind::OrderExecutedWithPrice: return 36;
    case MessageKind::OrderCancel: return 23;
    case MessageKind::OrderDelete: return 19;
    case MessageKind::OrderReplace: return 35;
    case MessageKind::Trade: return 44;
    }
    throw Error("unreachable message kind");
}

ItchMessage parse_message(std::span<const uint8_t> body) {
    if (body.empty()) throw TruncatedMessage("empty body");
    const char code = static_cast<char>(body[0]);
    const auto kind = kind_of(code);
    if (!kind) throw UnknownType("code '" + std::string(1, code) + "'");
    const size_t want = body_length(*kind);
    if (body.size() < want)
        throw TruncatedMessage("code '" + std::string(1, code) + "': got " +
                               std::to_string(body.size()) + " of " + std::to_string(want) +
                               " bytes");

    const uint8_t* p = body.data();
    ItchMessage m;
    m.kind = *kind;
    m.stock_locate = be16(p + 1);
    m.tracking = be16(p + 3);
    m.timestamp_ns = be48(p + 5);

    switch (*kind) {
    case MessageKind::SystemEvent:
        m.event_code = static_cast<char>(p[11]);
        break;
    case MessageKind::AddOrder:
    case MessageKind::AddOrderMpid:
        m.order_ref = be64(p + 11);
        m.side = parse_side(p[19]);
        m.shares = be32(p + 20);
        std::memcpy(m.symbol.data(), p + 24, 8);
        m.price = be32(p + 32);
        if (*kind == MessageKind::AddOrderMpid) std::memcpy(m.mpid.data(), p + 36, 4);
        break;
    case MessageKind::OrderExecuted:
        m.order_ref = be64(p + 11);
        m.executed_shares = be32(p + 19);
        m.match_number = be64(p + 23);
        break;
    case MessageKind::OrderExecutedWithPrice:
        m.order_ref = be64(p + 11);
        m.executed_shares = be32(p + 19);
        m.match_number = be64(p + 23);
        m.printable = static_cast<char>(p[31]);
        m.price = be32(p + 32);
        break;
    case MessageKind::OrderCancel:
        m.order_ref = be64(p + 11);
        m.shares = be32(p + 19);
        break;
    case MessageKind::OrderDelete:
        m.order_ref = be64(p + 11);
        break;
    case MessageKind::OrderReplace:
        m.order_ref = be64(p + 11);
        m.new_order_ref = be64(p + 19);
        m.shares = be32(p + 27);
        m.price = be32(p + 31);
        break;
    case MessageKind::Trade:
        m.order_ref = be64(p + 11);
        m.side = parse_side(p[19]);
        m.shares = be32(p + 20);
        std::memcpy(m.symbol.data(), p + 24, 8);
        m.price = be32(p + 32);
        m.match_number = be64(p + 36);
        break;
    }
    return m;
}

std::vector<uint8_t> encode_message(const ItchMessage& m) {
    m.validate();
    std::vector<uint8_t> out;
    out.reserve(body_length(m.kind));
    out.push_back(static_cast<uint8_t>(type_code(m.kind)));
    put16(out, m.stock_locate);
    put16(out, m.tracking);
    put48(out, m.timestamp_ns);

    switch (m.kind) {
    case MessageKind::SystemEvent:
        out.push_back(static_cast<uint8_t>(m.event_code));
        break;
    case MessageKind::AddOrder:
    case MessageKind::AddOrderMpid:
        put64(out, m.order_ref);
        out.push_back(static_cast<uint8_t>(side_byte(m.side)));
        put32(out, m.shares);
        out.insert(out.end(), m.symbol.begin(), m.symbol.end());
        put32(out, m.price);
        if (m.kind == MessageKind::AddOrderMpid)
            out.insert(out.end(), m.mpid.begin(), m.mpid.end());
        break;
    case MessageKind::OrderExecuted:
        put64(out, m.order_ref);
        put32(out, m.executed_shares);
        put64(out, m.match_number);
        break;
    case MessageKind::OrderExecutedWithPrice:
        put64(out, m.order_ref);
        put32(out, m.executed_shares);
        put64(out, m.match_number);
        out.push_back(static_cast<uint8_t>(m.printable));
        put32(out, m.price);
        break;
    case MessageKind::OrderCancel:
        put64(out, m.order_ref);
        put32(out, m.shares);
        break;
    case MessageKind::OrderDelete:
        put64(out, m.order_ref);
        break;
    case MessageKind::OrderReplace:
        put64(out, m.order_ref);
        put64(out, m.new_order_ref);
        put32(out, m.shares);
        put32(out, m.price);
        break;
    case MessageKind::Trade:
        put64(out, m.order_ref);
        out.push_back(static_cast<uint8_t>(side_byte(m.side)));
        put32(out, m.shares);
        out.insert(out.end(), m.symbol.begin(), m.symbol.end());
        put32(out, m.price);
        put64(out, m.match_number);
        break;
    }
    return out;
}

std::optional<ItchMessage> MessageStream::next() {
    for (;;) {
        uint8_t len_buf[2];
        in_.read(reinterpret_cast<char*>(len_buf), 2);
        const auto got = in_.gcount();
        if (got == 0) return std::nullopt; // clean end
        if (got < 2) throw FramingError("stream ends inside a length prefix");
        const uint16_t len = be16(len_buf);
        if (len == 0) throw FramingError("zero-length frame");

        std::vector<uint8_t> body(len);
        in_.read(reinterpret_cast<char*>(body.data()), len);
        if (in_.gcount() < static_cast<std::streamsize>(len))
            throw FramingError("length prefix " + std::to_string(len) +
                               " overruns end of stream");
        stats_.bytes_consumed += 2 + static_cast<uint64_t>(len);

        if (!kind_of(static_cast<char>(body[0]))) {
            ++stats_.skipped;
            continue;
        }
        auto msg = parse_message(body);
        ++stats_.yielded;
        return msg;
    }
}

std::vector<ItchMessage> stream_messages(std::istream& in, StreamStats* stats) {
    MessageStream ms(in);
    std::vector<ItchMessage> out;
    while (auto m = ms.next()) out.push_back(*m);
    if (stats) *stats = ms.stats();
    return out;
}

std::vector<uint8_t> frame_messages(std::span<const ItchMessage> msgs) {
    std::vector<uint8_t> out;
    for (const auto& m : msgs) {
        const auto body = encode_message(m);
        put16(out, static_cast<uint16_t>(body.size()));
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

} // namespace lob::itch
