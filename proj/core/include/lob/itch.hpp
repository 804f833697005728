#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lob/errors.hpp"

namespace lob::itch {

enum class MessageKind : uint8_t {
    SystemEvent,
    AddOrder,
    AddOrderMpid,
    OrderExecuted,
    OrderExecutedWithPrice,
    OrderCancel,
    OrderDelete,
    OrderReplace,
    Trade,
};

enum class Side : uint8_t { Bid, Ask };

constexpr uint64_t kNsPerDay = 86'400ULL * 1'000'000'000ULL;

/// Wide-record decoded TotalView-ITCH 5.0 message. Only the fields
/// meaningful for a given kind are populated; everything else keeps its
/// default so memberwise equality doubles as round-trip equality.
///
/// Field use by kind:
///   shares          - displayed shares (A/F/P), canceled shares (X),
///                     new order shares (U)
///   executed_shares - E/C
///   price           - limit price (A/F/P/U), execution price (C); units
///                     of 1/10000 USD
struct ItchMessage {
    MessageKind kind = MessageKind::SystemEvent;
    uint16_t stock_locate = 0;
    uint16_t tracking = 0;
    uint64_t timestamp_ns = 0; // 48-bit, nanoseconds since midnight

    uint64_t order_ref = 0;
    Side side = Side::Bid;
    uint32_t shares = 0;
    std::array<char, 8> symbol = {' ', ' ', ' ', ' ', ' ', ' ', ' ', ' '};
    uint32_t price = 0;
    uint32_t executed_shares = 0;
    uint64_t match_number = 0;
    char printable = 'Y';
    uint64_t new_order_ref = 0;
    std::array<char, 4> mpid = {' ', ' ', ' ', ' '};
    char event_code = 0;

    bool operator==(const ItchMessage&) const = default;

    /// Symbol with trailing spaces removed.
    std::string symbol_str() const;
    void set_symbol(std::string_view s);

    /// Throws InvalidMessage when a kind-relevant invariant is violated
    /// (zero shares/price, timestamp past midnight, ...).
    void validate() const;
};

/// Wire type code for a message kind ('S', 'A', 'F', 'E', 'C', 'X', 'D',
/// 'U', 'P').
char type_code(MessageKind kind);

/// Kind for a wire code, or nullopt when the code is outside the
/// supported subset.
std::optional<MessageKind> kind_of(char code);

/// Fixed body length (including the type byte) for a supported kind.
size_t body_length(MessageKind kind);

/// Decodes one message body (no length prefix; body[0] is the type code).
/// Throws UnknownType, TruncatedMessage, InvalidSide.
ItchMessage parse_message(std::span<const uint8_t> body);

/// Encodes a message body; inverse of parse_message for every supported
/// kind. Validates invariants first.
std::vector<uint8_t> encode_message(const ItchMessage& msg);

struct StreamStats {
    uint64_t yielded = 0;
    uint64_t skipped = 0;        // unsupported type codes
    uint64_t bytes_consumed = 0; // framing bytes included
};

/// Pull-based reader over standard ITCH file framing: each message is
/// preceded by a 2-byte big-endian body length. Unsupported message
/// types are skipped and counted; a length prefix that overruns the
/// stream raises FramingError.
class MessageStream {
public:
    explicit MessageStream(std::istream& in) : in_(in) {}

    /// Next supported message, or nullopt at a clean end of stream.
    std::optional<ItchMessage> next();

    const StreamStats& stats() const { return stats_; }

private:
    std::istream& in_;
    StreamStats stats_;
};

/// Reads a whole framed stream into memory.
std::vector<ItchMessage> stream_messages(std::istream& in, StreamStats* stats = nullptr);

/// Frames and concatenates messages (2-byte big-endian length prefixes).
std::vector<uint8_t> frame_messages(std::span<const ItchMessage> msgs);

} // namespace lob::itch
