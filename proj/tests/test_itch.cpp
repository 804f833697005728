#include <doctest.h>

#include <sstream>

#include "lob/itch.hpp"
#include "test_util.hpp"

using namespace lob;
using namespace lob::itch;
using lobtest::random_message;

namespace {

// hand-assembled 36-byte add-order body: type 'A', locate 7, tracking 1,
// ts 40e12, ref 42, side 'B', 100 shares, "AAPL    ", price 1,500,000
std::vector<uint8_t> handmade_add_order() {
    std::vector<uint8_t> b;
    b.push_back('A');
    b.insert(b.end(), {0x00, 0x07});
    b.insert(b.end(), {0x00, 0x01});
    const uint64_t ts = 40'000'000'000'000ULL;
    for (int i = 5; i >= 0; --i) b.push_back(static_cast<uint8_t>(ts >> (8 * i)));
    for (int i = 7; i >= 0; --i) b.push_back(i == 0 ? 42 : 0);
    b.push_back('B');
    b.insert(b.end(), {0x00, 0x00, 0x00, 100});
    const char* sym = "AAPL    ";
    b.insert(b.end(), sym, sym + 8);
    const uint32_t px = 1'500'000;
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<uint8_t>(px >> (8 * i)));
    return b;
}

} // namespace

TEST_CASE("parse_message decodes a hand-assembled add order") {
    const auto body = handmade_add_order();
    REQUIRE(body.size() == 36);
    const auto m = parse_message(body);
    CHECK(m.kind == MessageKind::AddOrder);
    CHECK(m.stock_locate == 7);
    CHECK(m.tracking == 1);
    CHECK(m.timestamp_ns == 40'000'000'000'000ULL);
    CHECK(m.order_ref == 42);
    CHECK(m.side == Side::Bid);
    CHECK(m.shares == 100);
    CHECK(m.symbol_str() == "AAPL");
    CHECK(m.price == 1'500'000);
    // and the encoder reproduces the exact bytes
    CHECK(encode_message(m) == body);
}

TEST_CASE("parse_message rejects unknown and truncated bodies") {
    std::vector<uint8_t> unknown = {'Z', 0, 0};
    CHECK_THROWS_AS(parse_message(unknown), UnknownType);

    auto body = handmade_add_order();
    body.resize(20);
    CHECK_THROWS_AS(parse_message(body), TruncatedMessage);

    CHECK_THROWS_AS(parse_message({}), TruncatedMessage);

    auto bad_side = handmade_add_order();
    bad_side[19] = 'X';
    CHECK_THROWS_AS(parse_message(bad_side), InvalidSide);
}

TEST_CASE("system event encodes to a 12-byte body") {
    ItchMessage m = lobtest::base_message(MessageKind::SystemEvent);
    m.event_code = 'S';
    const auto body = encode_message(m);
    CHECK(body.size() == 12);
    CHECK(body[0] == 'S');
    CHECK(parse_message(body) == m);
}

TEST_CASE("invariant violations are unconstructible through the encoder") {
    auto m = lobtest::add_order(1, Side::Bid, 0, 1'000'000);
    CHECK_THROWS_AS(encode_message(m), InvalidMessage);
    m.shares = 100;
    m.price = 0;
    CHECK_THROWS_AS(encode_message(m), InvalidMessage);
    m.price = 1'000'000;
    m.timestamp_ns = 86'400ULL * 1'000'000'000ULL;
    CHECK_THROWS_AS(encode_message(m), InvalidMessage);
}

TEST_CASE("round-trip holds for 1000 fuzz-generated messages") {
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto m = random_message(rng);
        const auto body = encode_message(m);
        CHECK(body.size() == body_length(m.kind));
        const auto back = parse_message(body);
        REQUIRE(back == m);
    }
}

TEST_CASE("framed stream skips unsupported types and tracks position") {
    Rng rng(7);
    std::vector<ItchMessage> msgs{random_message(rng), random_message(rng),
                                  random_message(rng)};
    auto bytes = frame_messages(msgs);

    // splice an unsupported 'R' (stock directory, 39 bytes) after msg 1
    const auto first_len = 2 + body_length(msgs[0].kind);
    std::vector<uint8_t> directory = {0x00, 39, 'R'};
    directory.resize(2 + 39, 0x00);
    bytes.insert(bytes.begin() + static_cast<long>(first_len), directory.begin(),
                 directory.end());

    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    StreamStats stats;
    const auto out = stream_messages(in, &stats);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == msgs[0]);
    CHECK(out[1] == msgs[1]);
    CHECK(out[2] == msgs[2]);
    CHECK(stats.skipped == 1);
    CHECK(stats.yielded == 3);
    CHECK(stats.bytes_consumed == bytes.size());
}

TEST_CASE("empty stream yields nothing") {
    std::istringstream in("");
    StreamStats stats;
    CHECK(stream_messages(in, &stats).empty());
    CHECK(stats.bytes_consumed == 0);
}

TEST_CASE("stream truncated mid-message raises FramingError after prior messages") {
    Rng rng(11);
    std::vector<ItchMessage> msgs{random_message(rng), random_message(rng)};
    auto bytes = frame_messages(msgs);
    bytes.resize(bytes.size() - 5); // cut into the second message

    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    MessageStream stream(in);
    const auto first = stream.next();
    REQUIRE(first.has_value());
    CHECK(*first == msgs[0]);
    CHECK_THROWS_AS(stream.next(), FramingError);
}

TEST_CASE("stream ending inside a length prefix raises FramingError") {
    std::istringstream in(std::string(1, '\x00'));
    MessageStream stream(in);
    CHECK_THROWS_AS(stream.next(), FramingError);
}
