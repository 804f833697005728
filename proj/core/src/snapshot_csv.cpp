#include "lob/snapshot_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>

namespace lob::book {

const char* const kSnapshotCsvHeader =
    "ts_ns,ask_px_1,ask_sz_1,bid_px_1,bid_sz_1,ask_px_2,ask_sz_2,bid_px_2,bid_sz_2,"
    "ask_px_3,ask_sz_3,bid_px_3,bid_sz_3,ask_px_4,ask_sz_4,bid_px_4,bid_sz_4,"
    "ask_px_5,ask_sz_5,bid_px_5,bid_sz_5,ask_px_6,ask_sz_6,bid_px_6,bid_sz_6,"
    "ask_px_7,ask_sz_7,bid_px_7,bid_sz_7,ask_px_8,ask_sz_8,bid_px_8,bid_sz_8,"
    "ask_px_9,ask_sz_9,bid_px_9,bid_sz_9,ask_px_10,ask_sz_10,bid_px_10,bid_sz_10";

void validate_snapshot(const BookSnapshot& s) {
    const auto fail = [&](const std::string& why) {
        throw IoError("snapshot at ts " + std::to_string(s.timestamp_ns) + ": " + why);
    };
    if (s.valid_asks < 0 || s.valid_asks > kDepth || s.valid_bids < 0 ||
        s.valid_bids > kDepth)
        fail("valid level count out of range");
    for (int i = 0; i < kDepth; ++i) {
        const bool ask_valid = i < s.valid_asks;
        const bool bid_valid = i < s.valid_bids;
        if (ask_valid && (s.asks[i].price == 0 || s.asks[i].volume == 0))
            fail("ask level " + std::to_string(i + 1) + " not positive");
        if (bid_valid && (s.bids[i].price == 0 || s.bids[i].volume == 0))
            fail("bid level " + std::to_string(i + 1) + " not positive");
        if (!ask_valid && s.asks[i] != Level{}) fail("ask sentinel expected");
        if (!bid_valid && s.bids[i] != Level{}) fail("bid sentinel expected");
        if (i > 0 && ask_valid && s.asks[i].price <= s.asks[i - 1].price)
            fail("ask prices not strictly increasing");
        if (i > 0 && bid_valid && s.bids[i].price >= s.bids[i - 1].price)
            fail("bid prices not strictly decreasing");
    }
    if (s.two_sided() && s.bids[0].price >= s.asks[0].price) fail("crossed top of book");
}

void write_snapshot_csv(const std::filesystem::path& path,
                        std::span<const BookSnapshot> snaps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << kSnapshotCsvHeader << '\n';
    char buf[32];
    for (const auto& s : snaps) {
        out << s.timestamp_ns;
        for (int i = 0; i < kDepth; ++i) {
            std::snprintf(buf, sizeof buf, ",%u,%u,%u,%u", s.asks[i].price,
                          s.asks[i].volume, s.bids[i].price, s.bids[i].volume);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

uint64_t parse_u64(std::string_view field, const std::filesystem::path& path, size_t line) {
    uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw IoError(path.string() + ":" + std::to_string(line) + ": bad integer field '" +
                      std::string(field) + "'");
    return v;
}

} // namespace

std::vector<BookSnapshot> read_snapshot_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSnapshotCsvHeader)
        throw IoError(path.string() + ": unexpected header");

    std::vector<BookSnapshot> snaps;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        BookSnapshot s;
        size_t pos = 0;
        int col = 0;
        uint64_t fields[41];
        while (pos <= line.size()) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            if (col >= 41)
                throw IoError(path.string() + ":" + std::to_string(lineno) +
                              ": too many columns");
            fields[col++] = parse_u64({line.data() + pos, comma - pos}, path, lineno);
            pos = comma + 1;
        }
        if (col != 41)
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": expected 41 columns, got " + std::to_string(col));

        s.timestamp_ns = fields[0];
        for (int i = 0; i < kDepth; ++i) {
            s.asks[i] = Level{static_cast<uint32_t>(fields[1 + 4 * i]),
                              static_cast<uint32_t>(fields[2 + 4 * i])};
            s.bids[i] = Level{static_cast<uint32_t>(fields[3 + 4 * i]),
                              static_cast<uint32_t>(fields[4 + 4 * i])};
        }
        for (int i = 0; i < kDepth; ++i) {
            if (s.asks[i].price != 0) s.valid_asks = i + 1;
            if (s.bids[i].price != 0) s.valid_bids = i + 1;
        }
        validate_snapshot(s);
        snaps.push_back(s);
    }
    return snaps;
}

} // namespace lob::book
