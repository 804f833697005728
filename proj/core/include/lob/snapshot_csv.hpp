#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "lob/book.hpp"

namespace lob::book {

/// Column layout of the snapshot interchange CSV: one observation per
/// row, prices in integer 1/10000 USD, sizes in shares, sentinel (0,0)
/// levels beyond the valid depth.
extern const char* const kSnapshotCsvHeader;

void write_snapshot_csv(const std::filesystem::path& path,
                        std::span<const BookSnapshot> snaps);

/// Reads and validates a snapshot CSV (header, column count, level
/// ordering, positivity, uncrossed top). Throws IoError on malformed
/// input.
std::vector<BookSnapshot> read_snapshot_csv(const std::filesystem::path& path);

/// Validates BookSnapshot invariants: ask prices strictly increasing,
/// bid prices strictly decreasing, positive volumes at valid levels,
/// sentinel beyond, best bid below best ask. Throws IoError.
void validate_snapshot(const BookSnapshot& snap);

} // namespace lob::book
