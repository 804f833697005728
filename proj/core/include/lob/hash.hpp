#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace lob {

/// FNV-1a 64-bit. Not cryptographic; used for manifests, checkpoints,
/// and no-lookahead audits where only accidental-change detection is
/// needed.
inline uint64_t fnv1a64(std::span<const uint8_t> bytes, uint64_t h = 0xcbf29ce484222325ULL) {
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s) {
    return fnv1a64({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
}

/// Streaming checksum of a file's contents. Throws IoError.
uint64_t file_checksum(const std::filesystem::path& path);

std::string hex64(uint64_t v);

} // namespace lob
