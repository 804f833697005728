#include "lob/hash.hpp"

#include <cstdio>
#include <fstream>

#include "lob/errors.hpp"

namespace lob {

uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64({reinterpret_cast<const uint8_t*>(buf),
                     static_cast<size_t>(in.gcount())},
                    h);
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace lob
