#ifndef HEAVYTAIL_FORMAT_HPP
#define HEAVYTAIL_FORMAT_HPP

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace heavytail {

// Shortest round-trip decimal representation of a double.  Every number
// that lands in a CSV cell, a cache key or a hash input goes through this
// one function, which is what makes output files byte-reproducible.
inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;  // 32 bytes always suffice for doubles
    return std::string(buf, ptr);
}

// FNV-1a, 64-bit.  Used for config and problem fingerprints; stability
// across platforms matters, cryptographic strength does not.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace heavytail

#endif
