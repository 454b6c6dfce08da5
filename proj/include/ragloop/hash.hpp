#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

namespace ragloop {

/// 64-bit FNV-1a. Used for content digests (document ids, episode ids,
/// file fingerprints in manifests). Portable and stable across platforms;
/// not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

/// Digest of several fields, separated so ("ab","c") != ("a","bc").
inline std::string digest_fields(std::span<const std::string_view> fields) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto f : fields) {
        h = fnv1a64(f, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return to_hex(h);
}

inline std::string digest_fields(std::initializer_list<std::string_view> fields) {
    return digest_fields(std::span<const std::string_view>(fields.begin(), fields.size()));
}

}  // namespace ragloop
