#include "mmtc/rng.hpp"

namespace mmtc {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng Rng::substream(std::uint64_t master, std::uint64_t index, std::string_view tag) {
    return Rng(mix64(mix64(master) ^ mix64(index + 0x51ed27ULL) ^ hash_tag(tag)));
}

Rng Rng::substream(std::uint64_t master, std::uint64_t i, std::uint64_t j, std::string_view tag) {
    return substream(mix64(master ^ mix64(i)), j, tag);
}

}  // namespace mmtc
