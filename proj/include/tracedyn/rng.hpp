// Seeded RNG with a documented stream-splitting rule: stream k of master
// seed s is mt19937_64 seeded with splitmix64(s xor golden*(k+1)). Parallel
// and serial runs that assign one stream per unit of work agree bit for bit.
#pragma once

#include <cstdint>
#include <random>

namespace tracedyn {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::mt19937_64 rng_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return std::mt19937_64(splitmix64(master_seed ^ (0x9e3779b97f4a7c15ull * (stream_id + 1))));
}

}  // namespace tracedyn
