#pragma once

// Seed-to-stream mapping. Every Monte Carlo draw belongs to a (seed, replicate, chunk)
// triple; the engine for that triple is seeded from std::seed_seq over the six 32-bit
// words of the triple. Results therefore depend only on the triple, never on which
// worker thread processed a chunk.

#include <cstdint>
#include <random>

namespace ftnq {

using Engine = std::mt19937_64;

/// Samples per independently seeded chunk.
inline constexpr std::uint64_t chunk_samples = 1u << 15;

inline Engine make_stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t chunk) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(replicate), hi(replicate), lo(chunk), hi(chunk)};
    return Engine(seq);
}

} // namespace ftnq
