#pragma once

// Seeding scheme.
//
// Every random stage gets its own 64-bit seed, derived from the root seed and a
// stage name:   stage_seed = splitmix64(root ^ fnv1a64(stage_name)).
// Inside a stage, work is cut into fixed-size chunks and chunk k draws from
// std::mt19937_64(splitmix64(stage_seed + k)). Results are therefore identical
// for any number of workers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace timebin::rng {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

/// Engine for substream `chunk` of `seed`.
Engine substream(std::uint64_t seed, std::uint64_t chunk);

/// Items per substream for all chunked samplers.
inline constexpr std::size_t kChunkSize = 4096;

/// Runs body(chunk_index, begin, end) over [0, count) in kChunkSize pieces,
/// spreading chunks over `workers` threads (0 = hardware concurrency).
void for_each_chunk(std::size_t count, unsigned workers,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace timebin::rng
