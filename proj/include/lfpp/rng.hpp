#pragma once

#include <cstdint>
#include <initializer_list>
#include <boost/random/mersenne_twister.hpp>
#include <string_view>

namespace lfpp {

/// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of seed words into one stream key.
std::uint64_t combine(std::uint64_t seed, std::uint64_t word) noexcept;
std::uint64_t combine(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept;

/// Stable 64-bit key for a textual job label (FNV-1a, then mixed).
std::uint64_t job_key(std::string_view label) noexcept;

/// Engine for one (master seed, job key, stream) tuple. Streams for distinct
/// tuples are seeded from well-separated mixed keys.
using Engine = boost::random::mt19937_64;

Engine make_stream(std::uint64_t master_seed, std::uint64_t job, std::uint64_t stream);

}  // namespace lfpp
