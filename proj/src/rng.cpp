#include "lfpp/rng.hpp"

#include <random>

namespace lfpp {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t seed, std::uint64_t word) noexcept {
  return mix64(seed ^ mix64(word + 0x632be59bd9b4e019ULL));
}

std::uint64_t combine(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept {
  for (std::uint64_t w : words) seed = combine(seed, w);
  return seed;
}

std::uint64_t job_key(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

Engine make_stream(std::uint64_t master_seed, std::uint64_t job, std::uint64_t stream) {
  const std::uint64_t key = combine(master_seed, {job, stream});
  // Seed the full state through seed_seq so nearby keys do not share prefixes.
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(mix64(key)), static_cast<std::uint32_t>(mix64(key) >> 32)};
  return Engine(seq);
}

}  // namespace lfpp
