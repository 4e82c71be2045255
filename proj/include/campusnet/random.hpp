#pragma once

#include <cstdint>
#include <initializer_list>

namespace campusnet {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a task identified by a path of integers. Independent of
/// scheduling, so per-task generators reproduce under any thread count.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::int64_t> path) {
  std::uint64_t s = mix64(root);
  for (auto p : path) s = mix64(s ^ static_cast<std::uint64_t>(p));
  return s;
}

}  // namespace campusnet
