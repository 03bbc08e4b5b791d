#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fbptf {

using Engine = std::mt19937_64;

/// Immutable descriptor of a random substream.
///
/// A stream is identified by a root seed plus a path of (label, index)
/// pairs. Identical (seed, path) always produces the same engine state, so a
/// sampler keyed by e.g. (seed, sweep, "U", i) draws the same values no
/// matter which worker evaluates it or in what order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Derived substream; `this` is left unchanged.
  RngStream child(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::pair<std::string, std::uint64_t>>& path() const noexcept { return path_; }

  /// 64-bit digest of (seed, path); the engine is seeded from it.
  std::uint64_t key() const noexcept { return key_; }

  Engine engine() const;

 private:
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::uint64_t>> path_;
  std::uint64_t key_;
};

}  // namespace fbptf
