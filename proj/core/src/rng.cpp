#include "fbptf/rng.hpp"

namespace fbptf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(splitmix64(seed)) {}

RngStream RngStream::child(std::string_view label, std::uint64_t index) const {
  RngStream out = *this;
  out.path_.emplace_back(std::string(label), index);
  out.key_ = splitmix64(splitmix64(key_ ^ fnv1a(label)) + index);
  return out;
}

Engine RngStream::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32),
                    static_cast<std::uint32_t>(path_.size())};
  return Engine(seq);
}

}  // namespace fbptf
