#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace decsaddle {

using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based derivation of independent random streams from one root seed.
///
/// A stream is identified by the path of integer keys leading to it
/// (root -> run -> iteration -> purpose -> node), so the draws a node sees at
/// a given iteration do not depend on evaluation order.
class SeedTree {
 public:
  constexpr explicit SeedTree(std::uint64_t root) : key_(detail::splitmix64(root)) {}

  [[nodiscard]] constexpr SeedTree child(std::uint64_t tag) const {
    SeedTree out(0);
    out.key_ = detail::splitmix64(key_ ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL));
    return out;
  }

  [[nodiscard]] constexpr SeedTree child(std::initializer_list<std::uint64_t> path) const {
    SeedTree out = *this;
    for (auto tag : path) out = out.child(tag);
    return out;
  }

  [[nodiscard]] Engine engine() const { return Engine(key_); }
  [[nodiscard]] Engine engine(std::uint64_t tag) const { return child(tag).engine(); }

  [[nodiscard]] constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// Purposes used when branching a per-iteration SeedTree.
enum class Stream : std::uint64_t {
  kOracle = 1,
  kCompressX = 2,
  kCompressY = 3,
  kReference = 4,
  kInit = 5,
  kPartition = 6,
  kDelta = 7,
};

inline SeedTree branch(const SeedTree& tree, Stream purpose) {
  return tree.child(static_cast<std::uint64_t>(purpose));
}

}  // namespace decsaddle
