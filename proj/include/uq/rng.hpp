#ifndef UQ_RNG_HPP
#define UQ_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uq::rng {

// Finalizer from SplitMix64 (Steele, Lea, Flood / Stafford mix13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Key derivation for independent substreams: fold one word into a key.
// Values produced from derive(k, a) and derive(k, b) are decorrelated for
// a != b, which is what keyed counter-based sampling needs.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t word) {
  return mix64(key ^ (kGolden + word + (key << 6) + (key >> 2)));
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive(derive(key, a), b);
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                               std::uint64_t c) {
  return derive(derive(key, a, b), c);
}

// Counter-based stream: output i is mix64(key + (i+1)*golden), i.e. a
// SplitMix64 sequence seeded at `key`. Streams with distinct keys can be
// consumed in any order or in parallel and still reproduce bit-identically.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

  // Uniform on the open interval (0, 1); never returns an endpoint.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws are paired, the second of each
  // pair is cached within the stream.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace uq::rng

#endif  // UQ_RNG_HPP
