#pragma once

#include <cmath>
#include <cstdint>

namespace divmkt {
namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Seeded, splittable random stream (xoshiro256++ core, splitmix64 seeding).
///
/// Equal (seed, stream) reproduces the exact draw sequence bit for bit.
/// Distinct stream ids give statistically independent substreams, which is
/// what lets Monte Carlo batches run path-parallel and still merge into a
/// result that does not depend on the thread schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {
    std::uint64_t st =
        seed ^ detail::mix64(stream * 0xD2B74407B1CE6E93ULL + 0x8CB92BA72F3D8DD7ULL);
    for (auto& s : state_) s = detail::splitmix64(st);
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Derives an independent child stream; (seed, stream, id) -> child is a
  /// pure function, so substreams are reproducible under any scheduling.
  RngStream substream(std::uint64_t id) const noexcept {
    return RngStream(seed_,
                     detail::mix64(stream_ ^ detail::mix64(id + 0x9E3779B97F4A7C15ULL)));
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return (next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe under log().
  double uniform_pos() noexcept {
    return ((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method (exact, trig-free);
  /// the second draw of each pair is cached.
  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  std::uint64_t stream_;
  double spare_;
  bool have_spare_;
};

}  // namespace divmkt
