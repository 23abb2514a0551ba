#pragma once
// Counter-based seeded random streams. Every stream is derived from a root
// seed plus a label and optional integer coordinates, so re-generating one
// (day, hour, purpose) cell never perturbs any other stream.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace hts::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the label, folded with the seed.
inline std::uint64_t derive_key(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL ^ splitmix64(seed);
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return splitmix64(h);
}

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::uint64_t seed, std::string_view label) : key_(derive_key(seed, label)) {}

  // Child stream at integer coordinates (e.g. day, hour).
  Stream at(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    std::uint64_t k = key_;
    k = splitmix64(k ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
    k = splitmix64(k ^ splitmix64(b + 0x3c6ef372fe94f82bULL));
    k = splitmix64(k ^ splitmix64(c + 0x78dde6e5fd29f05bULL));
    return Stream(k);
  }
  Stream labeled(std::string_view label) const { return Stream(key_, label); }

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(++counter_)); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller; second deviate cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Sample an index from an (unnormalized is rejected) probability vector.
  std::size_t next_index(const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("next_index: empty probability vector");
    double u = next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;  // guard against rounding at the top end
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace hts::rng
