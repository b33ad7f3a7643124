#pragma once

// Deterministic random streams. std::mt19937_64 supplies the bits; the
// distribution transforms are hand-rolled so the same seed produces the
// same stream on every standard library.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <random>
#include <vector>

namespace plabel {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without a cached spare, so stream state is just the engine.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // [0, n)
  std::uint64_t uniform_int(std::uint64_t n) { return n ? gen_() % n : 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

  // Independent stream keyed by (seed, string id). Per-sample streams make
  // generation order-independent.
  static Rng keyed(std::uint64_t seed, std::string_view key) {
    std::uint64_t h = 1469598103934665603ull ^ detail::splitmix64(seed);
    for (unsigned char c : key) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return Rng(detail::splitmix64(h));
  }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace plabel
