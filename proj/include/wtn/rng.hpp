#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace wtn {

// Deterministic splitmix64 stream. We avoid <random> distributions on purpose:
// their output is implementation-defined, and identical seeds must reproduce
// bit-identical draws everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via the Marsaglia polar method (pair cached).
  double gaussian() {
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
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent child seed from a master seed, a stream name, and an
// index. Every stochastic stage (trial basis, test means, boundary draws,
// Monte Carlo quadrature, ...) gets its own stream so that adding draws to one
// stage never shifts another.
inline std::uint64_t split_seed(std::uint64_t master, std::string_view stream,
                                std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream tag
  for (char c : stream) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  Rng mixer(master ^ (h + 0x9e3779b97f4a7c15ULL * (index + 1)));
  mixer.next_u64();
  return mixer.next_u64();
}

}  // namespace wtn
