// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_COMMON_HPP
#define FSPG_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#define FSPG_VERSION "0.1.0"

namespace fspg {

struct error : std::runtime_error {
  explicit error(const std::string &msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string &msg) {
  if (!cond) throw error(msg);
}

// Critical Sobolev-type exponent bound of the nonlinearity: 2*_s - 1 = (3+2s)/(3-2s).
inline double critical_p(double s) { return (3.0 + 2.0 * s) / (3.0 - 2.0 * s); }

// Deterministic RNG. std::mt19937_64 is pinned by the standard, but the
// distributions are not, so normals are produced by explicit Box-Muller.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  // xorshift* core; full 64-bit period is irrelevant at our draw counts
  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace fspg

#endif
