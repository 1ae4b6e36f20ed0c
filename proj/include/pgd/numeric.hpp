#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pgd {

using Vec = std::vector<double>;

bool all_finite(std::span<const double> v);

// ||v||_p for p >= 1 (std::numeric_limits<double>::infinity() gives the max
// norm). Computed with max-factoring: m * (sum (|v_i|/m)^p)^(1/p).
double lp_norm(std::span<const double> v, double p);

// v / ||v||_p
Vec normalized(const Vec& v, double p);

// 17-significant-digit decimal form; round-trips exactly.
std::string format_double(double x);

// Deterministic samplers on top of std::mt19937_64. The engine's output
// sequence is pinned by the standard; the transforms here replace the
// implementation-defined <random> distributions so generated data is
// byte-stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double uniform01() {  // [0, 1), 53-bit resolution
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal(double mean = 0.0, double stddev = 1.0);

  std::size_t index(std::size_t n) {  // uniform over {0, ..., n-1}
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

} // namespace pgd
