#include "pgd/numeric.hpp"

#include <cmath>
#include <cstdio>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double lp_norm(std::span<const double> v, double p) {
  if (v.empty()) return 0.0;
  if (!(p >= 1.0)) throw InputDomainError("lp_norm: p must be >= 1");
  const auto& k = simd::kernels();
  const double m = k.max_abs(v.data(), v.size());
  if (m == 0.0 || std::isinf(p)) return m;
  const double s = k.pow_accum(v.data(), v.size(), 1.0 / m, p);
  if (p == 1.0) return m * s;
  if (p == 2.0) return m * std::sqrt(s);
  return m * std::exp(std::log(s) / p);
}

Vec normalized(const Vec& v, double p) {
  const double n = lp_norm(v, p);
  if (n == 0.0) throw InputDomainError("normalized: zero vector");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; two fresh draws per call keeps the stream position
  // independent of past call patterns.
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586477 * u2);
}

} // namespace pgd
