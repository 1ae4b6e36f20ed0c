#include "pgd/potential.hpp"

#include <cmath>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw InputDomainError(std::string(what) + ": non-finite input");
}

double pow_pos(double a, double e) {
  // a > 0
  if (e == 2.0) return a * a;
  if (e == 1.0) return a;
  return std::exp(e * std::log(a));
}

} // namespace

Potential::Potential(double p) : p_(p), q_(p / (p - 1.0)) {
  // Strict convexity needs p > 1; p = 1 exactly is not admissible.
  if (!std::isfinite(p) || p <= 1.0) {
    throw InputDomainError("Potential: p must be finite and > 1");
  }
}

double Potential::norm(std::span<const double> w) const { return lp_norm(w, p_); }

double Potential::value(std::span<const double> w) const {
  if (w.empty()) return 0.0;
  const auto& k = simd::kernels();
  const double m = k.max_abs(w.data(), w.size());
  if (m == 0.0) return 0.0;
  const double s = k.pow_accum(w.data(), w.size(), 1.0 / m, p_);
  return pow_pos(m, p_) * s / p_;
}

Vec Potential::mirror_map(const Vec& w) const {
  require_finite(w, "mirror_map");
  Vec out(w.size());
  simd::kernels().signed_pow(w.data(), w.size(), p_ - 1.0, out.data());
  return out;
}

Vec Potential::inverse_mirror_map(const Vec& z) const {
  require_finite(z, "inverse_mirror_map");
  Vec out(z.size());
  simd::kernels().signed_pow(z.data(), z.size(), 1.0 / (p_ - 1.0), out.data());
  return out;
}

double Potential::bregman(const Vec& x, const Vec& y) const {
  if (x.size() != y.size()) throw ShapeError("bregman: dimension mismatch");
  require_finite(x, "bregman");
  require_finite(y, "bregman");
  if (x == y) return 0.0;  // strict convexity: zero exactly when equal
  const Vec gy = mirror_map(y);
  // <grad psi(y), x - y> = <gy, x> - ||y||_p^p
  const auto& k = simd::kernels();
  const double gy_x = k.dot(gy.data(), x.data(), x.size());
  const double ypp = p_ * value(y);
  return value(x) - value(y) - gy_x + ypp;
}

double Potential::dual_norm_of_gradient(const Vec& w) const {
  require_finite(w, "dual_norm_of_gradient");
  const Vec g = mirror_map(w);
  return lp_norm(g, q_);
}

} // namespace pgd
