#pragma once

#include <span>

#include "pgd/numeric.hpp"

namespace pgd {

// Mirror potential psi(w) = (1/p)||w||_p^p together with its mirror map,
// inverse map and Bregman divergence. p must be strictly greater than 1;
// the advisory range is p in [1.1, 10] (outside it the inverse exponent
// 1/(p-1) makes dual-space values explode or collapse).
class Potential {
 public:
  explicit Potential(double p);

  double p() const { return p_; }
  double q() const { return q_; }  // dual exponent, 1/p + 1/q = 1

  // psi(w)
  double value(std::span<const double> w) const;

  // ||w||_p
  double norm(std::span<const double> w) const;

  // grad psi(w), component j = sign(w_j)|w_j|^(p-1)
  Vec mirror_map(const Vec& w) const;

  // component j = sign(z_j)|z_j|^(1/(p-1)); exact inverse of mirror_map
  Vec inverse_mirror_map(const Vec& z) const;

  // D_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>
  double bregman(const Vec& x, const Vec& y) const;

  // ||grad psi(w)||_q, equal to ||w||_p^(p-1)
  double dual_norm_of_gradient(const Vec& w) const;

 private:
  double p_;
  double q_;
};

} // namespace pgd
