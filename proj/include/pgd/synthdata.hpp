#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pgd/linmodel.hpp"

namespace pgd {

// Deterministic generators for the synthetic fixtures. Every generator
// verifies separability before returning.
struct GeneratorSpec {
  enum class Kind { r2_anchored, r100_sparse, symmetric_pair, random_separable, two_moons };

  Kind kind = Kind::r2_anchored;
  std::uint64_t seed = 0;

  // random_separable / two_moons parameters; count == 0 picks the kind's
  // default (16 for random_separable, 200 for two_moons)
  std::size_t dim = 2;
  std::size_t count = 0;
  double margin_floor = 0.1;
  double noise = 0.12;

  static Kind kind_from_name(const std::string& name);
  const char* kind_name() const;

  // provenance sidecar, JSON with sorted keys
  std::string to_json() const;
};

Dataset generate(const GeneratorSpec& spec);

// The three fixed anchor points plus 12 Gaussian samples (std 0.15 around
// (1/2, 1/2)), resampled wholesale until the anchors stay the
// margin-defining set for p = 2. All labels +1 (labels are pre-folded).
Dataset gen_r2_anchored(std::uint64_t seed);

// 15 sparse vectors in R^100, supports of size 1..10, entries U(-2, 4).
Dataset gen_r100_sparse(std::uint64_t seed);

// {((1,0),+1), ((0,1),+1)}: the analytic fixture with l_p max margin 2^(-1/p).
Dataset gen_symmetric_pair();

// Separable-by-construction instance: points kept only when a planted unit
// direction gives them margin >= margin_floor.
Dataset gen_random_separable(std::uint64_t seed, std::size_t dim, std::size_t count,
                             double margin_floor = 0.1);

// Two interleaved half-circles with Gaussian noise; the nonlinear toy
// problem used for the small-network experiments.
Dataset gen_two_moons(std::uint64_t seed, std::size_t count = 200, double noise = 0.12);

} // namespace pgd
