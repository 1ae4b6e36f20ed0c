#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pgd/linmodel.hpp"
#include "pgd/optimizer.hpp"

namespace pgd {

// Small fully-connected rectifier network with a single output score.
// Weights live in per-layer flat row-major vectors; the p-GD update is
// applied to the concatenation of all layer weights, biases take plain
// gradient steps.
class Mlp {
 public:
  Mlp(std::vector<std::size_t> widths, std::uint64_t init_seed);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t layers() const { return weights_.size(); }
  std::size_t weight_count() const;

  const Vec& layer_weights(std::size_t l) const { return weights_[l]; }
  const Vec& layer_biases(std::size_t l) const { return biases_[l]; }
  Vec& layer_weights_mut(std::size_t l) { return weights_[l]; }
  Vec& layer_biases_mut(std::size_t l) { return biases_[l]; }

  double forward(std::span<const double> x) const;

  // all mirror-updated weights, concatenated in layer order
  Vec flat_weights() const;

  // ||flat weights||_p with max-factoring across layers
  double weight_lp_norm(double p) const;

 private:
  friend struct MlpTrainer;
  std::vector<std::size_t> widths_;
  std::vector<Vec> weights_;  // [l]: widths[l+1] x widths[l], row-major
  std::vector<Vec> biases_;   // [l]: widths[l+1]
};

struct ToynetOptions {
  // keep training this many steps even after the net first interpolates
  // (0 reproduces "stop at 100% training accuracy")
  std::size_t min_iters = 0;
};

struct ToynetResult {
  Mlp model;
  TrainTrace trace;
  bool interpolated = false;
};

// Stochastic p-GD training; stops once training accuracy hits 100% (checked
// at trace boundaries, subject to opts.min_iters) or after cfg.max_iters.
ToynetResult train_toynet(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                          Mlp arch, const ToynetOptions& opts = {});

// 100-bin histogram of the mirror-updated weights over the central 99% mass
// range (symmetric, tails cropped), plus the near-zero fraction and the
// maximum absolute weight. epsilon <= 0 selects the default 1e-3 of the
// cropped range.
struct WeightHistogram {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<std::size_t> counts;
  double near_zero_fraction = 0.0;
  double max_abs_weight = 0.0;
  double epsilon = 0.0;

  void save_csv(const std::filesystem::path& path) const;
};

WeightHistogram weight_histogram(const Mlp& model, double epsilon = -1.0);

} // namespace pgd
