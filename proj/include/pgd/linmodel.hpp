#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pgd/numeric.hpp"

namespace pgd {

enum class LossKind { exponential, logistic };

// Margin loss ell(z): decreasing, convex, infimum 0 never attained.
// Both built-ins have exponential tail ell(z)*e^(a z) -> b with a = b = 1.
class Loss {
 public:
  static Loss exponential() { return Loss(LossKind::exponential); }
  static Loss logistic() { return Loss(LossKind::logistic); }
  static Loss from_name(const std::string& name);  // "exp" | "logistic"

  LossKind kind() const { return kind_; }
  const char* name() const;

  double value(double z) const;
  double derivative(double z) const;
  double tail_a() const { return 1.0; }
  double tail_b() const { return 1.0; }

  // Scores below this saturate the exponential and signal a diverging run.
  static constexpr double kSaturationScore = -700.0;

 private:
  explicit Loss(LossKind k) : kind_(k) {}
  LossKind kind_;
};

// Labeled points {(x_i, y_i)}, y_i in {+1, -1}, fixed dimension d. Labels
// are folded into the features internally (rows store y_i * x_i); the
// original labels are kept for reporting and serialization.
class Dataset {
 public:
  Dataset(std::vector<Vec> points, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> point(std::size_t i) const;   // original x_i
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const double> folded(std::size_t i) const;  // y_i * x_i

  // max_i ||x_i||_q
  double c_bound(double q) const;

  // y_i <x_i, w> for all i
  void scores(std::span<const double> w, std::span<double> out) const;

  // CSV with header x_1,...,x_d,y
  void to_csv(std::ostream& os) const;
  void save_csv(const std::filesystem::path& path) const;
  static Dataset from_csv(std::istream& is);
  static Dataset load_csv(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::vector<int> labels_;
  std::vector<double> raw_;     // row-major n x d
  std::vector<double> folded_;  // row-major n x d, label-folded
};

// L(w) = (1/n) sum_i ell(y_i <w, x_i>)
double empirical_loss(const Loss& loss, const Dataset& data, const Vec& w);

// grad L(w) = (1/n) sum_i ell'(y_i <w, x_i>) y_i x_i
Vec loss_gradient(const Loss& loss, const Dataset& data, const Vec& w);

// min_i y_i <x_i, w>
double margin(const Dataset& data, const Vec& w);

// w / margin(data, w); requires a positive margin
Vec rescale_to_unit_margin(const Dataset& data, const Vec& w);

} // namespace pgd
