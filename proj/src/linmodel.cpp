#include "pgd/linmodel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

Loss Loss::from_name(const std::string& name) {
  if (name == "exp" || name == "exponential") return exponential();
  if (name == "logistic") return logistic();
  throw InputDomainError("Loss: unknown kind '" + name + "'");
}

const char* Loss::name() const {
  return kind_ == LossKind::exponential ? "exp" : "logistic";
}

double Loss::value(double z) const {
  switch (kind_) {
    case LossKind::exponential:
      // saturate instead of overflowing; the optimizer treats saturated
      // losses as divergence
      return std::exp(-std::max(z, kSaturationScore));
    case LossKind::logistic:
      // log(1 + e^-z), stable on both tails
      return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return 0.0;
}

double Loss::derivative(double z) const {
  switch (kind_) {
    case LossKind::exponential:
      return -std::exp(-std::max(z, kSaturationScore));
    case LossKind::logistic:
      // -sigmoid(-z) = -1/(1 + e^z)
      return z >= 0.0 ? -std::exp(-z) / (1.0 + std::exp(-z)) : -1.0 / (1.0 + std::exp(z));
  }
  return 0.0;
}

Dataset::Dataset(std::vector<Vec> points, std::vector<int> labels)
    : labels_(std::move(labels)) {
  if (points.size() != labels_.size()) throw ShapeError("Dataset: points/labels size mismatch");
  if (points.empty()) throw ShapeError("Dataset: empty");
  dim_ = points[0].size();
  if (dim_ == 0) throw ShapeError("Dataset: zero-dimensional points");
  raw_.reserve(points.size() * dim_);
  folded_.reserve(points.size() * dim_);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim_) throw ShapeError("Dataset: inconsistent dimensions");
    if (!all_finite(points[i])) throw InputDomainError("Dataset: non-finite point");
    if (labels_[i] != 1 && labels_[i] != -1) throw InputDomainError("Dataset: label must be +1 or -1");
    for (double v : points[i]) {
      raw_.push_back(v);
      folded_.push_back(labels_[i] * v);
    }
  }
}

std::span<const double> Dataset::point(std::size_t i) const {
  return {raw_.data() + i * dim_, dim_};
}

std::span<const double> Dataset::folded(std::size_t i) const {
  return {folded_.data() + i * dim_, dim_};
}

double Dataset::c_bound(double q) const {
  double c = 0.0;
  for (std::size_t i = 0; i < size(); ++i) c = std::max(c, lp_norm(point(i), q));
  return c;
}

void Dataset::scores(std::span<const double> w, std::span<double> out) const {
  if (w.size() != dim_) throw ShapeError("Dataset::scores: dimension mismatch");
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < size(); ++i) {
    out[i] = k.dot(folded_.data() + i * dim_, w.data(), dim_);
  }
}

void Dataset::to_csv(std::ostream& os) const {
  for (std::size_t j = 1; j <= dim_; ++j) os << "x_" << j << ",";
  os << "y\n";
  for (std::size_t i = 0; i < size(); ++i) {
    const auto x = point(i);
    for (std::size_t j = 0; j < dim_; ++j) os << format_double(x[j]) << ",";
    os << (labels_[i] > 0 ? "1" : "-1") << "\n";
  }
}

void Dataset::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("Dataset: cannot open " + path.string());
  to_csv(os);
}

Dataset Dataset::from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("Dataset: empty CSV");
  std::vector<Vec> pts;
  std::vector<int> labels;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    Vec vals;
    while (std::getline(row, field, ',')) vals.push_back(std::stod(field));
    if (vals.size() < 2) throw ShapeError("Dataset: malformed CSV row");
    const int y = static_cast<int>(vals.back());
    vals.pop_back();
    pts.push_back(std::move(vals));
    labels.push_back(y);
  }
  return Dataset(std::move(pts), std::move(labels));
}

Dataset Dataset::load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("Dataset: cannot open " + path.string());
  return from_csv(is);
}

double empirical_loss(const Loss& loss, const Dataset& data, const Vec& w) {
  if (w.size() != data.dim()) throw ShapeError("empirical_loss: dimension mismatch");
  std::vector<double> s(data.size());
  data.scores(w, s);
  double acc = 0.0;
  for (double z : s) acc += loss.value(z);
  return acc / static_cast<double>(data.size());
}

Vec loss_gradient(const Loss& loss, const Dataset& data, const Vec& w) {
  if (w.size() != data.dim()) throw ShapeError("loss_gradient: dimension mismatch");
  std::vector<double> s(data.size());
  data.scores(w, s);
  Vec g(data.dim(), 0.0);
  const auto& k = simd::kernels();
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto xi = data.folded(i);
    k.axpy(loss.derivative(s[i]) * inv_n, xi.data(), g.data(), g.size());
  }
  return g;
}

double margin(const Dataset& data, const Vec& w) {
  if (w.size() != data.dim()) throw ShapeError("margin: dimension mismatch");
  std::vector<double> s(data.size());
  data.scores(w, s);
  double m = std::numeric_limits<double>::infinity();
  for (double z : s) m = std::min(m, z);
  return m;
}

Vec rescale_to_unit_margin(const Dataset& data, const Vec& w) {
  const double m = margin(data, w);
  if (!(m > 0.0)) throw NotSeparatingError("rescale_to_unit_margin: margin is not positive");
  Vec out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / m;
  return out;
}

} // namespace pgd
