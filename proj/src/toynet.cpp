#include "pgd/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

Mlp::Mlp(std::vector<std::size_t> widths, std::uint64_t init_seed)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InputDomainError("Mlp: need at least input and output widths");
  if (widths_.back() != 1) throw InputDomainError("Mlp: single-output networks only");
  for (std::size_t w : widths_) {
    if (w == 0) throw InputDomainError("Mlp: zero layer width");
  }
  Rng rng(init_seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const std::size_t fan_in = widths_[l];
    const std::size_t fan_out = widths_[l + 1];
    const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Vec w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-lim, lim);
    weights_.push_back(std::move(w));
    // small positive bias keeps rectifier units alive through the violent
    // first dual-space steps at large p
    biases_.emplace_back(fan_out, 0.01);
  }
}

std::size_t Mlp::weight_count() const {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.size();
  return n;
}

double Mlp::forward(std::span<const double> x) const {
  if (x.size() != widths_[0]) throw ShapeError("Mlp::forward: bad input dimension");
  const auto& k = simd::kernels();
  Vec cur(x.begin(), x.end());
  Vec next;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      next[r] = biases_[l][r] + k.dot(weights_[l].data() + r * in, cur.data(), in);
      if (l + 1 < weights_.size() && next[r] < 0.0) next[r] = 0.0;
    }
    cur.swap(next);
  }
  return cur[0];
}

Vec Mlp::flat_weights() const {
  Vec out;
  out.reserve(weight_count());
  for (const auto& w : weights_) out.insert(out.end(), w.begin(), w.end());
  return out;
}

double Mlp::weight_lp_norm(double p) const {
  const auto& k = simd::kernels();
  double m = 0.0;
  for (const auto& w : weights_) m = std::max(m, k.max_abs(w.data(), w.size()));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& w : weights_) s += k.pow_accum(w.data(), w.size(), 1.0 / m, p);
  if (p == 2.0) return m * std::sqrt(s);
  return m * std::exp(std::log(s) / p);
}

// Forward/backward workspace shared across steps.
struct MlpTrainer {
  Mlp& net;
  const Loss& loss;
  const Dataset& data;
  std::vector<Vec> acts;     // per layer activations (post-ReLU), acts[0] = input copy
  std::vector<Vec> preacts;  // pre-activation values per layer
  std::vector<Vec> gw;       // weight gradients
  std::vector<Vec> gb;       // bias gradients
  std::vector<Vec> delta;    // backprop buffers

  MlpTrainer(Mlp& n, const Loss& l, const Dataset& d) : net(n), loss(l), data(d) {
    const auto& ws = net.widths_;
    acts.resize(ws.size());
    preacts.resize(ws.size());
    delta.resize(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
      acts[i].resize(ws[i]);
      preacts[i].resize(ws[i]);
      delta[i].resize(ws[i]);
    }
    gw.resize(net.layers());
    gb.resize(net.layers());
    for (std::size_t l = 0; l < net.layers(); ++l) {
      gw[l].resize(net.weights_[l].size());
      gb[l].resize(net.biases_[l].size());
    }
  }

  double forward_sample(std::size_t i) {
    const auto x = data.point(i);
    std::copy(x.begin(), x.end(), acts[0].begin());
    const auto& k = simd::kernels();
    for (std::size_t l = 0; l < net.layers(); ++l) {
      const std::size_t in = net.widths_[l];
      const std::size_t out = net.widths_[l + 1];
      for (std::size_t r = 0; r < out; ++r) {
        const double z =
            net.biases_[l][r] + k.dot(net.weights_[l].data() + r * in, acts[l].data(), in);
        preacts[l + 1][r] = z;
        acts[l + 1][r] = (l + 1 < net.layers() && z < 0.0) ? 0.0 : z;
      }
    }
    return acts.back()[0];
  }

  // accumulates mean gradients over the batch; returns mean batch loss
  double batch_grad(const std::size_t* idx, std::size_t count) {
    for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
    const auto& k = simd::kernels();
    const double inv = 1.0 / static_cast<double>(count);
    double acc = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t i = idx[r];
      const double f = forward_sample(i);
      const double y = data.label(i);
      const double z = y * f;
      acc += loss.value(z);
      // d(mean loss)/df for this sample
      delta.back()[0] = loss.derivative(z) * y * inv;
      for (std::size_t l = net.layers(); l-- > 0;) {
        const std::size_t in = net.widths_[l];
        const std::size_t out = net.widths_[l + 1];
        auto& dl = delta[l + 1];
        for (std::size_t row = 0; row < out; ++row) {
          if (dl[row] == 0.0) continue;
          k.axpy(dl[row], acts[l].data(), gw[l].data() + row * in, in);
          gb[l][row] += dl[row];
        }
        if (l == 0) break;
        auto& dprev = delta[l];
        std::fill(dprev.begin(), dprev.end(), 0.0);
        for (std::size_t row = 0; row < out; ++row) {
          if (dl[row] == 0.0) continue;
          k.axpy(dl[row], net.weights_[l].data() + row * in, dprev.data(), in);
        }
        for (std::size_t c = 0; c < in; ++c) {
          if (preacts[l][c] <= 0.0) dprev[c] = 0.0;  // ReLU gate
        }
      }
    }
    return acc * inv;
  }

  double full_margin() {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
      m = std::min(m, data.label(i) * forward_sample(i));
    }
    return m;
  }

  double full_loss() {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      acc += loss.value(data.label(i) * forward_sample(i));
    }
    return acc / static_cast<double>(data.size());
  }
};

ToynetResult train_toynet(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                          Mlp arch, const ToynetOptions& opts) {
  cfg.validate(data.size());
  if (data.dim() != arch.widths().front()) throw ShapeError("train_toynet: input width mismatch");
  const std::size_t n = data.size();
  const std::size_t b = cfg.batch_size.value_or(n);

  ToynetResult res{std::move(arch), TrainTrace{}, false};
  MlpTrainer tr(res.model, loss, data);

  const double pm1 = cfg.potential.p() - 1.0;
  const double inv_pm1 = 1.0 / pm1;
  const auto& k = simd::kernels();

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch;
  std::size_t cursor = n;
  std::vector<Vec> scratch(res.model.layers());
  for (std::size_t l = 0; l < scratch.size(); ++l) scratch[l].resize(tr.gw[l].size());

  auto record = [&](std::size_t t) {
    TraceRow row;
    row.iter = t;
    row.loss = tr.full_loss();
    row.margin = tr.full_margin();
    row.p_norm = res.model.weight_lp_norm(cfg.potential.p());
    if (!std::isfinite(row.loss) || !std::isfinite(row.p_norm)) {
      throw DivergenceError("train_toynet: diverged (step size too large?)", t,
                            std::move(res.trace));
    }
    res.trace.rows.push_back(row);
    return row.margin > 0.0;
  };

  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    if (b == n) {
      batch = order;
    } else {
      if (cursor >= n) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t take = std::min(b, n - cursor);
      batch.assign(order.begin() + cursor, order.begin() + cursor + take);
      cursor += take;
      std::sort(batch.begin(), batch.end());
    }
    tr.batch_grad(batch.data(), batch.size());

    for (std::size_t l = 0; l < res.model.layers(); ++l) {
      auto& w = res.model.layer_weights_mut(l);
      k.dual_step(w.data(), tr.gw[l].data(), w.size(), pm1, inv_pm1, cfg.eta,
                  scratch[l].data());
      w.swap(scratch[l]);
      if (!all_finite(w)) {
        throw DivergenceError("train_toynet: non-finite weights at iteration " +
                                  std::to_string(t),
                              t, std::move(res.trace));
      }
      // plain gradient step for biases: the mirror geometry concerns weights
      auto& b = res.model.layer_biases_mut(l);
      k.axpy(-cfg.eta, tr.gb[l].data(), b.data(), b.size());
    }

    if (t % cfg.trace_stride == 0 || t == cfg.max_iters) {
      const bool interp = record(t);
      if (interp && t >= opts.min_iters) {
        res.interpolated = true;
        break;
      }
    }
  }
  if (!res.interpolated && !res.trace.rows.empty()) {
    res.interpolated = res.trace.rows.back().margin > 0.0;
  }
  return res;
}

WeightHistogram weight_histogram(const Mlp& model, double epsilon) {
  const Vec w = model.flat_weights();
  const std::size_t n = w.size();
  WeightHistogram h;
  h.max_abs_weight = simd::kernels().max_abs(w.data(), n);

  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::fabs(w[i]);
  std::sort(mags.begin(), mags.end());
  // crop the 0.5% largest magnitudes: central 99% mass, symmetric range
  const std::size_t rank =
      std::min(n - 1, static_cast<std::size_t>(std::ceil(0.995 * static_cast<double>(n - 1))));
  const double r = mags[rank];

  constexpr int kBins = 100;
  h.bin_left.resize(kBins);
  h.bin_right.resize(kBins);
  h.counts.assign(kBins, 0);
  h.epsilon = epsilon > 0.0 ? epsilon : 1e-3 * (2.0 * r);

  if (r == 0.0) {
    // degenerate all-zero model: single spike at zero
    h.counts[kBins / 2] = n;
    h.near_zero_fraction = 1.0;
    return h;
  }
  const double width = 2.0 * r / kBins;
  for (int bin = 0; bin < kBins; ++bin) {
    h.bin_left[bin] = -r + bin * width;
    h.bin_right[bin] = -r + (bin + 1) * width;
  }
  std::size_t near_zero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(w[i]) < h.epsilon) ++near_zero;
    if (std::fabs(w[i]) > r) continue;  // cropped tail
    int bin = static_cast<int>((w[i] + r) / width);
    bin = std::clamp(bin, 0, kBins - 1);
    ++h.counts[bin];
  }
  h.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(n);
  return h;
}

void WeightHistogram::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("WeightHistogram: cannot open " + path.string());
  os << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    os << format_double(bin_left[i]) << "," << format_double(bin_right[i]) << "," << counts[i]
       << "\n";
  }
}

} // namespace pgd
