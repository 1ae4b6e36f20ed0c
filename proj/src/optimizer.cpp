#include "pgd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

namespace {

constexpr double kDualMagnitudeAlarm = 1e12;
constexpr double kLossBlowup = 1e290;

struct StepWorkspace {
  std::vector<double> scores;
  Vec grad;
};

// Scores, loss and gradient of the mean loss over the sample rows given by
// [first, last) of `idx` (all rows when idx is null). Summation is in
// ascending index order, so a full batch reproduces the deterministic path.
double batch_loss_grad(const Loss& loss, const Dataset& data, const Vec& w,
                       const std::size_t* idx, std::size_t count, StepWorkspace& ws) {
  const auto& k = simd::kernels();
  const std::size_t d = data.dim();
  ws.grad.assign(d, 0.0);
  double acc = 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t i = idx ? idx[r] : r;
    const auto xi = data.folded(i);
    const double s = k.dot(xi.data(), w.data(), d);
    acc += loss.value(s);
    k.axpy(loss.derivative(s) * inv, xi.data(), ws.grad.data(), d);
  }
  return acc * inv;
}

struct LoopState {
  double max_dual = 0.0;
  double prev_loss = 0.0;
  bool have_prev = false;
};

// Shared full/stochastic iteration loop. `next_batch` fills idx/count per
// step; null means full batch.
template <typename NextBatch>
RunResult run_loop(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                   const Vec& w0, const Vec* reference, NextBatch next_batch) {
  cfg.validate(data.size());
  if (w0.size() != data.dim()) throw ShapeError("run_pgd: w0 dimension mismatch");
  if (!all_finite(w0)) throw InputDomainError("run_pgd: non-finite w0");
  if (reference && reference->size() != data.dim()) {
    throw ShapeError("run_pgd: reference dimension mismatch");
  }

  const Potential& psi = cfg.potential;
  const double pm1 = psi.p() - 1.0;
  const double inv_pm1 = 1.0 / pm1;
  const auto& k = simd::kernels();

  RunResult res;
  res.final_iterate = w0;
  Vec next(w0.size());
  StepWorkspace ws;
  std::vector<double> full_scores(data.size());
  LoopState st;
  double eta = cfg.eta;
  bool dual_alarm_logged = false;

  auto record = [&](std::size_t t, Vec& w) {
    TraceRow row;
    row.iter = t;
    row.loss = empirical_loss(loss, data, w);
    row.p_norm = psi.norm(w);
    row.margin = margin(data, w);
    if (reference && row.p_norm > 0.0) {
      row.bregman_to_ref = psi.bregman(*reference, normalized(w, psi.p()));
    }
    if (!std::isfinite(row.loss) || !std::isfinite(row.p_norm)) {
      throw DivergenceError("run_pgd: non-finite trace values (step size too large?)",
                            t, std::move(res.trace));
    }
    res.trace.rows.push_back(row);
  };

  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    const std::size_t* idx = nullptr;
    std::size_t count = data.size();
    next_batch(idx, count);

    const double batch_loss = batch_loss_grad(loss, data, res.final_iterate, idx, count, ws);
    if (!std::isfinite(batch_loss) || batch_loss >= kLossBlowup) {
      throw DivergenceError(
          "run_pgd: loss saturated at iteration " + std::to_string(t) +
              "; the step size eta=" + format_double(eta) + " is too large for this problem",
          t, std::move(res.trace));
    }

    const double dual_max = k.dual_step(res.final_iterate.data(), ws.grad.data(),
                                        res.final_iterate.size(), pm1, inv_pm1, eta,
                                        next.data());
    st.max_dual = std::max(st.max_dual, dual_max);
    if (dual_max > kDualMagnitudeAlarm && !dual_alarm_logged) {
      std::fprintf(stderr,
                   "pgd: dual-space magnitude %.3g exceeded %.1g at iteration %zu "
                   "(p=%g); results may lose precision\n",
                   dual_max, kDualMagnitudeAlarm, t, psi.p());
      dual_alarm_logged = true;
    }
    if (!all_finite(next)) {
      throw DivergenceError("run_pgd: non-finite iterate at iteration " + std::to_string(t) +
                                " (eta=" + format_double(eta) + ")",
                            t, std::move(res.trace));
    }

    if (cfg.halve_eta_on_loss_increase) {
      const double new_loss = empirical_loss(loss, data, next);
      if (st.have_prev && new_loss > st.prev_loss) {
        eta *= 0.5;
        continue;  // retry the step with the smaller eta, w unchanged
      }
      st.prev_loss = new_loss;
      st.have_prev = true;
    }

    res.final_iterate.swap(next);
    if (t % cfg.trace_stride == 0 || t == cfg.max_iters) record(t, res.final_iterate);
  }
  res.max_dual_magnitude = st.max_dual;
  return res;
}

} // namespace

void PgdConfig::validate(std::size_t n_samples) const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputDomainError("PgdConfig: eta must be positive");
  if (trace_stride == 0) throw InputDomainError("PgdConfig: trace_stride must be >= 1");
  if (batch_size && (*batch_size == 0 || *batch_size > n_samples)) {
    throw InputDomainError("PgdConfig: batch_size must be in [1, n]");
  }
}

void TrainTrace::to_csv(std::ostream& os) const {
  os << "iter,loss,p_norm,margin,bregman_to_ref\n";
  for (const auto& r : rows) {
    os << r.iter << "," << format_double(r.loss) << "," << format_double(r.p_norm) << ","
       << format_double(r.margin) << ",";
    if (r.bregman_to_ref) os << format_double(*r.bregman_to_ref);
    os << "\n";
  }
}

void TrainTrace::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("TrainTrace: cannot open " + path.string());
  to_csv(os);
}

TrainTrace TrainTrace::from_csv(std::istream& is) {
  TrainTrace tr;
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("TrainTrace: empty CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string f;
    TraceRow r;
    std::getline(row, f, ',');
    r.iter = std::stoull(f);
    std::getline(row, f, ',');
    r.loss = std::stod(f);
    std::getline(row, f, ',');
    r.p_norm = std::stod(f);
    std::getline(row, f, ',');
    r.margin = std::stod(f);
    if (std::getline(row, f, ',') && !f.empty()) r.bregman_to_ref = std::stod(f);
    tr.rows.push_back(r);
  }
  return tr;
}

Vec pgd_step(const PgdConfig& cfg, const Loss& loss, const Dataset& data, const Vec& w) {
  if (w.size() != data.dim()) throw ShapeError("pgd_step: dimension mismatch");
  if (!all_finite(w)) throw InputDomainError("pgd_step: non-finite iterate");
  const Vec g = loss_gradient(loss, data, w);
  Vec out(w.size());
  const double pm1 = cfg.potential.p() - 1.0;
  simd::kernels().dual_step(w.data(), g.data(), w.size(), pm1, 1.0 / pm1, cfg.eta, out.data());
  if (!all_finite(out)) {
    throw DivergenceError("pgd_step: non-finite result", 0, TrainTrace{});
  }
  return out;
}

RunResult run_pgd(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                  const Vec& w0, const Vec* reference) {
  return run_loop(cfg, loss, data, w0, reference,
                  [](const std::size_t*& idx, std::size_t& count) {
                    idx = nullptr;
                    (void)count;
                  });
}

RunResult run_stochastic_pgd(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                             const Vec& w0) {
  if (!cfg.batch_size) throw InputDomainError("run_stochastic_pgd: batch_size must be set");
  const std::size_t n = data.size();
  const std::size_t b = *cfg.batch_size;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch;
  std::size_t cursor = n;  // forces a shuffle on first use

  auto next_batch = [&](const std::size_t*& idx, std::size_t& count) {
    if (b == n) {
      // full batch in natural order: bitwise identical to run_pgd
      idx = nullptr;
      count = n;
      return;
    }
    if (cursor >= n) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take = std::min(b, n - cursor);
    batch.assign(order.begin() + cursor, order.begin() + cursor + take);
    cursor += take;
    // ascending order inside the batch keeps accumulation order canonical
    std::sort(batch.begin(), batch.end());
    idx = batch.data();
    count = batch.size();
  };

  return run_loop(cfg, loss, data, w0, nullptr, next_batch);
}

double check_md_identity(const Potential& psi, const Loss& loss, const Dataset& data,
                         const Vec& w, const Vec& w_t, double eta) {
  // one MD step from w_t
  PgdConfig cfg{psi, eta};
  const Vec w_next = pgd_step(cfg, loss, data, w_t);

  const double L_w = empirical_loss(loss, data, w);
  const double L_t = empirical_loss(loss, data, w_t);
  const double L_next = empirical_loss(loss, data, w_next);
  const Vec g_t = loss_gradient(loss, data, w_t);

  const auto& k = simd::kernels();
  auto dot_diff = [&](const Vec& a, const Vec& x, const Vec& y) {
    // <a, x - y> without forming x - y
    return k.dot(a.data(), x.data(), a.size()) - k.dot(a.data(), y.data(), a.size());
  };

  // Bregman divergence of L itself
  auto breg_L = [&](const Vec& x, const Vec& y, double Lx, double Ly) {
    const Vec gy = loss_gradient(loss, data, y);
    return Lx - Ly - dot_diff(gy, x, y);
  };

  const double lhs = psi.bregman(w, w_t);
  const double d_next = psi.bregman(w, w_next);
  // D_{psi - eta L} via additivity in the potential
  const double d_mix = psi.bregman(w_next, w_t) - eta * breg_L(w_next, w_t, L_next, L_t);

  const double rhs_a =
      d_next + d_mix + eta * breg_L(w, w_t, L_w, L_t) - eta * L_w + eta * L_next;
  const double rhs_b =
      d_next + d_mix - eta * dot_diff(g_t, w, w_t) - eta * L_t + eta * L_next;

  return std::max(std::fabs(lhs - rhs_a), std::fabs(lhs - rhs_b));
}

bool check_update_lower_bound(const Potential& psi, const Loss& loss, const Dataset& data,
                              const Vec& w_t, double eta, double slack) {
  PgdConfig cfg{psi, eta};
  const Vec w_next = pgd_step(cfg, loss, data, w_t);
  const double p = psi.p();
  const double coeff = (p - 1.0) / p;
  const double lhs = coeff * p * psi.value(w_next) - coeff * p * psi.value(w_t) +
                     eta * empirical_loss(loss, data, w_next) -
                     eta * empirical_loss(loss, data, w_t);
  const Vec g = loss_gradient(loss, data, w_t);
  const double rhs = -eta * simd::kernels().dot(g.data(), w_t.data(), w_t.size());
  return lhs <= rhs + slack;
}

} // namespace pgd
