#include "pgd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "pgd/errors.hpp"
#include "pgd/simd/kernels.hpp"

namespace pgd {

namespace {

// v = argmax_{||v||_p <= 1} <g, v>: sign(g_j)|g_j|^(q-1), normalized.
// Falls back to the lowest-index max coordinate when the power collapses
// (deterministic tie-break).
Vec lp_ball_argmax(const Vec& g, double p, double q) {
  Vec v(g.size());
  const auto& k = simd::kernels();
  const double m = k.max_abs(g.data(), g.size());
  if (m == 0.0) return v;  // zero gradient: caller handles
  // scale first so |g_j/m|^(q-1) stays in range even for extreme q
  Vec gs(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) gs[j] = g[j] / m;
  k.signed_pow(gs.data(), gs.size(), q - 1.0, v.data());
  const double nv = lp_norm(v, p);
  if (nv == 0.0 || !std::isfinite(nv)) {
    // q near 1 (p huge): |g/m|^(q-1) ~ indicator of the max; pick it directly
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (std::fabs(g[j]) == m) {
        v[j] = g[j] > 0 ? 1.0 : -1.0;
        break;
      }
    }
    return v;
  }
  for (auto& x : v) x /= nv;
  return v;
}

struct ScoreSpace {
  std::vector<double> s;   // scores of current iterate
  std::vector<double> sv;  // scores of the LMO vertex
};

} // namespace

MarginSolution max_margin_direction(const Dataset& data, double p, double tol,
                                    const Vec* start, std::size_t max_total_iters) {
  if (!(p > 1.0)) throw InputDomainError("max_margin_direction: p must be > 1");
  if (!(tol > 0.0)) throw InputDomainError("max_margin_direction: tol must be positive");
  const double q = p / (p - 1.0);
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const auto& kr = simd::kernels();

  Vec w;
  if (start) {
    if (start->size() != d) throw ShapeError("max_margin_direction: bad start dimension");
    const double ns = lp_norm(*start, p);
    if (ns == 0.0) throw InputDomainError("max_margin_direction: zero start");
    w = *start;
    for (auto& x : w) x /= ns;
  } else {
    // LMO of the mean folded point: deterministic, feasible
    Vec g0(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      kr.axpy(1.0 / static_cast<double>(n), data.folded(i).data(), g0.data(), d);
    }
    w = lp_ball_argmax(g0, p, q);
    if (lp_norm(w, p) == 0.0) throw NotSeparableError("max_margin_direction: zero mean direction");
  }

  ScoreSpace sp;
  sp.s.resize(n);
  sp.sv.resize(n);
  data.scores(w, sp.s);

  const double log_n = std::log(static_cast<double>(n));
  double tau = 0.0;
  {
    const auto [mn, mx] = std::minmax_element(sp.s.begin(), sp.s.end());
    tau = std::max(*mx - *mn, std::max(tol, 1e-3));
  }

  Vec grad(d), best_w = w;
  double best_margin = *std::min_element(sp.s.begin(), sp.s.end());
  std::vector<double> u(n);
  std::size_t iters = 0;
  double last_gap = 0.0;

  for (int round = 0; round < 40; ++round) {
    const double round_target = std::max(tol / 2.0, tau * log_n / 2.0);
    data.scores(w, sp.s);  // resync scores once per round
    for (;;) {
      if (iters >= max_total_iters) {
        MarginSolution best{normalized(best_w, p), 0.0, iters, last_gap};
        best.margin = margin(data, best.direction);
        if (best.margin <= 0.0) {
          throw NotSeparableError("max_margin_direction: no separating direction found");
        }
        throw MarginSolverTimeout("max_margin_direction: iteration budget exhausted", best);
      }
      ++iters;

      // softmax weights of -s/tau
      const double smin = *std::min_element(sp.s.begin(), sp.s.end());
      double usum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = std::exp(-(sp.s[i] - smin) / tau);
        usum += u[i];
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        kr.axpy(u[i] / usum, data.folded(i).data(), grad.data(), d);
      }

      const Vec v = lp_ball_argmax(grad, p, q);
      last_gap = kr.dot(grad.data(), v.data(), d) - kr.dot(grad.data(), w.data(), d);
      if (smin > best_margin) {
        best_margin = smin;
        best_w = w;
      }
      if (last_gap <= round_target) break;

      // line search: maximize the concave soft-min along w + gamma (v - w)
      data.scores(v, sp.sv);
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        double der = 0.0, wsum = 0.0, mmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          const double si = (1.0 - mid) * sp.s[i] + mid * sp.sv[i];
          mmin = std::min(mmin, si);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double si = (1.0 - mid) * sp.s[i] + mid * sp.sv[i];
          const double ui = std::exp(-(si - mmin) / tau);
          wsum += ui;
          der += ui * (sp.sv[i] - sp.s[i]);
        }
        if (der / wsum > 0.0) lo = mid; else hi = mid;
      }
      const double gamma = 0.5 * (lo + hi);
      for (std::size_t j = 0; j < d; ++j) w[j] += gamma * (v[j] - w[j]);
      for (std::size_t i = 0; i < n; ++i) {
        sp.s[i] += gamma * (sp.sv[i] - sp.s[i]);
      }
    }
    if (tau * log_n <= tol / 2.0) break;
    tau *= 0.5;
  }

  const double nw = lp_norm(w, p);
  if (nw == 0.0) throw NotSeparableError("max_margin_direction: collapsed to zero");
  MarginSolution sol;
  sol.direction = normalized(w, p);
  sol.margin = margin(data, sol.direction);
  sol.iterations_used = iters;
  sol.duality_gap_estimate = last_gap;
  if (sol.margin <= 0.0) {
    throw NotSeparableError("max_margin_direction: best margin is not positive");
  }
  return sol;
}

RegPathPoint regularization_path_point(const Loss& loss, const Dataset& data, double p,
                                       double B, double tol, std::size_t max_total_iters) {
  if (!(p > 1.0)) throw InputDomainError("regularization_path_point: p must be > 1");
  if (!(B > 0.0)) throw InputDomainError("regularization_path_point: B must be positive");
  const double q = p / (p - 1.0);
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const auto& kr = simd::kernels();

  Vec w(d, 0.0);
  std::vector<double> s(n, 0.0), sv(n), u(n);
  Vec grad(d);

  RegPathPoint pt;
  pt.budget = B;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t it = 0;; ++it) {
    double L = 0.0;
    for (std::size_t i = 0; i < n; ++i) L += loss.value(s[i]);
    L *= inv_n;

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      kr.axpy(loss.derivative(s[i]) * inv_n, data.folded(i).data(), grad.data(), d);
    }
    // minimize <grad, v>: argmax against -grad, scaled to radius B
    Vec ng(d);
    for (std::size_t j = 0; j < d; ++j) ng[j] = -grad[j];
    Vec v = lp_ball_argmax(ng, p, q);
    for (auto& x : v) x *= B;

    const double gap = kr.dot(grad.data(), w.data(), d) - kr.dot(grad.data(), v.data(), d);
    pt.iterations_used = it;
    pt.gap = gap;
    pt.loss_value = L;
    // relative gap: at large budgets L itself is exponentially small and an
    // absolute test would stop while the direction is still wrong
    if (gap <= tol * L || gap <= 1e-18) {
      pt.minimizer = w;
      return pt;
    }
    if (it >= max_total_iters) {
      pt.minimizer = w;
      throw RegPathTimeout("regularization_path_point: iteration budget exhausted", pt);
    }

    data.scores(v, sv);
    double lo = 0.0, hi = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      const double mid = 0.5 * (lo + hi);
      double der = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = (1.0 - mid) * s[i] + mid * sv[i];
        der += loss.derivative(si) * (sv[i] - s[i]);
      }
      if (der < 0.0) lo = mid; else hi = mid;
    }
    const double gamma = 0.5 * (lo + hi);
    for (std::size_t j = 0; j < d; ++j) w[j] += gamma * (v[j] - w[j]);
    for (std::size_t i = 0; i < n; ++i) s[i] += gamma * (sv[i] - s[i]);
  }
}

RegMarginReport verify_reg_equals_margin(const Loss& loss, const Dataset& data, double p,
                                         std::vector<double> budgets, double tol) {
  if (budgets.empty()) throw InputDomainError("verify_reg_equals_margin: no budgets");
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw InputDomainError("verify_reg_equals_margin: budgets must be increasing");
  }
  RegMarginReport rep;
  rep.p = p;
  rep.budgets = budgets;
  const MarginSolution mm = max_margin_direction(data, p, std::min(tol, 1e-6));
  rep.margin = mm.margin;
  rep.direction = mm.direction;
  for (double B : budgets) {
    const RegPathPoint pt = regularization_path_point(loss, data, p, B, tol);
    Vec diff(pt.minimizer.size());
    for (std::size_t j = 0; j < diff.size(); ++j) {
      diff[j] = pt.minimizer[j] / B - mm.direction[j];
    }
    rep.distances.push_back(lp_norm(diff, p));
  }
  return rep;
}

std::string reg_margin_report_json(const RegMarginReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  j["budgets"] = r.budgets;
  j["distances"] = r.distances;
  j["margin"] = r.margin;
  j["direction"] = r.direction;
  return j.dump(2);
}

} // namespace pgd
