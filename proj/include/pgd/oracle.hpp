#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pgd/linmodel.hpp"
#include "pgd/numeric.hpp"

namespace pgd {

// Unit-l_p direction with its achieved margin and solver certificate.
struct MarginSolution {
  Vec direction;                    // ||direction||_p = 1
  double margin = 0.0;              // min_i y_i <x_i, direction>
  std::size_t iterations_used = 0;  // total Frank-Wolfe steps
  double duality_gap_estimate = 0.0;
};

struct RegPathPoint {
  double budget = 0.0;
  Vec minimizer;       // ||minimizer||_p <= budget
  double loss_value = 0.0;
  std::size_t iterations_used = 0;
  double gap = 0.0;    // final Frank-Wolfe gap on L
};

struct MarginSolverTimeout : std::runtime_error {
  MarginSolverTimeout(const std::string& msg, MarginSolution best_so_far)
      : std::runtime_error(msg), best(std::move(best_so_far)) {}
  MarginSolution best;
};

struct RegPathTimeout : std::runtime_error {
  RegPathTimeout(const std::string& msg, RegPathPoint best_so_far)
      : std::runtime_error(msg), best(std::move(best_so_far)) {}
  RegPathPoint best;
};

// argmax_{||w||_p <= 1} min_i y_i <x_i, w> via Frank-Wolfe on the soft-min
// surrogate -tau log sum_i exp(-s_i/tau), tau halved geometrically until
// tau log n <= tol/2. The l_p-ball linear oracle is closed form:
// v_j = sign(g_j)|g_j|^(q-1) / ||g||_q^(q-1).
MarginSolution max_margin_direction(const Dataset& data, double p, double tol = 1e-6,
                                    const Vec* start = nullptr,
                                    std::size_t max_total_iters = 2000000);

// argmin_{||w||_p <= B} L(w) via Frank-Wolfe with exact-ish line search,
// terminated on a relative gap (gap <= tol * L).
RegPathPoint regularization_path_point(const Loss& loss, const Dataset& data, double p,
                                       double B, double tol = 1e-4,
                                       std::size_t max_total_iters = 500000);

// ||w_p(B)/B - w_hat||_p for every budget: the finite-budget check that the
// regularized direction approaches the max-margin direction.
struct RegMarginReport {
  double p = 0.0;
  std::vector<double> budgets;
  std::vector<double> distances;
  double margin = 0.0;  // oracle max margin
  Vec direction;        // oracle max-margin direction
};

RegMarginReport verify_reg_equals_margin(const Loss& loss, const Dataset& data, double p,
                                         std::vector<double> budgets, double tol = 1e-4);

// JSON object {budgets, direction, distances, margin, p}, keys sorted.
std::string reg_margin_report_json(const RegMarginReport& r);

} // namespace pgd
