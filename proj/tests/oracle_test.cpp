#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pgd/errors.hpp"
#include "pgd/oracle.hpp"
#include "pgd/synthdata.hpp"

using namespace pgd;

namespace {

// brute-force l_p max margin over the unit circle: 4096 angles, refined twice
double grid_search_margin(const Dataset& data, double p) {
  double best = -std::numeric_limits<double>::infinity();
  double best_theta = 0.0;
  double lo = 0.0, hi = 2.0 * 3.14159265358979323846;
  int grid = 4096;
  for (int level = 0; level < 3; ++level) {
    best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const double th = lo + (hi - lo) * i / grid;
      Vec u{std::cos(th), std::sin(th)};
      const double nu = lp_norm(u, p);
      u[0] /= nu;
      u[1] /= nu;
      const double m = margin(data, u);
      if (m > best) {
        best = m;
        best_theta = th;
      }
    }
    const double width = (hi - lo) / grid;
    lo = best_theta - 2 * width;
    hi = best_theta + 2 * width;
  }
  return best;
}

} // namespace

TEST_CASE("symmetric pair closed form for all p") {
  const Dataset data = gen_symmetric_pair();
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const auto sol = max_margin_direction(data, p, 1e-8);
    const double expect = std::pow(2.0, -1.0 / p);
    CHECK(sol.margin == doctest::Approx(expect).epsilon(1e-4));
    CHECK(sol.direction[0] == doctest::Approx(expect).epsilon(1e-4));
    CHECK(sol.direction[1] == doctest::Approx(expect).epsilon(1e-4));
    CHECK(lp_norm(sol.direction, p) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.margin == doctest::Approx(margin(data, sol.direction)).epsilon(1e-10));
  }
}

TEST_CASE("anchored fixture has the symmetric optimum") {
  const Dataset data = gen_r2_anchored(1);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto sol = max_margin_direction(data, p, 1e-7);
    const double a = std::pow(2.0, -1.0 / p);
    CHECK(sol.margin == doctest::Approx((2.0 / 3.0) * a).epsilon(1e-5));
    CHECK(sol.direction[0] == doctest::Approx(a).epsilon(1e-3));
    CHECK(sol.direction[1] == doctest::Approx(a).epsilon(1e-3));
  }
}

TEST_CASE("margin matches 2d grid search on random instances") {
  for (std::uint64_t seed : {10, 11, 12, 13, 14}) {
    const Dataset data = gen_random_separable(seed, 2, 5);
    for (double p : {1.5, 2.0, 3.0}) {
      const auto sol = max_margin_direction(data, p, 1e-6);
      const double brute = grid_search_margin(data, p);
      CHECK(sol.margin >= brute - 1e-3);
      CHECK(sol.margin <= brute + 1e-3);
    }
  }
}

TEST_CASE("different starts converge to the same direction") {
  const Dataset data = gen_random_separable(21, 4, 9);
  const double tol = 1e-6;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto a = max_margin_direction(data, p, tol);
    Rng rng(99);
    Vec start(4);
    for (auto& v : start) v = rng.normal();
    const auto b = max_margin_direction(data, p, tol, &start);
    Vec diff(4);
    for (int j = 0; j < 4; ++j) diff[j] = a.direction[j] - b.direction[j];
    CHECK(lp_norm(diff, p) <= 10 * tol);
  }
}

TEST_CASE("non-separable data is detected") {
  const Dataset data({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, {1, 1, 1, 1});
  CHECK_THROWS_AS(max_margin_direction(data, 2.0, 1e-6), NotSeparableError);
}

TEST_CASE("scaling invariance of the direction") {
  const Dataset data = gen_random_separable(31, 3, 8);
  std::vector<Vec> scaled;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vec x(data.point(i).begin(), data.point(i).end());
    for (auto& v : x) v *= 7.5;
    scaled.push_back(x);
    labels.push_back(data.label(i));
  }
  const Dataset big(std::move(scaled), std::move(labels));
  const auto a = max_margin_direction(data, 3.0, 1e-7);
  const auto b = max_margin_direction(big, 3.0, 1e-7);
  CHECK(b.margin == doctest::Approx(7.5 * a.margin).epsilon(1e-4));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(a.direction[j] == doctest::Approx(b.direction[j]).epsilon(1e-3));
  }
}

TEST_CASE("regularization path point basics") {
  const Dataset data = gen_symmetric_pair();
  // tiny budget: minimizer stays near zero, loss near L(0)
  const auto p0 = regularization_path_point(Loss::exponential(), data, 2.0, 1e-6, 1e-6);
  CHECK(lp_norm(p0.minimizer, 2.0) <= 1e-6 * (1 + 1e-8));
  CHECK(p0.loss_value == doctest::Approx(1.0).epsilon(1e-5));

  // symmetric data: solution at the symmetric boundary point for any budget
  for (double p : {1.5, 2.0, 3.0}) {
    for (double B : {0.5, 2.0, 5.0}) {
      const auto pt = regularization_path_point(Loss::exponential(), data, p, B, 1e-6);
      const double expect = B * std::pow(2.0, -1.0 / p);
      CHECK(pt.minimizer[0] == doctest::Approx(expect).epsilon(1e-3));
      CHECK(pt.minimizer[1] == doctest::Approx(expect).epsilon(1e-3));
      CHECK(lp_norm(pt.minimizer, p) <= B * (1 + 1e-8));
    }
  }
}

TEST_CASE("verify_reg_equals_margin on the symmetric pair") {
  const Dataset data = gen_symmetric_pair();
  const auto rep =
      verify_reg_equals_margin(Loss::exponential(), data, 2.0, {1.0, 2.0, 4.0}, 1e-6);
  for (double dstance : rep.distances) {
    CHECK(dstance <= 1e-4);
  }
  CHECK(rep.margin == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-5));
}

TEST_CASE("reg path distances shrink on the anchored fixture") {
  const Dataset data = gen_r2_anchored(1);
  for (const Loss& loss : {Loss::exponential(), Loss::logistic()}) {
    const auto rep = verify_reg_equals_margin(loss, data, 2.0, {5.0, 10.0, 20.0, 40.0}, 1e-4);
    for (std::size_t i = 1; i < rep.distances.size(); ++i) {
      CHECK(rep.distances[i] <= rep.distances[i - 1] + 1e-3);
    }
    CHECK(rep.distances.back() <= 0.05);
  }
}

TEST_CASE("report json has the fixed key order") {
  RegMarginReport rep;
  rep.p = 2.0;
  rep.budgets = {1.0};
  rep.distances = {0.5};
  rep.margin = 0.7;
  rep.direction = {1.0, 0.0};
  const std::string j = reg_margin_report_json(rep);
  CHECK(j.find("budgets") < j.find("direction"));
  CHECK(j.find("direction") < j.find("distances"));
  CHECK(j.find("distances") < j.find("margin"));
  CHECK(j.find("margin") < j.find("\"p\""));
}

TEST_CASE("margin solver timeout carries the best-so-far solution") {
  const Dataset data = gen_r100_sparse(29);
  try {
    max_margin_direction(data, 2.0, 1e-12, nullptr, 200);
    FAIL("expected timeout");
  } catch (const MarginSolverTimeout& e) {
    CHECK(e.best.margin > 0.0);
    CHECK(lp_norm(e.best.direction, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("reg path timeout carries the best-so-far point") {
  const Dataset data = gen_r100_sparse(29);
  try {
    regularization_path_point(Loss::exponential(), data, 2.0, 20.0, 1e-10, 3);
    FAIL("expected timeout");
  } catch (const RegPathTimeout& e) {
    CHECK(e.best.budget == 20.0);
    CHECK(lp_norm(e.best.minimizer, 2.0) <= 20.0 * (1 + 1e-8));
    CHECK(e.best.loss_value > 0.0);
  }
}
