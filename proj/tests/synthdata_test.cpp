#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "pgd/oracle.hpp"
#include "pgd/synthdata.hpp"

using namespace pgd;

TEST_CASE("r2 anchored: anchors verbatim, size 15, separable") {
  const Dataset data = gen_r2_anchored(1);
  REQUIRE(data.size() == 15);
  REQUIRE(data.dim() == 2);
  CHECK(data.point(0)[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(data.point(0)[1] == doctest::Approx(1.0 / 2).epsilon(1e-15));
  CHECK(data.point(1)[0] == doctest::Approx(1.0 / 2).epsilon(1e-15));
  CHECK(data.point(1)[1] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(data.point(2)[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(data.point(2)[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  // separability certificate along (1,1)
  CHECK(margin(data, {1.0, 1.0}) > 0.0);
  // anchors are the p=2 margin-defining set: every sample sits strictly above
  const auto sol = max_margin_direction(data, 2.0, 1e-8);
  const double gamma = sol.margin;
  for (std::size_t i = 3; i < data.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < 2; ++j) s += data.folded(i)[j] * sol.direction[j];
    CHECK(s > gamma + 1e-7);
  }
}

TEST_CASE("r2 anchored determinism") {
  const Dataset a = gen_r2_anchored(7);
  const Dataset b = gen_r2_anchored(7);
  std::ostringstream ca, cb;
  a.to_csv(ca);
  b.to_csv(cb);
  CHECK(ca.str() == cb.str());
  const Dataset c = gen_r2_anchored(8);
  std::ostringstream cc;
  c.to_csv(cc);
  CHECK(ca.str() != cc.str());
}

TEST_CASE("r100 sparse: supports <= 10, entries in (-2,4), separable") {
  const Dataset data = gen_r100_sparse(9);
  REQUIRE(data.size() == 15);
  REQUIRE(data.dim() == 100);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int nnz = 0;
    for (std::size_t j = 0; j < 100; ++j) {
      const double v = data.point(i)[j];
      if (v != 0.0) {
        ++nnz;
        CHECK(v > -2.0);
        CHECK(v < 4.0);
      }
    }
    CHECK(nnz >= 1);
    CHECK(nnz <= 10);
  }
  const auto sol = max_margin_direction(data, 2.0, 1e-5);
  CHECK(sol.margin > 0.0);
}

TEST_CASE("r100 sparse determinism") {
  std::ostringstream a, b;
  gen_r100_sparse(3).to_csv(a);
  gen_r100_sparse(3).to_csv(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("symmetric pair is exactly the two unit points") {
  const Dataset d = gen_symmetric_pair();
  REQUIRE(d.size() == 2);
  CHECK(d.point(0)[0] == 1.0);
  CHECK(d.point(0)[1] == 0.0);
  CHECK(d.point(1)[0] == 0.0);
  CHECK(d.point(1)[1] == 1.0);
  CHECK(d.label(0) == 1);
  CHECK(d.label(1) == 1);
  const auto sol = max_margin_direction(d, 2.0, 1e-8);
  CHECK(sol.margin == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("random separable respects the planted margin") {
  const Dataset d = gen_random_separable(5, 6, 20, 0.25);
  REQUIRE(d.size() == 20);
  const auto sol = max_margin_direction(d, 2.0, 1e-6);
  CHECK(sol.margin >= 0.25 - 1e-6);
  std::set<int> labels;
  for (std::size_t i = 0; i < d.size(); ++i) labels.insert(d.label(i));
  CHECK(labels.size() == 2);  // both classes present at this size
}

TEST_CASE("two moons shape") {
  const Dataset d = gen_two_moons(123, 200, 0.12);
  REQUIRE(d.size() == 200);
  REQUIRE(d.dim() == 2);
  int pos = 0;
  for (std::size_t i = 0; i < d.size(); ++i) pos += d.label(i) > 0;
  CHECK(pos == 100);
}

TEST_CASE("generator spec json") {
  GeneratorSpec spec;
  spec.kind = GeneratorSpec::Kind::r100_sparse;
  spec.seed = 4;
  const std::string j = spec.to_json();
  CHECK(j.find("r100_sparse") != std::string::npos);
  CHECK(j.find("schema_version") != std::string::npos);
  CHECK(GeneratorSpec::kind_from_name("two_moons") == GeneratorSpec::Kind::two_moons);
  CHECK_THROWS(GeneratorSpec::kind_from_name("nope"));
}
