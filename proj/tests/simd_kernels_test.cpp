#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pgd/numeric.hpp"
#include "pgd/simd/kernels.hpp"

using namespace pgd;
using simd::Kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo_mag, double hi_mag) {
  std::vector<double> v(n);
  for (auto& x : v) {
    const double mag = std::exp(rng.uniform(std::log(lo_mag), std::log(hi_mag)));
    x = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * mag;
    if (rng.uniform01() < 0.05) x = 0.0;
  }
  return v;
}

bool have_avx2() { return simd::detected_level() == simd::Level::avx2; }

} // namespace

TEST_CASE("scalar/avx2 dot and axpy agree") {
  if (!have_avx2()) return;
  const Kernels& s = simd::scalar_kernels();
  const Kernels& a = simd::avx2_kernels();
  Rng rng(11);
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 100, 1001}) {
    const auto x = random_vec(rng, n, 1e-6, 1e6);
    const auto y = random_vec(rng, n, 1e-6, 1e6);
    const double ds = s.dot(x.data(), y.data(), n);
    const double da = a.dot(x.data(), y.data(), n);
    CHECK(std::fabs(ds - da) <= 1e-12 * (1.0 + std::fabs(ds)) + 1e-9 * n);

    auto ys = y, ya = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    a.axpy(0.37, x.data(), ya.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::fabs(ys[i] - ya[i]) <= 1e-13 * (1.0 + std::fabs(ys[i])));
    }
    CHECK(s.max_abs(x.data(), n) == a.max_abs(x.data(), n));
  }
}

TEST_CASE("avx2 signed_pow matches the scalar exp/log reference") {
  if (!have_avx2()) return;
  const Kernels& s = simd::scalar_kernels();
  const Kernels& a = simd::avx2_kernels();
  Rng rng(12);
  for (double e : {0.1, 0.333, 0.5, 1.0, 2.0, 2.71, 5.0, 9.0, 1.0 / 9.0}) {
    const auto x = random_vec(rng, 513, 1e-8, 1e8);
    std::vector<double> os(x.size()), oa(x.size());
    s.signed_pow(x.data(), x.size(), e, os.data());
    a.signed_pow(x.data(), x.size(), e, oa.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double tol = 1e-12 * (1.0 + std::fabs(e * std::log(std::fabs(x[i]) + 1e-300)));
      CHECK(std::fabs(os[i] - oa[i]) <= tol * (std::fabs(os[i]) + 1e-300));
      if (x[i] == 0.0) CHECK(oa[i] == 0.0);
    }
  }
}

TEST_CASE("avx2 pow_accum matches scalar") {
  if (!have_avx2()) return;
  const Kernels& s = simd::scalar_kernels();
  const Kernels& a = simd::avx2_kernels();
  Rng rng(13);
  for (double e : {1.0, 1.1, 1.5, 2.0, 3.0, 6.0, 10.0}) {
    const auto x = random_vec(rng, 257, 1e-3, 1e3);
    const double m = s.max_abs(x.data(), x.size());
    const double vs = s.pow_accum(x.data(), x.size(), 1.0 / m, e);
    const double va = a.pow_accum(x.data(), x.size(), 1.0 / m, e);
    CHECK(std::fabs(vs - va) <= 1e-11 * (1.0 + std::fabs(vs)));
  }
}

TEST_CASE("avx2 dual_step matches scalar and p=2 is exact") {
  if (!have_avx2()) return;
  const Kernels& s = simd::scalar_kernels();
  const Kernels& a = simd::avx2_kernels();
  Rng rng(14);
  for (double p : {1.1, 1.5, 2.0, 3.0, 10.0}) {
    const auto w = random_vec(rng, 101, 1e-4, 1e2);
    const auto g = random_vec(rng, 101, 1e-6, 1e1);
    std::vector<double> os(w.size()), oa(w.size());
    const double ms = s.dual_step(w.data(), g.data(), w.size(), p - 1, 1 / (p - 1), 0.01, os.data());
    const double ma = a.dual_step(w.data(), g.data(), w.size(), p - 1, 1 / (p - 1), 0.01, oa.data());
    CHECK(std::fabs(ms - ma) <= 1e-11 * (1.0 + ms));
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (p == 2.0) {
        CHECK(oa[i] == os[i]);  // p = 2 path is plain w - eta*g, bitwise
        CHECK(os[i] == w[i] - 0.01 * g[i]);
      } else {
        CHECK(std::fabs(os[i] - oa[i]) <= 1e-10 * (std::fabs(os[i]) + 1e-12));
      }
    }
  }
}

TEST_CASE("vector exp/log accuracy against libm across the range") {
  if (!have_avx2()) return;
  const Kernels& a = simd::avx2_kernels();
  Rng rng(15);
  // exercised through signed_pow with e = 1 + tiny so the exp/log path runs
  const double e = 1.0 + 1e-14;
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) {
    xs.push_back(std::exp(rng.uniform(std::log(1e-250), std::log(1e250))));
  }
  std::vector<double> out(xs.size());
  a.signed_pow(xs.data(), xs.size(), e, out.data());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ref = std::exp(e * std::log(xs[i]));
    CHECK(std::fabs(out[i] - ref) <= 2e-13 * ref);
  }
}

TEST_CASE("dispatch override") {
  const auto saved = simd::active_level();
  simd::set_level(simd::Level::scalar);
  CHECK(std::string(simd::kernels().name) == "scalar");
  simd::set_level(saved);
}

TEST_CASE("dual step worked example: p=3, w=2, g=3, eta=1") {
  // z = |2|^2 sign(2) - 1*3 = 1, w' = |1|^(1/2) sign(1) = 1
  const double w = 2.0, g = 3.0;
  double out = 0.0;
  simd::scalar_kernels().dual_step(&w, &g, 1, 2.0, 0.5, 1.0, &out);
  CHECK(out == 1.0);
  if (simd::detected_level() == simd::Level::avx2) {
    const double w4[4] = {2.0, 2.0, 2.0, 2.0}, g4[4] = {3.0, 3.0, 3.0, 3.0};
    double o4[4];
    simd::avx2_kernels().dual_step(w4, g4, 4, 2.0, 0.5, 1.0, o4);
    CHECK(o4[0] == 1.0);
  }
}

TEST_CASE("signed_pow handles subnormal magnitudes") {
  if (!have_avx2()) return;
  const Kernels& s = simd::scalar_kernels();
  const Kernels& a = simd::avx2_kernels();
  const std::vector<double> xs = {5e-310, -3e-320, 1e-312, 2.3e-308, -8e-309,
                                  4.9e-324, 1e-300, -1e-305};
  for (double e : {0.1, 0.5, 1.0 / 9.0, 0.9}) {
    std::vector<double> os(xs.size()), oa(xs.size());
    s.signed_pow(xs.data(), xs.size(), e, os.data());
    a.signed_pow(xs.data(), xs.size(), e, oa.data());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(std::fabs(os[i] - oa[i]) <= 1e-11 * std::fabs(os[i]));
    }
  }
}
