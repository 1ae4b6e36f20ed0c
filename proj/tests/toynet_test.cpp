#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pgd/simd/kernels.hpp"
#include "pgd/synthdata.hpp"
#include "pgd/toynet.hpp"

using namespace pgd;

TEST_CASE("backprop matches central finite differences on a 10-parameter net") {
  // widths {1,3,1}: 3 + 3 weights + 3 + 1 biases = 10 parameters
  const Dataset data = gen_two_moons(3, 12, 0.05);
  // use only the first coordinate via a 1-d dataset
  std::vector<Vec> pts;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    pts.push_back({data.point(i)[0]});
    labels.push_back(data.label(i));
  }
  const Dataset d1(std::move(pts), std::move(labels));

  for (const Loss& loss : {Loss::exponential(), Loss::logistic()}) {
    Mlp net({1, 3, 1}, 17);
    PgdConfig cfg{Potential(2.0), 1e-9, 1, 1};
    cfg.batch_size = d1.size();

    // numerical gradient of the mean loss wrt every weight, via the training
    // step at p=2 (w' = w - eta*g => g = (w - w')/eta)
    ToynetOptions opts;
    opts.min_iters = 1;
    const ToynetResult res = train_toynet(cfg, loss, d1, net, opts);

    auto mean_loss = [&](const Mlp& m) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d1.size(); ++i) {
        acc += loss.value(d1.label(i) * m.forward(d1.point(i)));
      }
      return acc / static_cast<double>(d1.size());
    };

    for (std::size_t l = 0; l < net.layers(); ++l) {
      for (std::size_t k = 0; k < net.layer_weights(l).size(); ++k) {
        const double g =
            (net.layer_weights(l)[k] - res.model.layer_weights(l)[k]) / 1e-9;
        Mlp plus = net, minus = net;
        plus.layer_weights_mut(l)[k] += 1e-6;
        minus.layer_weights_mut(l)[k] -= 1e-6;
        const double fd = (mean_loss(plus) - mean_loss(minus)) / 2e-6;
        CHECK(std::fabs(g - fd) <= 1e-4 * (1.0 + std::fabs(fd)));
      }
    }
  }
}

TEST_CASE("p=2 toynet training equals plain SGD bitwise") {
  const Dataset data = gen_two_moons(123, 60, 0.1);
  const Loss loss = Loss::logistic();
  PgdConfig cfg{Potential(2.0), 0.05, 300, 50};
  cfg.batch_size = 12;
  cfg.seed = 7;
  ToynetOptions opts;
  opts.min_iters = 300;
  const ToynetResult pgd_run = train_toynet(cfg, loss, data, Mlp({2, 8, 1}, 5), opts);

  // reference: same batches (seeded shuffle, sorted), same kernel ops for
  // forward/backward, but the update is the plain SGD rule w <- w - eta*g
  Mlp ref({2, 8, 1}, 5);
  {
    const auto& k = simd::kernels();
    const std::vector<std::size_t> widths{2, 8, 1};
    Rng rng(7);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();
    std::vector<std::size_t> batch;

    std::vector<Vec> acts{Vec(2), Vec(8), Vec(1)};
    std::vector<Vec> pre{Vec(2), Vec(8), Vec(1)};
    std::vector<Vec> delta{Vec(2), Vec(8), Vec(1)};
    std::vector<Vec> gw{Vec(16), Vec(8)};
    std::vector<Vec> gb{Vec(8), Vec(1)};

    auto forward = [&](std::size_t i) {
      const auto x = data.point(i);
      std::copy(x.begin(), x.end(), acts[0].begin());
      for (std::size_t l = 0; l < 2; ++l) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        for (std::size_t r = 0; r < out; ++r) {
          const double z =
              ref.layer_biases(l)[r] + k.dot(ref.layer_weights(l).data() + r * in, acts[l].data(), in);
          pre[l + 1][r] = z;
          acts[l + 1][r] = (l + 1 < 2 && z < 0.0) ? 0.0 : z;
        }
      }
      return acts[2][0];
    };

    for (int t = 0; t < 300; ++t) {
      if (cursor >= order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t take = std::min<std::size_t>(12, order.size() - cursor);
      batch.assign(order.begin() + cursor, order.begin() + cursor + take);
      cursor += take;
      std::sort(batch.begin(), batch.end());

      for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
      for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (std::size_t bi : batch) {
        const double f = forward(bi);
        const double y = data.label(bi);
        delta[2][0] = loss.derivative(y * f) * y * inv;
        for (std::size_t l = 2; l-- > 0;) {
          const std::size_t in = widths[l];
          const std::size_t out = widths[l + 1];
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
            k.axpy(dl[row], ref.layer_weights(l).data() + row * in, dprev.data(), in);
          }
          for (std::size_t c = 0; c < in; ++c) {
            if (pre[l][c] <= 0.0) dprev[c] = 0.0;
          }
        }
      }
      for (std::size_t l = 0; l < 2; ++l) {
        auto& w = ref.layer_weights_mut(l);
        for (std::size_t kk = 0; kk < w.size(); ++kk) w[kk] = w[kk] - 0.05 * gw[l][kk];
        auto& b = ref.layer_biases_mut(l);
        k.axpy(-0.05, gb[l].data(), b.data(), b.size());
      }
    }
  }

  for (std::size_t l = 0; l < 2; ++l) {
    REQUIRE(pgd_run.model.layer_weights(l).size() == ref.layer_weights(l).size());
    for (std::size_t k = 0; k < ref.layer_weights(l).size(); ++k) {
      CHECK(pgd_run.model.layer_weights(l)[k] == ref.layer_weights(l)[k]);
    }
    for (std::size_t k = 0; k < ref.layer_biases(l).size(); ++k) {
      CHECK(pgd_run.model.layer_biases(l)[k] == ref.layer_biases(l)[k]);
    }
  }
}

TEST_CASE("training is seed-deterministic and interpolates two moons") {
  const Dataset data = gen_two_moons(123, 120, 0.1);
  PgdConfig cfg{Potential(2.0), 0.05, 6000, 500};
  cfg.batch_size = 40;
  cfg.seed = 1;
  ToynetOptions opts;
  opts.min_iters = 0;  // stop at first interpolation
  const auto a = train_toynet(cfg, Loss::logistic(), data, Mlp({2, 32, 32, 1}, 1001), opts);
  const auto b = train_toynet(cfg, Loss::logistic(), data, Mlp({2, 32, 32, 1}, 1001), opts);
  CHECK(a.interpolated);
  CHECK(a.model.flat_weights() == b.model.flat_weights());
  CHECK(a.trace.rows.back().margin > 0.0);
}

TEST_CASE("weight histogram basics") {
  Mlp net({2, 4, 1}, 3);
  const WeightHistogram h = weight_histogram(net);
  CHECK(h.counts.size() == 100);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total <= net.weight_count());
  CHECK(total >= net.weight_count() - net.weight_count() / 100);  // 99% mass kept
  CHECK(h.max_abs_weight > 0.0);

  // all-zero model: single spike, near-zero fraction 1
  Mlp zero({2, 4, 1}, 3);
  for (std::size_t l = 0; l < zero.layers(); ++l) {
    auto& w = zero.layer_weights_mut(l);
    std::fill(w.begin(), w.end(), 0.0);
  }
  const WeightHistogram hz = weight_histogram(zero);
  CHECK(hz.near_zero_fraction == 1.0);
  CHECK(hz.max_abs_weight == 0.0);
  std::size_t spikes = 0;
  for (auto c : hz.counts) spikes += c > 0;
  CHECK(spikes == 1);
}

TEST_CASE("histogram trend across p on one seed") {
  const Dataset data = gen_two_moons(123, 200, 0.12);
  auto run_p = [&](double p) {
    PgdConfig cfg{Potential(p), 0.05, 6000, 1000};
    cfg.batch_size = 40;
    cfg.seed = 0;
    ToynetOptions opts;
    opts.min_iters = 6000;
    const auto res = train_toynet(cfg, Loss::logistic(), data, Mlp({2, 32, 32, 1}, 1000), opts);
    return weight_histogram(res.model);
  };
  const auto h11 = run_p(1.1);
  const auto h2 = run_p(2.0);
  const auto h10 = run_p(10.0);
  CHECK(h11.near_zero_fraction > h10.near_zero_fraction);
  CHECK(h11.max_abs_weight > h2.max_abs_weight);
  CHECK(h2.max_abs_weight > h10.max_abs_weight);
}
