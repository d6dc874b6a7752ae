#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "spatchgan/discriminator.hpp"
#include "spatchgan/losses.hpp"

using namespace spatchgan;
using testutil::random_tensor;

namespace {

DisOutputGrid<double> const_grid(int batch, int heads, double value) {
  DisOutputGrid<double> g;
  g.batch = batch;
  g.labels.resize(heads);
  for (int h = 0; h < heads; ++h) g.labels[h].scale = h + 1;
  g.values.assign(static_cast<size_t>(batch) * heads, value);
  return g;
}

std::vector<Tensor4<double>> const_heads(int heads, int batch, double value) {
  std::vector<Tensor4<double>> out;
  for (int h = 0; h < heads; ++h) {
    Tensor4<double> t(batch, 1, 1, 1);
    t.fill(value);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

TEST_CASE("discriminator loss hits zero at its targets") {
  CHECK(d_adversarial_loss(const_grid(4, 12, 1.0), const_grid(4, 12, 0.0)) == 0.0);
}

TEST_CASE("discriminator loss at 0.5 everywhere is 0.5") {
  CHECK_THAT(d_adversarial_loss(const_grid(3, 12, 0.5), const_grid(3, 12, 0.5)),
             Catch::Matchers::WithinAbs(0.5, 1e-6));
}

TEST_CASE("single head, real 0.8 fake 0.3 gives 0.13") {
  CHECK_THAT(d_adversarial_loss(const_grid(2, 1, 0.8), const_grid(2, 1, 0.3)),
             Catch::Matchers::WithinAbs(0.13, 1e-6));
}

TEST_CASE("generator adversarial loss endpoints") {
  CHECK(g_adversarial_loss(const_grid(2, 12, 1.0)) == 0.0);
  CHECK_THAT(g_adversarial_loss(const_grid(2, 12, 0.0)), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(g_adversarial_loss(const_grid(2, 12, 0.5)), Catch::Matchers::WithinAbs(0.25, 1e-6));
}

TEST_CASE("least-squares identity between the two objectives") {
  // For any grid v: the fake half of the D loss, mean(v^2), equals the G loss
  // evaluated on the flipped grid 1 - v.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    DisOutputGrid<double> v = const_grid(3, 5, 0.0);
    for (auto& x : v.values) x = u(rng);
    DisOutputGrid<double> flipped = v;
    for (auto& x : flipped.values) x = 1.0 - x;
    const double fake_half =
        d_adversarial_loss(const_grid(3, 5, 1.0), v);  // real term vanishes at 1
    CHECK_THAT(fake_half, Catch::Matchers::WithinAbs(g_adversarial_loss(flipped), 1e-12));
  }
}

TEST_CASE("losses are non-negative on random grids") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    DisOutputGrid<double> a = const_grid(2, 6, 0.0), b = const_grid(2, 6, 0.0);
    for (auto& x : a.values) x = u(rng);
    for (auto& x : b.values) x = u(rng);
    CHECK(d_adversarial_loss(a, b) >= 0.0);
    CHECK(g_adversarial_loss(a) >= 0.0);
  }
}

TEST_CASE("unequal real and fake batches are rejected") {
  CHECK_THROWS_AS(d_adversarial_loss(const_grid(2, 4, 1.0), const_grid(3, 4, 0.0)), ShapeError);
  auto rh = const_heads(4, 2, 1.0);
  auto fh = const_heads(4, 3, 0.0);
  CHECK_THROWS_AS(d_adversarial_loss_heads(rh, fh), ShapeError);
}

TEST_CASE("head-tensor gradients match finite differences") {
  const double eps = 1e-6;
  auto rh = const_heads(2, 3, 0.0);
  auto fh = const_heads(2, 3, 0.0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.5);
  for (auto& t : rh)
    for (auto& v : t.v) v = u(rng);
  for (auto& t : fh)
    for (auto& v : t.v) v = u(rng);

  std::vector<Tensor4<double>> gr, gf;
  d_adversarial_loss_heads(rh, fh, &gr, &gf);
  for (size_t h = 0; h < rh.size(); ++h)
    for (size_t i = 0; i < rh[h].v.size(); ++i) {
      auto up = rh, dn = rh;
      up[h].v[i] += eps;
      dn[h].v[i] -= eps;
      const double fd =
          (d_adversarial_loss_heads(up, fh) - d_adversarial_loss_heads(dn, fh)) / (2 * eps);
      CHECK_THAT(gr[h].v[i], Catch::Matchers::WithinAbs(fd, 1e-7));
    }

  std::vector<Tensor4<double>> gg;
  g_adversarial_loss_heads(fh, &gg);
  for (size_t h = 0; h < fh.size(); ++h)
    for (size_t i = 0; i < fh[h].v.size(); ++i) {
      auto up = fh, dn = fh;
      up[h].v[i] += eps;
      dn[h].v[i] -= eps;
      const double fd =
          (g_adversarial_loss_heads(up) - g_adversarial_loss_heads(dn)) / (2 * eps);
      CHECK_THAT(gg[h].v[i], Catch::Matchers::WithinAbs(fd, 1e-7));
    }
}

TEST_CASE("cycle loss of zero input against constant half reconstruction") {
  Tensor4<double> x(1, 16, 16, 3);  // all zeros, so the low-res source is zero
  Tensor4<double> gx = random_tensor<double>(1, 16, 16, 3, 19);
  const double loss = weak_cycle_loss_with<double>(x, gx, [](const Tensor4<double>& low) {
    Tensor4<double> r = low;
    r.fill(0.5);
    return r;
  });
  CHECK_THAT(loss, Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("cycle loss ignores detail outside the sampled pixels") {
  Tensor4<double> x = random_tensor<double>(1, 16, 16, 3, 23);
  Tensor4<double> gx = random_tensor<double>(1, 16, 16, 3, 24);
  auto identity = [](const Tensor4<double>& low) { return low; };
  const double base = weak_cycle_loss_with<double>(x, gx, identity);
  // Corner pixels of each 8x8 block never enter the fixed downscale.
  Tensor4<double> perturbed = gx;
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 2; ++bx)
      for (int ch = 0; ch < 3; ++ch) perturbed.at(0, 8 * by, 8 * bx, ch) += 7.5;
  CHECK(weak_cycle_loss_with<double>(x, perturbed, identity) == base);
}

TEST_CASE("identity loss examples") {
  Tensor4<double> a(2, 4, 4, 3), b(2, 4, 4, 3);
  a.fill(-1.0);
  b.fill(1.0);
  CHECK_THAT(identity_loss(a, b), Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK(identity_loss(a, a) == 0.0);

  // Mean symmetry: batch order cannot matter.
  Tensor4<double> x = random_tensor<double>(2, 4, 4, 3, 29);
  Tensor4<double> y = random_tensor<double>(2, 4, 4, 3, 30);
  Tensor4<double> xs(2, 4, 4, 3), ys(2, 4, 4, 3);
  const size_t s = x.sample_stride();
  std::copy(x.v.begin(), x.v.begin() + s, xs.v.begin() + s);
  std::copy(x.v.begin() + s, x.v.end(), xs.v.begin());
  std::copy(y.v.begin(), y.v.begin() + s, ys.v.begin() + s);
  std::copy(y.v.begin() + s, y.v.end(), ys.v.begin());
  CHECK_THAT(identity_loss(x, y), Catch::Matchers::WithinAbs(identity_loss(xs, ys), 1e-12));
}

TEST_CASE("identity loss rejects mismatched shapes") {
  Tensor4<double> a(1, 4, 4, 3), b(1, 4, 8, 3);
  CHECK_THROWS_AS(identity_loss(a, b), ShapeError);
}

TEST_CASE("weighted total recombines components") {
  LossWeights<double> w;  // 4, 20, 10
  LossReport<double> r = total_generator_loss(0.25, 0.1, 0.05, w);
  CHECK_THAT(r.g_total, Catch::Matchers::WithinAbs(3.5, 1e-6));
  CHECK(r.g_adv == 0.25);
  CHECK(r.cyc == 0.1);
  CHECK(r.id == 0.05);

  CHECK(total_generator_loss(0.0, 0.0, 0.0, w).g_total == 0.0);

  LossWeights<double> only_adv{1.0, 0.0, 0.0};
  CHECK(total_generator_loss(0.37, 5.0, 9.0, only_adv).g_total == 0.37);
}

TEST_CASE("negative weights are rejected") {
  LossWeights<double> w{4.0, -1.0, 10.0};
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("l1 gradient sign convention") {
  Tensor4<double> a(1, 1, 1, 3), b(1, 1, 1, 3);
  a.v = {1.0, -2.0, 0.5};
  b.v = {0.0, 0.0, 0.5};
  Tensor4<double> ga, gb;
  const double loss = l1_mean(a, b, &ga, &gb);
  CHECK_THAT(loss, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(ga.v[0] == 1.0 / 3);   // a > b
  CHECK(ga.v[1] == -1.0 / 3);  // a < b
  CHECK(ga.v[2] == 0.0);       // tie contributes no gradient
  for (int i = 0; i < 3; ++i) CHECK(gb.v[i] == -ga.v[i]);
}
