#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dualcube/grad_check.hpp"
#include "dualcube/losses.hpp"
#include "dualcube/ops.hpp"
#include "dualcube/projector.hpp"
#include "test_support.hpp"

using namespace dualcube;
using dualcube::test::random_tensor;

namespace {

ValidMask random_mask(const Shape& s, std::mt19937_64& rng, double keep = 0.8) {
  std::bernoulli_distribution coin(keep);
  ValidMask m = ValidMask::all(s);
  for (auto& v : m.valid) v = coin(rng);
  return m;
}

// Loop oracle written from the definition, independent of the library's traversal.
double gradient_loss_oracle(const TensorD& p, const TensorD& g, const ValidMask& m) {
  const Shape s = p.shape();
  double total = 0.0;
  long n = 0;
  auto at = [&](const TensorD& t, int b, int c, int y, int x) { return t.plane(b, c)[y * s.w + x]; };
  auto ok = [&](int b, int c, int y, int x) { return m.valid[((std::size_t(b) * s.c + c) * s.h + y) * s.w + x] != 0; };
  for (int b = 0; b < s.n; ++b) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          if (!ok(b, c, y, x)) continue;
          ++n;
          const double r = at(p, b, c, y, x) - at(g, b, c, y, x);
          if (x + 1 < s.w && ok(b, c, y, x + 1)) total += std::fabs(at(p, b, c, y, x + 1) - at(g, b, c, y, x + 1) - r);
          if (y + 1 < s.h && ok(b, c, y + 1, x)) total += std::fabs(at(p, b, c, y + 1, x) - at(g, b, c, y + 1, x) - r);
        }
      }
    }
  }
  return total / double(n);
}

Var constant(const TensorD& t) { return Var::constant(t); }

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("berhu pointwise values") {
  CHECK(berhu_value(0.0, 1.0) == 0.0);
  CHECK(berhu_value(2.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(berhu_value(-2.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(berhu_value(0.5, 1.0) == 0.5);
  CHECK(berhu_value(1.0, 1.0) == 1.0);
}

TEST_CASE("berhu is continuous at the switch point") {
  for (double c : {0.01, 0.2, 1.0, 3.7}) {
    CHECK(berhu_value(c, c) == c);
    for (double eps : {1e-3, 1e-6, 1e-9}) {
      if (eps >= c) continue;
      for (double sgn : {1.0, -1.0}) {
        CHECK(std::fabs(berhu_value(sgn * (c + eps), c) - berhu_value(sgn * c, c)) < 2 * eps);
        CHECK(std::fabs(berhu_value(sgn * (c - eps), c) - berhu_value(sgn * c, c)) < 2 * eps);
        // Unit slope on both sides with no jump: the gap is 2 eps plus the quadratic term.
        CHECK(berhu_value(sgn * (c + eps), c) - berhu_value(sgn * (c - eps), c) ==
              doctest::Approx(2 * eps + eps * eps / (2 * c)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("berhu mean matches direct evaluation") {
  std::mt19937_64 rng(1);
  const Shape s{2, 1, 8, 16};
  const TensorD p = random_tensor(s, rng, 0, 4);
  const TensorD g = random_tensor(s, rng, 0.5, 4);
  const ValidMask m = random_mask(s, rng);
  const double c = 0.7;
  double total = 0.0;
  long n = 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (!m[i]) continue;
    const double x = p[i] - g[i];
    total += std::fabs(x) <= c ? std::fabs(x) : (x * x + c * c) / (2 * c);
    ++n;
  }
  CHECK(std::fabs(berhu(constant(p), g, m, c).item() - total / n) < 1e-12);
  CHECK(berhu(constant(g), g, m, c).item() == 0.0);

  TensorD single(Shape{1, 1, 1, 1}, 3.0);
  CHECK(berhu(constant(single), TensorD(Shape{1, 1, 1, 1}, 1.0), ValidMask::all(single.shape()), 1.0).item() == 2.5);
  CHECK_THROWS_AS(berhu(constant(p), g, m, 0.0), DomainError);
}

TEST_CASE("adaptive switch point is a fifth of the largest valid residual") {
  TensorD p(Shape{1, 1, 1, 3});
  TensorD g(Shape{1, 1, 1, 3});
  p[0] = 1.0;
  p[1] = 5.0;
  p[2] = 100.0;
  g.fill(1.0);
  ValidMask m = ValidMask::all(p.shape());
  m.valid[2] = 0;
  CHECK(adaptive_berhu_threshold(p, g, m) == doctest::Approx(0.8));
  CHECK(adaptive_berhu_threshold(g, g, m) > 0.0);
}

TEST_CASE("gradient loss matches the loop oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Shape s{2, 1, 8, 16};
    const TensorD p = random_tensor(s, rng, 0, 4);
    const TensorD g = random_tensor(s, rng, 0.5, 4);
    const ValidMask m = random_mask(s, rng, 0.7);
    CHECK(std::fabs(gradient_loss(constant(p), g, m).item() - gradient_loss_oracle(p, g, m)) < 1e-12);
  }
}

TEST_CASE("gradient loss on a ramp and under a constant offset") {
  const int h = 8;
  const int w = 16;
  const double slope = 0.3;
  TensorD ramp(Shape{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) ramp.plane(0, 0)[y * w + x] = slope * x;
  }
  const TensorD zero(ramp.shape());
  const ValidMask all = ValidMask::all(ramp.shape());
  // (W - 1) forward differences of size s per row, normalized by H * W pixels.
  CHECK(gradient_loss(constant(ramp), zero, all).item() == doctest::Approx(slope * (w - 1) / w).epsilon(1e-14));
  TensorD shifted = ramp;
  shifted.array() += 1.75;
  CHECK(gradient_loss(constant(shifted), ramp, all).item() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(gradient_loss(constant(ramp), ramp, all).item() == 0.0);
}

TEST_CASE("empty masks and shape mismatches are rejected") {
  const TensorD p(Shape{1, 1, 4, 8});
  ValidMask none = ValidMask::all(p.shape());
  std::fill(none.valid.begin(), none.valid.end(), 0);
  CHECK_THROWS_AS(berhu(constant(p), p, none, 1.0), NumericError);
  CHECK_THROWS_AS(gradient_loss(constant(p), p, none), NumericError);
  CHECK_THROWS_AS(gradient_loss(constant(p), TensorD(Shape{1, 1, 4, 4}), ValidMask::all(p.shape())), DimensionError);
}

TEST_CASE("loss terms ignore values at invalid pixels") {
  std::mt19937_64 rng(3);
  const Shape s{1, 1, 16, 32};
  const TensorD g = random_tensor(s, rng, 0.5, 4);
  const ValidMask m = random_mask(s, rng, 0.6);
  const TensorD p = random_tensor(s, rng, 0, 4);
  TensorD q = p;
  for (Index i = 0; i < q.size(); ++i) {
    if (!m[i]) q[i] = 1e6;
  }
  CHECK(berhu(constant(p), g, m, 0.5).item() == berhu(constant(q), g, m, 0.5).item());
  CHECK(gradient_loss(constant(p), g, m).item() == gradient_loss(constant(q), g, m).item());
  const LossTerms a = total_loss_equi(constant(p), constant(p), constant(p), g, m, {});
  const LossTerms b = total_loss_equi(constant(q), constant(q), constant(q), g, m, {});
  CHECK(a.total.item() == b.total.item());
}

TEST_CASE("total loss composition and defaults") {
  const LossWeights w;
  CHECK(w.branch1 == 0.1);
  CHECK(w.branch2 == 0.1);
  CHECK(w.final_depth == 0.8);
  CHECK(w.gradient == 1.0);

  std::mt19937_64 rng(4);
  const Shape s{1, 1, 16, 32};
  const TensorD g = random_tensor(s, rng, 0.5, 4);
  const TensorD p1 = random_tensor(s, rng, 0.5, 4);
  const TensorD p2 = random_tensor(s, rng, 0.5, 4);
  const TensorD pf = random_tensor(s, rng, 0.5, 4);
  const ValidMask m = random_mask(s, rng);

  const LossTerms t = total_loss_equi(constant(p1), constant(p2), constant(pf), g, m, w, 0.4);
  const double expect = 0.1 * berhu(constant(p1), g, m, 0.4).item() + 0.1 * berhu(constant(p2), g, m, 0.4).item() +
                        0.8 * berhu(constant(pf), g, m, 0.4).item() + gradient_loss(constant(pf), g, m).item();
  CHECK(t.total.item() == doctest::Approx(expect).epsilon(1e-14));
  CHECK(t.berhu1 >= 0);
  CHECK(t.berhu2 >= 0);
  CHECK(t.berhu_final >= 0);
  CHECK(t.gradient >= 0);
  CHECK(t.has_branch2);

  const LossTerms perfect = total_loss_equi(constant(g), constant(g), constant(g), g, m, w);
  CHECK(perfect.total.item() == 0.0);

  const LossTerms only_grad = total_loss_equi(constant(p1), constant(p2), constant(pf), g, m, {0, 0, 0, 1});
  CHECK(only_grad.total.item() == doctest::Approx(gradient_loss(constant(pf), g, m).item()).epsilon(1e-15));

  const LossTerms single = total_loss_equi(constant(p1), Var(), constant(pf), g, m, w, 0.4);
  CHECK_FALSE(single.has_branch2);
  CHECK(single.total.item() == doctest::Approx(expect - 0.1 * t.berhu2).epsilon(1e-14));
  CHECK_THROWS_AS(total_loss_equi(constant(p1), Var(), constant(pf), g, m, {-1, 0, 0, 0}), ConfigError);
}

TEST_CASE("loss gradients pass finite-difference checks") {
  std::mt19937_64 rng(5);
  const Shape s{1, 1, 8, 16};
  const TensorD g = random_tensor(s, rng, 1, 3);
  const ValidMask m = random_mask(s, rng);
  const double c = 0.5;
  // Residual magnitudes well away from the switch point and from zero.
  TensorD p = g;
  std::bernoulli_distribution side(0.5);
  std::uniform_real_distribution<double> small(0.1, 0.4);
  std::uniform_real_distribution<double> large(0.6, 1.5);
  for (Index i = 0; i < p.size(); ++i) p[i] += (side(rng) ? small(rng) : large(rng)) * (side(rng) ? 1 : -1);
  CHECK(grad_check([&](const Var& x) { return berhu(x, g, m, c); }, p, 1e-6) < 1e-4);

  // Gradient loss: generic random residuals avoid exact ties between neighbours.
  const TensorD q = random_tensor(s, rng, 0, 4);
  CHECK(grad_check([&](const Var& x) { return gradient_loss(x, g, m); }, q, 1e-7) < 1e-4);
}

TEST_CASE("composite loss gradient through the cube projections") {
  std::mt19937_64 rng(6);
  const int w = 64;
  const TensorD g = random_tensor(Shape{1, 1, w / 2, w}, rng, 1, 3);
  const ValidMask m = random_mask(g.shape(), rng);
  const TensorD c1 = random_tensor(Shape{6, 1, w / 4, w / 4}, rng, 1, 3);
  const TensorD c2 = random_tensor(Shape{6, 1, w / 4, w / 4}, rng, 1, 3);
  const TensorD f = random_tensor(g.shape(), rng, 1, 3);
  const double phi = std::numbers::pi / 4;
  CHECK(grad_check([&](const Var& x) { return total_loss(x, constant(c2), phi, constant(f), g, m, {}, 5.0).total; },
                   c1, 1e-6) < 1e-3);
  CHECK(grad_check([&](const Var& x) { return total_loss(constant(c1), x, phi, constant(f), g, m, {}, 5.0).total; },
                   c2, 1e-6) < 1e-3);
  CHECK(grad_check([&](const Var& x) { return total_loss(constant(c1), constant(c2), phi, x, g, m, {}, 5.0).total; },
                   f, 1e-7) < 1e-3);
}

}  // TEST_SUITE
