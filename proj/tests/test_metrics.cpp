#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "dualcube/metrics.hpp"
#include "dualcube/scene.hpp"
#include "test_support.hpp"

using namespace dualcube;
using dualcube::test::random_tensor;

namespace {

struct Oracle {
  double mae, rmse, rmse_log, d1, d2, d3;
};

Oracle metrics_oracle(const TensorD& p, const TensorD& g, const ValidMask& m, bool natural) {
  double a = 0, s = 0, l = 0;
  double c1 = 0, c2 = 0, c3 = 0, n = 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (!m[i]) continue;
    const double x = p[i] - g[i];
    const double pf = p[i] < 1e-3 ? 1e-3 : p[i];
    const double lg = natural ? std::log(pf / g[i]) : std::log10(pf) - std::log10(g[i]);
    const double r = pf / g[i] > g[i] / pf ? pf / g[i] : g[i] / pf;
    a += std::fabs(x);
    s += x * x;
    l += lg * lg;
    c1 += r < 1.25;
    c2 += r < 1.5625;
    c3 += r < 1.953125;
    n += 1;
  }
  return {a / n, std::sqrt(s / n), std::sqrt(l / n), c1 / n, c2 / n, c3 / n};
}

// Face index of a pixel center from the largest direction component.
int face_of(double u, double v) {
  const double theta = 2 * std::numbers::pi * u - std::numbers::pi;
  const double lat = std::numbers::pi / 2 - std::numbers::pi * v;
  const double d[3] = {std::cos(lat) * std::sin(theta), std::sin(lat), std::cos(lat) * std::cos(theta)};
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::fabs(d[k]) > std::fabs(d[axis])) axis = k;
  }
  return axis * 2 + (d[axis] > 0);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect prediction") {
  std::mt19937_64 rng(1);
  const TensorD g = random_tensor(Shape{1, 1, 8, 16}, rng, 0.5, 5);
  const MetricsReport r = compute_metrics(g, g, ValidMask::all(g.shape()));
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.rmse_log == 0.0);
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.count == 128);
}

TEST_CASE("uniform 1.3 scale falls between the first two thresholds") {
  std::mt19937_64 rng(2);
  const TensorD g = random_tensor(Shape{1, 1, 8, 16}, rng, 0.5, 5);
  TensorD p = g;
  p.array() *= 1.3;
  const MetricsReport r = compute_metrics(p, g, ValidMask::all(g.shape()));
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.rmse_log == doctest::Approx(std::log10(1.3)).epsilon(1e-12));
}

TEST_CASE("agrees with the loop oracle on random 16x8 maps") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.75);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorD g = random_tensor(Shape{1, 1, 8, 16}, rng, 0.2, 8);
    const TensorD p = random_tensor(Shape{1, 1, 8, 16}, rng, -0.5, 8);
    ValidMask m = ValidMask::all(g.shape());
    for (auto& v : m.valid) v = coin(rng);
    m.valid[0] = 1;
    for (bool natural : {false, true}) {
      MetricsOptions o;
      o.natural_log = natural;
      const MetricsReport r = compute_metrics(p, g, m, o);
      const Oracle e = metrics_oracle(p, g, m, natural);
      CHECK(std::fabs(r.mae - e.mae) < 1e-12);
      CHECK(std::fabs(r.rmse - e.rmse) < 1e-12);
      CHECK(std::fabs(r.rmse_log - e.rmse_log) < 1e-12);
      CHECK(std::fabs(r.delta1 - e.d1) < 1e-12);
      CHECK(std::fabs(r.delta2 - e.d2) < 1e-12);
      CHECK(std::fabs(r.delta3 - e.d3) < 1e-12);
      CHECK(r.delta1 <= r.delta2);
      CHECK(r.delta2 <= r.delta3);
      CHECK(r.delta3 <= 1.0);
      CHECK(r.mae <= r.rmse + 1e-15);
    }
  }
}

TEST_CASE("metrics ignore masked-out values and pool across maps") {
  std::mt19937_64 rng(4);
  const Shape s{1, 1, 8, 16};
  const TensorD g = random_tensor(s, rng, 0.5, 5);
  const TensorD p = random_tensor(s, rng, 0.5, 5);
  ValidMask m = ValidMask::all(s);
  for (Index i = 0; i < 40; ++i) m.valid[std::size_t(i)] = 0;
  TensorD q = p;
  for (Index i = 0; i < 40; ++i) q[i] = -1e9;
  const MetricsReport a = compute_metrics(p, g, m);
  const MetricsReport b = compute_metrics(q, g, m);
  CHECK(a.mae == b.mae);
  CHECK(a.rmse_log == b.rmse_log);
  CHECK(a.delta1 == b.delta1);

  MetricsAccumulator acc;
  acc.add(p, g, m);
  acc.add(p, g, m);
  const MetricsReport pooled = acc.report();
  CHECK(pooled.count == 2 * a.count);
  CHECK(pooled.mae == doctest::Approx(a.mae).epsilon(1e-14));
}

TEST_CASE("errors on empty masks and non-positive ground truth") {
  const TensorD g(Shape{1, 1, 4, 8}, 1.0);
  ValidMask none = ValidMask::all(g.shape());
  std::fill(none.valid.begin(), none.valid.end(), 0);
  CHECK_THROWS_AS(compute_metrics(g, g, none), NumericError);
  TensorD bad = g;
  bad[3] = 0.0;
  CHECK_THROWS_AS(compute_metrics(g, bad, ValidMask::all(g.shape())), NumericError);
  CHECK_THROWS_AS(compute_metrics(g, TensorD(Shape{1, 1, 4, 4}, 1.0), ValidMask::all(g.shape())), DimensionError);
}

TEST_CASE("seam pairs match an independent face labelling") {
  for (double phi : {0.0, std::numbers::pi / 4}) {
    const int h = 32;
    const int w = 64;
    std::set<std::pair<Index, Index>> expect;
    const double shift = phi / (2 * std::numbers::pi);
    auto label = [&](int y, int x) {
      double u = (x + 0.5) / w + shift;
      u -= std::floor(u);
      return face_of(u, (y + 0.5) / h);
    };
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int xr = (x + 1) % w;
        if (label(y, x) != label(y, xr)) expect.emplace(Index(y) * w + x, Index(y) * w + xr);
        if (y + 1 < h && label(y, x) != label(y + 1, x)) expect.emplace(Index(y) * w + x, Index(y + 1) * w + x);
      }
    }
    const auto got = seam_pairs(h, w, phi);
    CHECK(std::set<std::pair<Index, Index>>(got.begin(), got.end()) == expect);
  }
}

TEST_CASE("seam jump of a constant map and of a single step") {
  CHECK(seam_jump(TensorD(Shape{1, 1, 32, 64}, 3.0)) == 0.0);

  // Step of h between columns 7 and 8, the F/L edge at longitude -pi/4 for W = 64.
  const int h = 32;
  const int w = 64;
  const double step = 0.5;
  TensorD d(Shape{1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 8; x < w; ++x) d.plane(0, 0)[y * w + x] = step;
  }
  const auto pairs = seam_pairs(h, w);
  long crossing = 0;
  for (const auto& [a, b] : pairs) crossing += (a % w == 7 && b % w == 8);
  CHECK(crossing > 0);
  CHECK(seam_jump(d) == doctest::Approx(step * double(crossing) / double(pairs.size())).epsilon(1e-14));
  // Moving the step off a seam column removes it from the measurement.
  TensorD off(d.shape());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < 4; ++x) off.plane(0, 0)[y * w + x] = 0.0;
    for (int x = 4; x < w; ++x) off.plane(0, 0)[y * w + x] = x < 12 ? step : 0.0;
  }
  CHECK(seam_jump(off) < step * double(crossing) / double(pairs.size()));
}

TEST_CASE("seam jump of a smooth room is at the adjacent-pixel noise floor") {
  SynthScene scene;
  scene.seed = 0;
  scene.wall_albedo.fill(Eigen::Vector3d::Constant(0.5));
  const SceneRender r = synth_scene(scene, 128);
  const Shape& s = r.depth.shape();
  const double* p = r.depth.plane(0, 0);
  // Floor: the same-direction pairs one pixel to either side of each seam pair.
  double floor = 0;
  long n = 0;
  for (const auto& [a, b] : seam_pairs(s.h, s.w)) {
    const int ya = int(a / s.w), xa = int(a % s.w), yb = int(b / s.w), xb = int(b % s.w);
    const int dy = yb - ya;
    const int dx = dy == 0 ? 1 : 0;
    if (ya - dy < 0 || yb + dy >= s.h) continue;
    auto at = [&](int y, int x) { return p[y * s.w + (x + s.w) % s.w]; };
    floor += 0.5 * (std::fabs(at(ya, xa) - at(ya - dy, xa - dx)) + std::fabs(at(yb + dy, xb + dx) - at(yb, xb)));
    ++n;
  }
  CHECK(seam_jump(r.depth) < 1.5 * floor / double(n));
}

TEST_CASE("csv row layout") {
  MetricsReport r;
  r.mae = 0.25;
  r.count = 7;
  CHECK(metrics_csv_header() == "dataset,split,MAE,RMSE,RMSE_log,delta1,delta2,delta3,pixels");
  CHECK(metrics_csv_row("synthetic", "test", r) == "synthetic,test,0.250000,0.000000,0.000000,0.000000,0.000000,0.000000,7");
}

}  // TEST_SUITE
