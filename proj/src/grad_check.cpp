#include "dualcube/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dualcube {

namespace {

GradCheckReport compare(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  GradCheckReport r;
  r.coordinates = Index(analytic.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  r.max_rel_error = scale > 0.0 ? r.max_abs_error / scale : 0.0;
  return r;
}

}  // namespace

double grad_check(const std::function<Var(const Var&)>& f, const TensorD& x, double eps) {
  Var input = Var::parameter(x);
  backward(f(input));
  const TensorD analytic = input.grad();

  std::vector<double> a(analytic.data(), analytic.data() + analytic.size());
  std::vector<double> n(a.size());
  NoGradGuard no_grad;
  TensorD probe = x;
  for (Index i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(Var::constant(probe)).item();
    probe[i] = orig - eps;
    const double fm = f(Var::constant(probe)).item();
    probe[i] = orig;
    n[i] = (fp - fm) / (2.0 * eps);
  }
  return compare(a, n).max_rel_error;
}

GradCheckReport grad_check_params(const std::function<Var()>& f, const std::vector<Var>& params, double eps,
                                  Index max_coords, std::uint64_t seed) {
  for (Var p : params) p.zero_grad();
  backward(f());

  std::mt19937_64 rng(seed);
  std::vector<double> a, n;
  NoGradGuard no_grad;
  for (const Var& pc : params) {
    Var p = pc;
    const TensorD g = p.grad();
    std::vector<Index> coords(p.value().size());
    std::iota(coords.begin(), coords.end(), Index(0));
    if (max_coords > 0 && Index(coords.size()) > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (Index i : coords) {
      double& slot = p.mutable_value()[i];
      const double orig = slot;
      slot = orig + eps;
      const double fp = f().item();
      slot = orig - eps;
      const double fm = f().item();
      slot = orig;
      a.push_back(g[i]);
      n.push_back((fp - fm) / (2.0 * eps));
    }
  }
  return compare(a, n);
}

}  // namespace dualcube
