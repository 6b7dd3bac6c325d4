#include "dualcube/losses.hpp"

#include <cmath>

#include "dualcube/ops.hpp"
#include "dualcube/projector.hpp"

namespace dualcube {

ValidMask stack_masks(const std::vector<const ValidMask*>& parts) {
  ValidMask out;
  if (parts.empty()) return out;
  out.shape = parts[0]->shape;
  out.shape.n = 0;
  for (const ValidMask* m : parts) {
    if (m->shape.c != out.shape.c || m->shape.h != out.shape.h || m->shape.w != out.shape.w) {
      throw DimensionError("stack_masks: extent mismatch");
    }
    out.shape.n += m->shape.n;
    out.valid.insert(out.valid.end(), m->valid.begin(), m->valid.end());
  }
  return out;
}

namespace {

Index check_inputs(const Shape& pred, const TensorD& gt, const ValidMask& mask, const char* op) {
  if (pred != gt.shape() || mask.shape != pred) {
    throw DimensionError(std::string(op) + ": prediction " + pred.str() + ", ground truth " + gt.shape().str() +
                         " and mask " + mask.shape.str() + " disagree");
  }
  const Index n = mask.count();
  if (n == 0) throw NumericError(std::string(op) + ": empty valid mask");
  return n;
}

double sign(double x) { return double(x > 0) - double(x < 0); }

}  // namespace

double berhu_value(double x, double c) {
  const double a = std::abs(x);
  return a <= c ? a : (x * x + c * c) / (2.0 * c);
}

Var berhu(const Var& pred, const TensorD& gt, const ValidMask& mask, double c) {
  if (!(c > 0.0)) throw DomainError("berhu: switch point c must be positive");
  const Index n = check_inputs(pred.shape(), gt, mask, "berhu");
  const TensorD& p = pred.value();
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (mask[i]) total += berhu_value(p[i] - gt[i], c);
  }
  auto np = pred.node();
  auto gt_copy = std::make_shared<const TensorD>(gt);
  auto mask_copy = std::make_shared<const ValidMask>(mask);
  return make_result(TensorD(Shape{1, 1, 1, 1}, total / double(n)), {pred},
                     [np, gt_copy, mask_copy, c, n](const TensorD& g) {
                       if (!np->requires_grad) return;
                       TensorD& buf = grad_buffer_of(np);
                       const double scale = g[0] / double(n);
                       for (Index i = 0; i < buf.size(); ++i) {
                         if (!(*mask_copy)[i]) continue;
                         const double x = np->value[i] - (*gt_copy)[i];
                         buf[i] += scale * (std::abs(x) <= c ? sign(x) : x / c);
                       }
                     });
}

double adaptive_berhu_threshold(const TensorD& pred, const TensorD& gt, const ValidMask& mask) {
  check_inputs(pred.shape(), gt, mask, "adaptive_berhu_threshold");
  double m = 0.0;
  for (Index i = 0; i < pred.size(); ++i) {
    if (mask[i]) m = std::max(m, std::abs(pred[i] - gt[i]));
  }
  // A perfect prediction leaves every residual on the linear side for any c.
  return m > 0.0 ? 0.2 * m : 1.0;
}

Var gradient_loss(const Var& pred, const TensorD& gt, const ValidMask& mask) {
  const Index n = check_inputs(pred.shape(), gt, mask, "gradient_loss");
  const Shape s = pred.shape();
  const TensorD& p = pred.value();
  double total = 0.0;
  const Index planes = Index(s.n) * s.c;
  for (Index q = 0; q < planes; ++q) {
    const Index base = q * s.plane();
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const Index i = base + Index(y) * s.w + x;
        if (!mask[i]) continue;
        const double r = p[i] - gt[i];
        if (x + 1 < s.w && mask[i + 1]) total += std::abs(p[i + 1] - gt[i + 1] - r);
        if (y + 1 < s.h && mask[i + s.w]) total += std::abs(p[i + s.w] - gt[i + s.w] - r);
      }
    }
  }
  auto np = pred.node();
  auto gt_copy = std::make_shared<const TensorD>(gt);
  auto mask_copy = std::make_shared<const ValidMask>(mask);
  return make_result(
      TensorD(Shape{1, 1, 1, 1}, total / double(n)), {pred}, [np, gt_copy, mask_copy, s, n, planes](const TensorD& g) {
        if (!np->requires_grad) return;
        TensorD& buf = grad_buffer_of(np);
        const TensorD& p = np->value;
        const TensorD& t = *gt_copy;
        const ValidMask& m = *mask_copy;
        const double scale = g[0] / double(n);
        for (Index q = 0; q < planes; ++q) {
          const Index base = q * s.plane();
          for (int y = 0; y < s.h; ++y) {
            for (int x = 0; x < s.w; ++x) {
              const Index i = base + Index(y) * s.w + x;
              if (!m[i]) continue;
              const double r = p[i] - t[i];
              if (x + 1 < s.w && m[i + 1]) {
                const double d = sign(p[i + 1] - t[i + 1] - r) * scale;
                buf[i + 1] += d;
                buf[i] -= d;
              }
              if (y + 1 < s.h && m[i + s.w]) {
                const double d = sign(p[i + s.w] - t[i + s.w] - r) * scale;
                buf[i + s.w] += d;
                buf[i] -= d;
              }
            }
          }
        }
      });
}

LossTerms total_loss_equi(const Var& d1_equi, const Var& d2_equi, const Var& final_depth, const TensorD& gt,
                          const ValidMask& mask, const LossWeights& weights, std::optional<double> c) {
  if (weights.branch1 < 0 || weights.branch2 < 0 || weights.final_depth < 0 || weights.gradient < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  auto switch_point = [&](const Var& pred) {
    return c ? *c : adaptive_berhu_threshold(pred.value(), gt, mask);
  };
  LossTerms t;
  const Var b1 = berhu(d1_equi, gt, mask, switch_point(d1_equi));
  const Var bf = berhu(final_depth, gt, mask, switch_point(final_depth));
  const Var gl = gradient_loss(final_depth, gt, mask);
  t.berhu1 = b1.item();
  t.berhu_final = bf.item();
  t.gradient = gl.item();
  Var total = add(scale(b1, weights.branch1), scale(bf, weights.final_depth));
  if (d2_equi.defined()) {
    const Var b2 = berhu(d2_equi, gt, mask, switch_point(d2_equi));
    t.berhu2 = b2.item();
    t.has_branch2 = true;
    total = add(total, scale(b2, weights.branch2));
  }
  if (weights.gradient != 0.0) total = add(total, scale(gl, weights.gradient));
  t.total = total;
  return t;
}

LossTerms total_loss(const Var& d1_cube, const Var& d2_cube, double phi, const Var& final_depth, const TensorD& gt,
                     const ValidMask& mask, const LossWeights& weights, std::optional<double> c) {
  const int width = gt.shape().w;
  const Var d1 = to_equi(d1_cube, width);
  const Var d2 = d2_cube.defined() ? unrotate(to_equi(d2_cube, width), phi) : Var();
  return total_loss_equi(d1, d2, final_depth, gt, mask, weights, c);
}

}  // namespace dualcube
