#include "dualcube/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace dualcube {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

struct ConvGeom {
  int channels, h, w;  // image side
  int k, stride, pad;
  int oh, ow;          // column side
  Index rows() const { return Index(oh) * ow; }
  Index cols() const { return Index(channels) * k * k; }
};

ConvGeom conv_geom(int channels, int h, int w, int k, int stride, int pad) {
  if (k <= 0 || stride <= 0 || pad < 0) throw DimensionError("conv: invalid kernel/stride/pad");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  if (h + 2 * pad < k || w + 2 * pad < k || oh <= 0 || ow <= 0) {
    throw DimensionError("conv: kernel larger than padded input");
  }
  return {channels, h, w, k, stride, pad, oh, ow};
}

// Output columns [lo, hi) whose tap kx lands inside the image.
std::pair<int, int> valid_columns(const ConvGeom& g, int kx) {
  // ix = ox * stride - pad + kx must lie in [0, w).
  const int first = g.pad - kx;
  int lo = first <= 0 ? 0 : (first + g.stride - 1) / g.stride;
  int hi = (g.w - 1 + g.pad - kx) < 0 ? 0 : (g.w - 1 + g.pad - kx) / g.stride + 1;
  lo = std::min(lo, g.ow);
  hi = std::clamp(hi, lo, g.ow);
  return {lo, hi};
}

// Column-major (oh*ow) x (channels*k*k) patch matrix.
void im2col(const double* img, const ConvGeom& g, double* cols) {
  const Index rows = g.rows();
  for (int c = 0; c < g.channels; ++c) {
    const double* plane = img + Index(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        double* col = cols + (Index(c * g.k + ky) * g.k + kx) * rows;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = col + Index(oy) * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = plane + Index(iy) * g.w;
          const auto [lo, hi] = valid_columns(g, kx);
          std::fill(dst, dst + lo, 0.0);
          const int x0 = lo * g.stride - g.pad + kx;
          if (g.stride == 1) {
            std::copy(src + x0, src + x0 + (hi - lo), dst + lo);
          } else {
            for (int ox = lo, ix = x0; ox < hi; ++ox, ix += g.stride) dst[ox] = src[ix];
          }
          std::fill(dst + hi, dst + g.ow, 0.0);
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeom& g, double* img) {
  const Index rows = g.rows();
  for (int c = 0; c < g.channels; ++c) {
    double* plane = img + Index(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const double* col = cols + (Index(c * g.k + ky) * g.k + kx) * rows;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const double* src = col + Index(oy) * g.ow;
          double* dst = plane + Index(iy) * g.w;
          const auto [lo, hi] = valid_columns(g, kx);
          for (int ox = lo, ix = lo * g.stride - g.pad + kx; ox < hi; ++ox, ix += g.stride) dst[ix] += src[ox];
        }
      }
    }
  }
}

void check_bias(const Var& bias, int channels, const char* op) {
  if (!bias.defined()) return;
  const Shape& b = bias.shape();
  if (b.numel() != channels) throw DimensionError(std::string(op) + ": bias has " + b.str());
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  TensorD out(a.shape(), Eigen::ArrayXd(a.value().array() + b.value().array()));
  auto na = a.node(), nb = b.node();
  return make_result(std::move(out), {a, b}, [na, nb](const TensorD& g) {
    accumulate_grad(na, g);
    accumulate_grad(nb, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  TensorD out(a.shape(), Eigen::ArrayXd(a.value().array() - b.value().array()));
  auto na = a.node(), nb = b.node();
  return make_result(std::move(out), {a, b}, [na, nb](const TensorD& g) {
    accumulate_grad(na, g);
    if (nb->requires_grad) grad_buffer_of(nb).array() -= g.array();
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same(a, b, "hadamard");
  TensorD out(a.shape(), Eigen::ArrayXd(a.value().array() * b.value().array()));
  auto na = a.node(), nb = b.node();
  return make_result(std::move(out), {a, b}, [na, nb](const TensorD& g) {
    if (na->requires_grad) grad_buffer_of(na).array() += g.array() * nb->value.array();
    if (nb->requires_grad) grad_buffer_of(nb).array() += g.array() * na->value.array();
  });
}

Var scale(const Var& a, double s) {
  TensorD out(a.shape(), Eigen::ArrayXd(a.value().array() * s));
  auto na = a.node();
  return make_result(std::move(out), {a}, [na, s](const TensorD& g) {
    if (na->requires_grad) grad_buffer_of(na).array() += g.array() * s;
  });
}

Var relu(const Var& a) {
  TensorD out(a.shape(), Eigen::ArrayXd(a.value().array().max(0.0)));
  auto na = a.node();
  return make_result(std::move(out), {a}, [na](const TensorD& g) {
    if (!na->requires_grad) return;
    grad_buffer_of(na).array() += (na->value.array() > 0.0).select(g.array(), 0.0);
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  Shape s = parts[0].shape();
  s.c = 0;
  for (const Var& p : parts) {
    const Shape& ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      throw DimensionError("concat_channels: extent mismatch " + ps.str());
    }
    s.c += ps.c;
  }
  TensorD out(s);
  const Index hw = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const Var& p : parts) {
      const Index len = Index(p.shape().c) * hw;
      std::copy_n(p.value().plane(n, 0), len, out.plane(n, c0));
      c0 += p.shape().c;
    }
  }
  std::vector<std::shared_ptr<detail::Node>> nodes;
  for (const Var& p : parts) nodes.push_back(p.node());
  return make_result(std::move(out), parts, [nodes, s, hw](const TensorD& g) {
    for (int n = 0; n < s.n; ++n) {
      int c0 = 0;
      for (const auto& node : nodes) {
        const int pc = node->value.shape().c;
        if (node->requires_grad) {
          TensorD& buf = grad_buffer_of(node);
          Eigen::Map<Eigen::ArrayXd>(buf.plane(n, 0), Index(pc) * hw) +=
              Eigen::Map<const Eigen::ArrayXd>(g.plane(n, c0), Index(pc) * hw);
        }
        c0 += pc;
      }
    }
  });
}

Var sum(const Var& a) {
  TensorD out(Shape{1, 1, 1, 1}, a.value().array().sum());
  auto na = a.node();
  return make_result(std::move(out), {a}, [na](const TensorD& g) {
    if (na->requires_grad) grad_buffer_of(na).array() += g[0];
  });
}

Var mean(const Var& a) {
  const Index count = a.value().size();
  if (count == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / double(count));
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.h != ws.w || ws.c != xs.c) {
    throw DimensionError("conv2d: weight " + ws.str() + " does not fit input " + xs.str());
  }
  check_bias(bias, ws.n, "conv2d");
  const ConvGeom g = conv_geom(xs.c, xs.h, xs.w, ws.h, stride, pad);
  const int cout = ws.n;
  TensorD out(Shape{xs.n, cout, g.oh, g.ow});
  Eigen::MatrixXd cols(g.rows(), g.cols());
  const ConstMatMap wm(weight.value().data(), g.cols(), cout);
  for (int n = 0; n < xs.n; ++n) {
    im2col(x.value().plane(n, 0), g, cols.data());
    MatMap o(out.plane(n, 0), g.rows(), cout);
    o.noalias() = cols * wm;
    if (bias.defined()) {
      o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), cout);
    }
  }
  auto nx = x.node(), nw = weight.node();
  auto nb = bias.defined() ? bias.node() : nullptr;
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [nx, nw, nb, g, cout](const TensorD& grad) {
    const int batch = nx->value.shape().n;
    Eigen::MatrixXd cols(g.rows(), g.cols());
    Eigen::MatrixXd dcols;
    const ConstMatMap wm(nw->value.data(), g.cols(), cout);
    for (int n = 0; n < batch; ++n) {
      const ConstMatMap go(grad.plane(n, 0), g.rows(), cout);
      if (nw->requires_grad) {
        im2col(nx->value.plane(n, 0), g, cols.data());
        MatMap(grad_buffer_of(nw).data(), g.cols(), cout).noalias() += cols.transpose() * go;
      }
      if (nb && nb->requires_grad) {
        Eigen::Map<Eigen::RowVectorXd>(grad_buffer_of(nb).data(), cout) += go.colwise().sum();
      }
      if (nx->requires_grad) {
        dcols.noalias() = go * wm.transpose();
        col2im(dcols.data(), g, grad_buffer_of(nx).plane(n, 0));
      }
    }
  });
}

Var deconv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.h != ws.w || ws.n != xs.c) {
    throw DimensionError("deconv2d: weight " + ws.str() + " does not fit input " + xs.str());
  }
  const int cout = ws.c;
  const int k = ws.h;
  check_bias(bias, cout, "deconv2d");
  const int oh = (xs.h - 1) * stride - 2 * pad + k;
  const int ow = (xs.w - 1) * stride - 2 * pad + k;
  if (oh <= 0 || ow <= 0) throw DimensionError("deconv2d: empty output");
  // Geometry of the adjoint convolution, which maps (cout, oh, ow) back to the input.
  const ConvGeom g = conv_geom(cout, oh, ow, k, stride, pad);
  if (g.oh != xs.h || g.ow != xs.w) throw DimensionError("deconv2d: stride/pad do not invert");
  TensorD out(Shape{xs.n, cout, oh, ow});
  Eigen::MatrixXd dcols(g.rows(), g.cols());
  const ConstMatMap wm(weight.value().data(), g.cols(), xs.c);
  for (int n = 0; n < xs.n; ++n) {
    const ConstMatMap xm(x.value().plane(n, 0), g.rows(), xs.c);
    dcols.noalias() = xm * wm.transpose();
    col2im(dcols.data(), g, out.plane(n, 0));
    if (bias.defined()) {
      for (int c = 0; c < cout; ++c) {
        Eigen::Map<Eigen::ArrayXd>(out.plane(n, c), Index(oh) * ow) += bias.value()[c];
      }
    }
  }
  auto nx = x.node(), nw = weight.node();
  auto nb = bias.defined() ? bias.node() : nullptr;
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  const int cin = xs.c;
  return make_result(std::move(out), std::move(inputs), [nx, nw, nb, g, cin, cout](const TensorD& grad) {
    const int batch = nx->value.shape().n;
    Eigen::MatrixXd cols(g.rows(), g.cols());
    const ConstMatMap wm(nw->value.data(), g.cols(), cin);
    const Index out_hw = Index(g.h) * g.w;
    for (int n = 0; n < batch; ++n) {
      im2col(grad.plane(n, 0), g, cols.data());
      if (nx->requires_grad) {
        MatMap(grad_buffer_of(nx).plane(n, 0), g.rows(), cin).noalias() += cols * wm;
      }
      if (nw->requires_grad) {
        const ConstMatMap xm(nx->value.plane(n, 0), g.rows(), cin);
        MatMap(grad_buffer_of(nw).data(), g.cols(), cin).noalias() += cols.transpose() * xm;
      }
      if (nb && nb->requires_grad) {
        TensorD& db = grad_buffer_of(nb);
        for (int c = 0; c < cout; ++c) {
          db[c] += Eigen::Map<const Eigen::ArrayXd>(grad.plane(n, c), out_hw).sum();
        }
      }
    }
  });
}

Var maxpool2d(const Var& x, int window, int stride) {
  const Shape& s = x.shape();
  if (window <= 0 || stride <= 0 || s.h % stride != 0 || s.w % stride != 0 || s.h < window || s.w < window) {
    throw DimensionError("maxpool2d: extent " + s.str() + " not divisible by stride " + std::to_string(stride));
  }
  const int oh = (s.h - window) / stride + 1;
  const int ow = (s.w - window) / stride + 1;
  TensorD out(Shape{s.n, s.c, oh, ow});
  auto argmax = std::make_shared<std::vector<Index>>(out.size());
  Index k = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      const Index base = x.value().offset(n, c, 0, 0);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++k) {
          Index best = Index(oy * stride) * s.w + ox * stride;
          double best_v = in[best];
          for (int dy = 0; dy < window; ++dy) {
            for (int dx = 0; dx < window; ++dx) {
              const Index at = Index(oy * stride + dy) * s.w + ox * stride + dx;
              if (in[at] > best_v) {
                best_v = in[at];
                best = at;
              }
            }
          }
          out[k] = best_v;
          (*argmax)[k] = base + best;
        }
      }
    }
  }
  auto nx = x.node();
  return make_result(std::move(out), {x}, [nx, argmax](const TensorD& g) {
    if (!nx->requires_grad) return;
    TensorD& buf = grad_buffer_of(nx);
    for (Index i = 0; i < g.size(); ++i) buf[(*argmax)[i]] += g[i];
  });
}

Var upsample_nearest(const Var& x, int factor) {
  const Shape& s = x.shape();
  if (factor <= 0) throw DimensionError("upsample_nearest: factor must be positive");
  const Shape os{s.n, s.c, s.h * factor, s.w * factor};
  TensorD out(os);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (int y = 0; y < os.h; ++y) {
        const double* row = in + Index(y / factor) * s.w;
        for (int xo = 0; xo < os.w; ++xo) o[Index(y) * os.w + xo] = row[xo / factor];
      }
    }
  }
  auto nx = x.node();
  return make_result(std::move(out), {x}, [nx, s, os, factor](const TensorD& g) {
    if (!nx->requires_grad) return;
    TensorD& buf = grad_buffer_of(nx);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        double* b = buf.plane(n, c);
        const double* gp = g.plane(n, c);
        for (int y = 0; y < os.h; ++y) {
          double* row = b + Index(y / factor) * s.w;
          for (int xo = 0; xo < os.w; ++xo) row[xo / factor] += gp[Index(y) * os.w + xo];
        }
      }
    }
  });
}

Var resample(const Var& x, std::shared_ptr<const TapTable> taps) {
  TensorD out = resample(x.value(), *taps);
  auto nx = x.node();
  return make_result(std::move(out), {x}, [nx, taps](const TensorD& g) {
    if (nx->requires_grad) resample_backward(*taps, g, grad_buffer_of(nx));
  });
}

Var roll_columns(const Var& x, int shift) {
  TensorD out = roll_columns(x.value(), shift);
  auto nx = x.node();
  return make_result(std::move(out), {x}, [nx, shift](const TensorD& g) {
    if (nx->requires_grad) grad_buffer_of(nx).array() += roll_columns(g, -shift).array();
  });
}

}  // namespace dualcube
