#include "dualcube/sphere_geom.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "binio.hpp"

namespace dualcube {

namespace {

constexpr std::uint32_t kGridVersion = 1;
constexpr double kSnap = 1e-9;

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < kSnap ? r : x;
}

void require_equirect(const Layout& l, const char* what) {
  if (l.planes != 1 || l.rows <= 0 || l.cols != 2 * l.rows) {
    throw DimensionError(std::string(what) + ": equirect layout needs H = W/2, got " + l.str());
  }
}

void require_cube(const Layout& l, const char* what) {
  if (l.planes != kFaceCount || l.rows <= 0 || l.rows != l.cols) {
    throw DimensionError(std::string(what) + ": cube layout needs six square faces, got " + l.str());
  }
}

double wrap(double x, int period) {
  double r = std::fmod(x, double(period));
  if (r < 0) r += period;
  if (r >= period) r -= period;
  return r;
}

}  // namespace

const char* face_name(Face f) {
  static constexpr const char* names[] = {"front", "right", "back", "left", "up", "down"};
  const int id = static_cast<int>(f);
  return id >= 0 && id < kFaceCount ? names[id] : "invalid";
}

std::string Layout::str() const {
  return std::to_string(planes) + "x" + std::to_string(rows) + "x" + std::to_string(cols);
}

Rotation Rotation::radians(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double p = std::fmod(phi, two_pi);
  if (p < 0) p += two_pi;
  if (p >= two_pi) p -= two_pi;
  return {p};
}

SamplingGrid build_grid(GridKind kind, Layout src, Layout dst, Rotation rotation) {
  SamplingGrid g;
  g.kind = kind;
  g.src = src;
  g.dst = dst;
  switch (kind) {
    case GridKind::EquiToCube:
      require_equirect(src, "build_grid");
      require_cube(dst, "build_grid");
      g.wrap_cols = true;
      break;
    case GridKind::CubeToEqui:
      require_cube(src, "build_grid");
      require_equirect(dst, "build_grid");
      break;
    case GridKind::Rotate:
      require_equirect(src, "build_grid");
      if (!(dst == src)) throw DimensionError("build_grid: rotation keeps the layout");
      g.wrap_cols = true;
      break;
  }

  const Index count = dst.per_sample();
  g.plane.resize(count);
  g.row.resize(count);
  g.col.resize(count);
  g.valid.assign(count, 1);

  const double shift = rotation.phi / (2.0 * std::numbers::pi) * src.cols;
  Index k = 0;
  for (int p = 0; p < dst.planes; ++p) {
    for (int i = 0; i < dst.rows; ++i) {
      for (int j = 0; j < dst.cols; ++j, ++k) {
        double row = 0, col = 0;
        int plane = 0;
        if (kind == GridKind::EquiToCube) {
          const double s = (j + 0.5) / dst.cols;
          const double t = (i + 0.5) / dst.rows;
          const Vec2<double> uv = direction_to_pixel(cube_to_direction(p, s, t));
          row = uv.y() * src.rows - 0.5;
          col = uv.x() * src.cols - 0.5;
        } else if (kind == GridKind::CubeToEqui) {
          const double u = (j + 0.5) / dst.cols;
          const double v = (i + 0.5) / dst.rows;
          const CubeCoord<double> cc = direction_to_cube(pixel_to_direction(u, v));
          plane = static_cast<int>(cc.face);
          row = cc.t * src.rows - 0.5;
          col = cc.s * src.cols - 0.5;
        } else {
          row = i;
          col = j - shift;
        }
        row = std::clamp(snap(row), 0.0, double(src.rows - 1));
        col = g.wrap_cols ? wrap(snap(col), src.cols) : std::clamp(snap(col), 0.0, double(src.cols - 1));
        g.plane[k] = plane;
        g.row[k] = row;
        g.col[k] = snap(col);
      }
    }
  }
  return g;
}

TapTable make_taps(const SamplingGrid& grid, Interp mode) {
  TapTable t;
  t.src = grid.src;
  t.dst = grid.dst;
  const Index count = grid.size();
  t.index.assign(count, {0, 0, 0, 0});
  t.weight.assign(count, {0, 0, 0, 0});
  t.valid = grid.valid;
  const int rows = grid.src.rows;
  const int cols = grid.src.cols;
  const Index hw = Index(rows) * cols;
  for (Index k = 0; k < count; ++k) {
    if (!grid.valid[k]) continue;
    const Index base = grid.plane[k] * hw;
    const double y = grid.row[k];
    const double x = grid.col[k];
    if (mode == Interp::Nearest) {
      const int yi = std::clamp(int(std::floor(y + 0.5)), 0, rows - 1);
      int xi = int(std::floor(x + 0.5));
      xi = grid.wrap_cols ? ((xi % cols) + cols) % cols : std::clamp(xi, 0, cols - 1);
      const auto idx = std::int32_t(base + Index(yi) * cols + xi);
      t.index[k] = {idx, idx, idx, idx};
      t.weight[k] = {1.0, 0.0, 0.0, 0.0};
      continue;
    }
    const int y0 = std::clamp(int(std::floor(y)), 0, rows - 1);
    const int y1 = std::min(y0 + 1, rows - 1);
    const double fy = y - y0;
    int x0 = int(std::floor(x));
    int x1 = x0 + 1;
    const double fx = x - x0;
    if (grid.wrap_cols) {
      x0 = ((x0 % cols) + cols) % cols;
      x1 = ((x1 % cols) + cols) % cols;
    } else {
      x0 = std::clamp(x0, 0, cols - 1);
      x1 = std::min(x0 + 1, cols - 1);
    }
    t.index[k] = {std::int32_t(base + Index(y0) * cols + x0), std::int32_t(base + Index(y0) * cols + x1),
                  std::int32_t(base + Index(y1) * cols + x0), std::int32_t(base + Index(y1) * cols + x1)};
    t.weight[k] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
  }
  return t;
}

namespace {

struct ResampleExtents {
  int samples;
  int channels;
  Index src_hw;
  Index dst_hw;
};

ResampleExtents check_resample(const TapTable& taps, const Shape& src) {
  if (src.h != taps.src.rows || src.w != taps.src.cols || src.n % taps.src.planes != 0) {
    throw DimensionError("resample: source " + src.str() + " does not match grid layout " +
                         taps.src.str());
  }
  return {src.n / taps.src.planes, src.c, Index(taps.src.rows) * taps.src.cols,
          Index(taps.dst.rows) * taps.dst.cols};
}

}  // namespace

TensorD resample(const TensorD& src, const TapTable& taps) {
  const ResampleExtents e = check_resample(taps, src.shape());
  TensorD out(Shape{e.samples * taps.dst.planes, e.channels, taps.dst.rows, taps.dst.cols});
  const Index src_sample = Index(taps.src.planes) * e.channels * e.src_hw;
  const Index dst_sample = Index(taps.dst.planes) * e.channels * e.dst_hw;
  const Index src_planes_hw = e.src_hw;
  for (int n = 0; n < e.samples; ++n) {
    const double* s = src.data() + n * src_sample;
    double* d = out.data() + n * dst_sample;
    Index k = 0;
    for (int p = 0; p < taps.dst.planes; ++p) {
      for (Index pix = 0; pix < e.dst_hw; ++pix, ++k) {
        if (!taps.valid[k]) continue;
        const auto& idx = taps.index[k];
        const auto& w = taps.weight[k];
        Index off[4];
        for (int q = 0; q < 4; ++q) {
          const Index plane = idx[q] / src_planes_hw;
          off[q] = plane * e.channels * e.src_hw + (idx[q] - plane * src_planes_hw);
        }
        double* dp = d + Index(p) * e.channels * e.dst_hw + pix;
        for (int c = 0; c < e.channels; ++c) {
          const Index shift = Index(c) * e.src_hw;
          double acc = -0.0;  // identity taps stay bit-exact, signed zeros included
          for (int q = 0; q < 4; ++q) {
            if (w[q] != 0.0) acc += w[q] * s[off[q] + shift];
          }
          dp[Index(c) * e.dst_hw] = acc;
        }
      }
    }
  }
  return out;
}

TensorD resample(const TensorD& src, const SamplingGrid& grid, Interp mode) {
  return resample(src, make_taps(grid, mode));
}

void resample_backward(const TapTable& taps, const TensorD& grad_out, TensorD& grad_src) {
  const ResampleExtents e = check_resample(taps, grad_src.shape());
  const Index src_sample = Index(taps.src.planes) * e.channels * e.src_hw;
  const Index dst_sample = Index(taps.dst.planes) * e.channels * e.dst_hw;
  for (int n = 0; n < e.samples; ++n) {
    double* s = grad_src.data() + n * src_sample;
    const double* d = grad_out.data() + n * dst_sample;
    Index k = 0;
    for (int p = 0; p < taps.dst.planes; ++p) {
      for (Index pix = 0; pix < e.dst_hw; ++pix, ++k) {
        if (!taps.valid[k]) continue;
        const auto& idx = taps.index[k];
        const auto& w = taps.weight[k];
        Index off[4];
        for (int q = 0; q < 4; ++q) {
          const Index plane = idx[q] / e.src_hw;
          off[q] = plane * e.channels * e.src_hw + (idx[q] - plane * e.src_hw);
        }
        const double* dp = d + Index(p) * e.channels * e.dst_hw + pix;
        for (int c = 0; c < e.channels; ++c) {
          const double g = dp[Index(c) * e.dst_hw];
          const Index shift = Index(c) * e.src_hw;
          for (int q = 0; q < 4; ++q) {
            if (w[q] != 0.0) s[off[q] + shift] += w[q] * g;
          }
        }
      }
    }
  }
}

TensorD roll_columns(const TensorD& img, int shift) {
  const Shape& s = img.shape();
  TensorD out(s);
  if (s.w == 0) return out;
  const int k = ((shift % s.w) + s.w) % s.w;
  const Index rows = Index(s.n) * s.c * s.h;
  for (Index r = 0; r < rows; ++r) {
    const double* in = img.data() + r * s.w;
    double* o = out.data() + r * s.w;
    std::copy(in, in + (s.w - k), o + k);
    std::copy(in + (s.w - k), in + s.w, o);
  }
  return out;
}

TensorD rotate_fast(const TensorD& img, int eighths) {
  const Shape& s = img.shape();
  if (s.w <= 0 || s.w % 8 != 0) {
    throw DimensionError("rotate_fast: width " + std::to_string(s.w) + " is not divisible by 8");
  }
  const int k = ((eighths % 8) + 8) % 8;
  return roll_columns(img, k * (s.w / 8));
}

void save_grid(std::ostream& out, const SamplingGrid& g) {
  out.write("DCGR", 4);
  binio::put<std::uint32_t>(out, kGridVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.kind));
  for (const Layout& l : {g.src, g.dst}) {
    binio::put<std::uint32_t>(out, l.planes);
    binio::put<std::uint32_t>(out, l.rows);
    binio::put<std::uint32_t>(out, l.cols);
  }
  binio::put<std::uint8_t>(out, g.wrap_cols ? 1 : 0);
  binio::put<std::uint32_t>(out, std::uint32_t(g.size()));
  for (Index k = 0; k < g.size(); ++k) {
    binio::put<std::uint32_t>(out, std::uint32_t(g.plane[k]));
    binio::put<float>(out, float(g.row[k]));
    binio::put<float>(out, float(g.col[k]));
    binio::put<std::uint8_t>(out, g.valid[k]);
  }
}

SamplingGrid load_grid(std::istream& in) {
  binio::Reader r(in);
  if (r.bytes(4, "magic") != "DCGR") throw FormatError("not a DCGR grid", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kGridVersion) throw FormatError("unsupported grid version", 4);
  SamplingGrid g;
  const auto kind = r.get<std::uint32_t>("kind");
  if (kind > 2) throw FormatError("unknown grid kind", r.offset() - 4);
  g.kind = static_cast<GridKind>(kind);
  for (Layout* l : {&g.src, &g.dst}) {
    l->planes = int(r.get<std::uint32_t>("planes"));
    l->rows = int(r.get<std::uint32_t>("rows"));
    l->cols = int(r.get<std::uint32_t>("cols"));
  }
  g.wrap_cols = r.get<std::uint8_t>("wrap") != 0;
  const auto count = r.get<std::uint32_t>("count");
  if (Index(count) != g.dst.per_sample()) throw FormatError("entry count does not match layout", r.offset() - 4);
  g.plane.resize(count);
  g.row.resize(count);
  g.col.resize(count);
  g.valid.resize(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    g.plane[k] = std::int32_t(r.get<std::uint32_t>("plane"));
    g.row[k] = r.get<float>("row");
    g.col[k] = r.get<float>("col");
    g.valid[k] = r.get<std::uint8_t>("valid");
    if (g.plane[k] < 0 || g.plane[k] >= g.src.planes) throw FormatError("plane out of range", r.offset());
  }
  return g;
}

}  // namespace dualcube
