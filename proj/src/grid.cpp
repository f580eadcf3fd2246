#include "ellab/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ellab/kernels.hpp"

namespace ellab {

namespace {

/// Surface measure of the unit sphere in R^N, with the one-dimensional
/// convention omega = 1 (profiles live on (0, R) with a natural condition
/// at the origin).
double unit_sphere_measure(int n) {
  if (n == 1) return 1.0;
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace

struct GridBuilder {
  static void build_radial(const GridParams& p, Grid* g);
  static void build_box(const GridParams& p, Grid* g);
};

void GridBuilder::build_radial(const GridParams& p, Grid* g) {
  const int n = p.nodes;
  const double R = p.extent;
  std::vector<double> r(n);
  if (p.stretch == 1.0) {
    const double dr = R / n;
    for (int i = 0; i < n; ++i) r[i] = (i + 1) * dr;
  } else {
    const double s = p.stretch;
    const double h0 = R * (s - 1.0) / (std::pow(s, n) - 1.0);
    double acc = 0.0, h = h0;
    for (int i = 0; i < n; ++i) {
      acc += h;
      r[i] = acc;
      h *= s;
    }
  }
  r[n - 1] = R;  // node n-1 is the Dirichlet boundary

  const int m = n - 1;
  const double omega = unit_sphere_measure(p.dimension);
  const double N = p.dimension;

  std::vector<double> face(m);  // midpoints; face[i] sits between node i and i+1
  for (int i = 0; i < m; ++i) face[i] = 0.5 * (r[i] + r[i + 1]);

  Grid::Band band;
  band.offset = 1;
  band.g.resize(m - 1);
  for (int i = 0; i + 1 < m; ++i)
    band.g[i] = omega * std::pow(face[i], N - 1) / (r[i + 1] - r[i]);

  std::vector<double> bfaces(m, 0.0);
  bfaces[m - 1] = omega * std::pow(face[m - 1], N - 1) / (R - r[m - 1]);

  // Cell of node i spans [face_{i-1}, face_i] with face_{-1} = 0; the last
  // interior cell is extended to R so the weights sum to |B_R| exactly.
  std::vector<double> quad(m);
  double prev = 0.0;
  for (int i = 0; i < m; ++i) {
    const double hi = (i == m - 1) ? R : face[i];
    quad[i] = omega * (std::pow(hi, N) - std::pow(prev, N)) / N;
    prev = hi;
  }

  g->radius_ = std::move(r);
  g->radius_.resize(m);
  g->quad_ = std::move(quad);
  g->bfaces_ = std::move(bfaces);
  g->bands_.push_back(std::move(band));
  g->volume_ = omega * std::pow(R, N) / N;
}

void GridBuilder::build_box(const GridParams& p, Grid* g) {
  const int n = p.nodes;       // nodes per axis, boundary included
  const int ni = n - 2;        // interior nodes per axis
  const double W = p.extent;
  const double d = 2.0 * W / (n - 1);
  const std::size_t m = static_cast<std::size_t>(ni) * ni;

  g->x_.resize(m);
  g->y_.resize(m);
  g->radius_.resize(m);
  g->quad_.resize(m);
  g->bfaces_.assign(m, 0.0);

  // Cell widths partition (-W, W) exactly: interior cells are d wide, the
  // two wall-adjacent cells extend to the wall (3d/2), so the quadrature
  // weights sum to the box area exactly.
  const auto width = [&](int i) { return (i == 0 || i == ni - 1) ? 1.5 * d : d; };

  for (int j = 0; j < ni; ++j) {
    for (int i = 0; i < ni; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * ni + i;
      g->x_[k] = -W + (i + 1) * d;
      g->y_[k] = -W + (j + 1) * d;
      g->radius_[k] = std::hypot(g->x_[k], g->y_[k]);
      g->quad_[k] = width(i) * width(j);
      double b = 0.0;
      if (i == 0) b += 1.0;
      if (i == ni - 1) b += 1.0;
      if (j == 0) b += 1.0;
      if (j == ni - 1) b += 1.0;
      g->bfaces_[k] = b;
    }
  }

  // Unit conductances give the 5-point stencil; rows do not wrap.
  Grid::Band bx;
  bx.offset = 1;
  bx.g.assign(m - 1, 1.0);
  for (int j = 0; j + 1 < ni; ++j)
    bx.g[static_cast<std::size_t>(j) * ni + (ni - 1)] = 0.0;
  Grid::Band by;
  by.offset = static_cast<std::size_t>(ni);
  by.g.assign(m - ni, 1.0);
  g->bands_.push_back(std::move(bx));
  g->bands_.push_back(std::move(by));
  g->volume_ = 4.0 * W * W;
}

std::shared_ptr<const Grid> Grid::build(const GridParams& p) {
  if (p.extent <= 0.0) throw std::invalid_argument("grid extent must be positive");
  auto g = std::shared_ptr<Grid>(new Grid());
  g->params_ = p;
  if (p.kind == GridKind::radial) {
    if (p.dimension < 1) throw std::invalid_argument("radial grid needs dimension >= 1");
    if (p.nodes < 16) throw std::invalid_argument("radial grid needs at least 16 nodes");
    if (p.stretch < 1.0) throw std::invalid_argument("grid stretch must be >= 1");
    GridBuilder::build_radial(p, g.get());
  } else {
    if (p.dimension != 2) throw std::invalid_argument("box grids are two-dimensional");
    if (p.nodes < 8) throw std::invalid_argument("box grid needs at least 8 nodes per axis");
    if (p.stretch != 1.0) throw std::invalid_argument("box grids are uniform (stretch = 1)");
    GridBuilder::build_box(p, g.get());
  }
  auto& diag = g->diag_;
  diag = g->bfaces_;
  for (const auto& b : g->bands_) {
    for (std::size_t i = 0; i < b.g.size(); ++i) {
      diag[i] += b.g[i];
      diag[i + b.offset] += b.g[i];
    }
  }
  return g;
}

GridPtr build_radial_grid(int dimension, double r_max, int n, double stretch) {
  GridParams p;
  p.kind = GridKind::radial;
  p.dimension = dimension;
  p.extent = r_max;
  p.nodes = n;
  p.stretch = stretch;
  return Grid::build(p);
}

GridPtr build_box_grid(double half_width, int n_per_axis) {
  GridParams p;
  p.kind = GridKind::box;
  p.dimension = 2;
  p.extent = half_width;
  p.nodes = n_per_axis;
  return Grid::build(p);
}

Field make_field(GridPtr grid) {
  Field f;
  f.v.assign(grid->size(), 0.0);
  f.grid = std::move(grid);
  return f;
}

Field sample_profile(GridPtr grid, const std::function<double(double)>& f) {
  Field out = make_field(grid);
  const auto& r = out.grid->radius();
  for (std::size_t i = 0; i < r.size(); ++i) out.v[i] = f(r[i]);
  return out;
}

Field sample_xy(GridPtr grid, const std::function<double(double, double)>& f) {
  if (grid->kind() != GridKind::box)
    throw std::invalid_argument("sample_xy requires a box grid");
  Field out = make_field(grid);
  const auto& x = out.grid->coord_x();
  const auto& y = out.grid->coord_y();
  for (std::size_t i = 0; i < x.size(); ++i) out.v[i] = f(x[i], y[i]);
  return out;
}

double gradient_norm_sq(const Field& u) {
  const auto& k = kernels::ops();
  const Grid& g = *u.grid;
  double s = k.dot3(g.boundary_faces().data(), u.data(), u.data(), u.size());
  for (const auto& b : g.bands())
    s += k.diff_sq_wsum(b.g.data(), u.data(), u.data() + b.offset, b.g.size());
  return s;
}

double gradient_form(const Field& u, const Field& v) {
  if (u.grid != v.grid) throw std::invalid_argument("fields live on different grids");
  const auto& k = kernels::ops();
  const Grid& g = *u.grid;
  // Expand g*(du)(dv) over faces: diagonal part plus the two cross terms.
  double s = k.dot3(g.stiff_diag().data(), u.data(), v.data(), u.size());
  for (const auto& b : g.bands()) {
    s -= k.dot3(b.g.data(), u.data(), v.data() + b.offset, b.g.size());
    s -= k.dot3(b.g.data(), u.data() + b.offset, v.data(), b.g.size());
  }
  return s;
}

double weighted_integral(const Field& w, const Field& u, double q) {
  if (u.grid != w.grid) throw std::invalid_argument("fields live on different grids");
  const auto& k = kernels::ops();
  const auto& quad = u.grid->quad_weights();
  std::vector<double> cw(quad.size());
  for (std::size_t i = 0; i < cw.size(); ++i) cw[i] = quad[i] * w.v[i];
  return k.wabs_pow_sum(cw.data(), u.data(), q, u.size());
}

double integral_pow(const Field& u, double q) {
  const auto& k = kernels::ops();
  return k.wabs_pow_sum(u.grid->quad_weights().data(), u.data(), q, u.size());
}

void stiffness_apply(const Field& u, Field& out) {
  const auto& k = kernels::ops();
  const Grid& g = *u.grid;
  const std::size_t m = u.size();
  out.grid = u.grid;
  out.v.assign(m, 0.0);
  k.fma_vec(out.data(), g.stiff_diag().data(), u.data(), m);
  for (const auto& b : g.bands()) {
    k.fms_vec(out.data(), b.g.data(), u.data() + b.offset, b.g.size());
    k.fms_vec(out.data() + b.offset, b.g.data(), u.data(), b.g.size());
  }
}

Field laplacian_apply(const Field& u) {
  Field out = make_field(u.grid);
  stiffness_apply(u, out);
  const auto& quad = u.grid->quad_weights();
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = -out.v[i] / quad[i];
  return out;
}

}  // namespace ellab
