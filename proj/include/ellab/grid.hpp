#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace ellab {

enum class GridKind { radial, box };

struct GridParams {
  GridKind kind = GridKind::radial;
  /// Space dimension N. Radial grids accept any N >= 1; box grids require N = 2.
  int dimension = 3;
  /// Radial: truncation radius R. Box: half-width W of the square (-W, W)^2.
  double extent = 1.0;
  /// Radial: node count on (0, R], the last node being the Dirichlet boundary.
  /// Box: node count per axis including both boundary columns.
  int nodes = 256;
  /// Radial only: geometric cell growth ratio (1 = uniform spacing).
  double stretch = 1.0;
};

/// Immutable discretization of a truncated domain with zero Dirichlet data.
/// Only interior nodes carry degrees of freedom; the boundary ring is the
/// implicit value 0. The stiffness form is assembled from face conductances,
/// so summation by parts holds exactly: integral of (-lap u)*v equals the
/// face-difference bilinear form for every pair of fields.
class Grid {
 public:
  /// Off-diagonal layout of the stiffness matrix: face between interior nodes
  /// i and i+offset has conductance g[i].
  struct Band {
    std::size_t offset;
    std::vector<double> g;
  };

  static std::shared_ptr<const Grid> build(const GridParams& params);

  const GridParams& params() const { return params_; }
  GridKind kind() const { return params_.kind; }
  int dimension() const { return params_.dimension; }
  double extent() const { return params_.extent; }
  /// Interior degree-of-freedom count.
  std::size_t size() const { return radius_.size(); }

  /// Distance of each interior node from the origin.
  const std::vector<double>& radius() const { return radius_; }
  /// Box grids only: Cartesian coordinates of interior nodes (row-major).
  const std::vector<double>& coord_x() const { return x_; }
  const std::vector<double>& coord_y() const { return y_; }

  /// Cell quadrature weights of interior nodes.
  const std::vector<double>& quad_weights() const { return quad_; }
  /// Total measure of the truncated domain, boundary cells included.
  double domain_volume() const { return volume_; }

  const std::vector<Band>& bands() const { return bands_; }
  /// Conductance to the boundary ring, per interior node (0 away from it).
  const std::vector<double>& boundary_faces() const { return bfaces_; }
  /// Diagonal of the stiffness matrix (sum of incident conductances).
  const std::vector<double>& stiff_diag() const { return diag_; }

  /// True when the stiffness matrix is tridiagonal (radial grids).
  bool tridiagonal() const { return bands_.size() == 1 && bands_[0].offset == 1; }

 private:
  friend struct GridBuilder;
  Grid() = default;
  GridParams params_;
  std::vector<double> radius_, x_, y_, quad_, bfaces_, diag_;
  std::vector<Band> bands_;
  double volume_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Radial grid on (0, R_max] with n nodes, the last one being the boundary.
GridPtr build_radial_grid(int dimension, double r_max, int n, double stretch = 1.0);

/// Uniform box grid on (-W, W)^2 with n_per_axis nodes per axis.
GridPtr build_box_grid(double half_width, int n_per_axis);

/// Nodal values over the interior of a fixed grid.
struct Field {
  GridPtr grid;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

/// Zero field on a grid.
Field make_field(GridPtr grid);

/// Sample a radius-dependent profile f(r) at interior nodes (any grid kind).
Field sample_profile(GridPtr grid, const std::function<double(double)>& f);

/// Sample f(x, y) at interior nodes; box grids only.
Field sample_xy(GridPtr grid, const std::function<double(double, double)>& f);

/// Face-difference Dirichlet energy: sum over faces of g*(du across face)^2,
/// boundary faces included with the boundary value 0.
double gradient_norm_sq(const Field& u);

/// Face-difference bilinear form between two fields on the same grid.
double gradient_form(const Field& u, const Field& v);

/// Quadrature of w*|u|^q over the domain. The weight w may be any nodal field.
double weighted_integral(const Field& w, const Field& u, double q);

/// Quadrature of |u|^q over the domain.
double integral_pow(const Field& u, double q);

/// out = A u with A the face-assembled stiffness matrix.
void stiffness_apply(const Field& u, Field& out);

/// Variational discrete Laplacian: (lap u)_i = -(A u)_i / w_i.
Field laplacian_apply(const Field& u);

}  // namespace ellab
