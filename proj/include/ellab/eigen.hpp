#pragma once

#include <limits>
#include <vector>

#include "ellab/functional.hpp"
#include "ellab/grid.hpp"
#include "ellab/weights.hpp"

namespace ellab {

/// Principal eigenpair of -lap u = lambda V u on a grid region.
struct EigenResult {
  bool infinite = false;  ///< admissible set empty (V^+ vanishes on the region)
  double value = std::numeric_limits<double>::infinity();
  Field e1;               ///< nonnegative, int V e1^2 = 1; empty when infinite
  double residual = 0.0;  ///< dual norm of A e1 - lambda B e1 on the region
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = true;
};

/// Minimize |grad u|^2 over {int V u^2 = 1, u supported in mask}. Radial
/// grids use exact Sturm bisection on the tridiagonal pencil plus inverse
/// iteration; box grids use a Lanczos sweep in the stiffness inner product.
EigenResult principal_eigenpair(const GridPtr& grid, const WeightField& v,
                                const RegionMask* mask = nullptr, const SolverOptions& opt = {});

struct EigenSweepRow {
  double r_max = 0.0;
  double lambda1 = 0.0;
};

/// Recompute lambda1 on B_R for each radius, holding the node count fixed.
std::vector<EigenSweepRow> eigen_convergence_sweep(const ProblemSpec& spec,
                                                   const std::vector<double>& r_values);

}  // namespace ellab
