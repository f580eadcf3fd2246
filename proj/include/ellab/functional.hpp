#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellab/grid.hpp"
#include "ellab/linsolve.hpp"
#include "ellab/weights.hpp"

namespace ellab {

/// Request outside the regime an operation is designed for (distinct from a
/// solver failure; the CLI maps refusals to their own exit code).
struct Refusal : std::runtime_error {
  explicit Refusal(const std::string& what) : std::runtime_error(what) {}
};

struct SolverOptions {
  double constraint_tol = 1e-8;  ///< admissible violation of normalization/sign constraints
  double residual_tol = 1e-6;    ///< dual-norm residual target for critical points
  int max_iterations = 100000;
  double enorm_cap = 1e6;        ///< iterates beyond this norm flag an unbounded descent
  int path_nodes = 33;           ///< discrete path resolution for saddle searches
  std::uint64_t seed = 0;
};

/// Declarative description of one variational problem.
struct ProblemSpec {
  GridParams grid;       // carries the dimension N
  double p = 4.0;
  double lambda = 0.0;   // default spectral parameter for single-run operations
  WeightSpec V;
  WeightSpec h;
  SolverOptions solver;
};

/// Sampled, immutable problem context shared by all solvers.
class Problem {
 public:
  static Problem build(const ProblemSpec& spec);
  /// Assemble from pre-sampled weights (manufactured setups, tests).
  static Problem build(GridPtr grid, WeightField v, WeightField h, double p,
                       SolverOptions solver = {}, double lambda = 0.0);

  ProblemSpec spec;  // grid params and specs echoed back (empty for pre-sampled builds)
  GridPtr grid;
  WeightField V;
  WeightField h;
  double p = 4.0;

  /// Quadrature-combined coefficient arrays (diagonal matrices).
  std::vector<double> wV;   ///< quad * V
  std::vector<double> wVm;  ///< quad * V^-
  std::vector<double> wh;   ///< quad * h (signed)
  std::vector<double> whp;  ///< quad * h^+

  EmbeddingReport embedding;
  std::vector<std::string> warnings;

  std::size_t size() const { return grid->size(); }
  int dimension() const { return grid->dimension(); }

  /// Solve (A + M) x = rhs, the mass-lumped H1 operator defining dual norms.
  void precond_solve(std::vector<double>& rhs) const;
  /// H1 inner product x' (A + M) y.
  double h1_inner(const Field& x, const Field& y) const;

 private:
  std::shared_ptr<TriFactor> kfactor_;  // cached for tridiagonal grids
};

/// Field plus the cached scalars every solver keeps consulting.
struct StateVector {
  Field u;
  double p = 4.0;         ///< superlinearity of the owning problem
  double grad_sq = 0.0;   ///< discrete |grad u|^2
  double intV_u2 = 0.0;   ///< integral of V u^2
  double intVm_u2 = 0.0;  ///< integral of V^- u^2
  double intH_up = 0.0;   ///< integral of h |u|^p
  double intHp_up = 0.0;  ///< integral of h^+ |u|^p
  bool nonneg = true;

  /// Norm proxy of the energy space: ||grad u|| + ||u||_{L2(V^-)} + ||u||_{Lp(h^+)}.
  double enorm() const;
};

StateVector make_state(const Problem& pb, Field u);

/// I_lambda(u) = 1/2 |grad u|^2 - lambda/2 int V u^2 + 1/p int h |u|^p.
double energy(const StateVector& s, double lambda);

/// Strong-form residual of -lap u - lambda V u + h |u|^{p-2} u at each node.
/// Pairs with test fields through the quadrature inner product.
Field first_variation(const Problem& pb, const StateVector& s, double lambda);

/// Quadratic form |grad phi|^2 - lambda int V phi^2 + (p-1) int h |u|^{p-2} phi^2.
double second_variation(const Problem& pb, const StateVector& s, double lambda, const Field& phi);

struct Rayleigh {
  double value = 0.0;
  bool admissible = false;  ///< false when int V u^2 <= 0
};

/// |grad u|^2 / int V u^2; inadmissible when the denominator is not positive.
Rayleigh rayleigh_quotient(const Field& u, const WeightField& v);

/// Dual vector of the first variation: A u - lambda (wV) u + (wh) |u|^{p-2} u.
void residual_dual_vector(const Problem& pb, const StateVector& s, double lambda,
                          std::vector<double>& out);

/// Dual norm sqrt(r' K^{-1} r) of the first variation, K the H1 operator.
double residual_dual_norm(const Problem& pb, const StateVector& s, double lambda);

/// Dual norm scaled by 1/(1 + ||u||_E), the convergence scale of the theory.
double residual_scaled(const Problem& pb, const StateVector& s, double lambda);

struct EnergyReport {
  double value = 0.0;
  double residual_dual = 0.0;
  double second_variation = 0.0;  ///< along the supplied direction
};

EnergyReport energy_report(const Problem& pb, const StateVector& s, double lambda,
                           const Field& direction);

/// Wrap plain nodal values as a weight (parts and masks from the float values;
/// spec-based sampling is the exact-mask path).
WeightField weight_from_values(Field values);

}  // namespace ellab
