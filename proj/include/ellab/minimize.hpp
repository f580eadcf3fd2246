#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ellab/eigen.hpp"
#include "ellab/functional.hpp"

namespace ellab {

/// Constrained principal level: minimize |grad u|^2 over the admissible set
/// { int V u^2 = 1, int h |u|^p <= 0 }, with Lagrange data of the minimizer.
struct ConstrainedEigResult {
  bool infinite = false;  ///< admissible set empty
  double value = std::numeric_limits<double>::infinity();
  Field u0;               ///< minimizer, nonnegative, int V u0^2 = 1
  bool active = false;    ///< sign constraint active at the minimizer
  double sigma1 = 0.0;    ///< multiplier of the normalization (equals value)
  double sigma2 = 0.0;    ///< multiplier of the sign constraint (<= 0 when active)
  double alpha = 0.0;     ///< (-sigma2)^{1/(p-2)} when active
  Field threshold_solution;          ///< alpha * u0, a solution at lambda = value
  double threshold_residual = -1.0;  ///< dual residual of that solution
  double constraint_value = 0.0;     ///< int h |u0|^p at exit
  double normalization_error = 0.0;  ///< |1 - int V u0^2| at exit
  double kkt_residual = 0.0;         ///< stationarity system norm at exit
  bool sign_inconsistent = false;    ///< active constraint but sigma2 >= 0
  int iterations = 0;
  bool converged = false;
};

ConstrainedEigResult lambda1_constrained(const Problem& pb);

/// Outcome of minimizing I_lambda over the open cone {|grad u|^2 < lambda int V u^2}.
struct MinimizeReport {
  bool feasible = true;    ///< cone nonempty, i.e. lambda > lambda1(V)
  bool unbounded = false;  ///< descent escaped every energy ball
  double lambda = 0.0;
  double sigma = 0.0;  ///< attained infimum I_lambda(u)
  StateVector state;
  double residual_dual = 0.0;
  double residual_scaled = 0.0;
  double lambda1 = 0.0;  ///< unconstrained principal level used for the cone test
  int iterations = 0;
  bool converged = false;
  bool boundary_contradiction = false;  ///< minimizer pinned to the cone boundary
};

/// Minimize I_lambda in the cone. Optional warm start and pointwise cap
/// (iterates are clamped below cap, used for ordered re-minimization).
MinimizeReport local_minimize(const Problem& pb, double lambda, const Field* init = nullptr,
                              const Field* cap = nullptr);

/// A seeded strictly-positive cone point for seed-independence experiments.
Field random_cone_init(const Problem& pb, double lambda, std::uint64_t seed);

struct MonotonicityCheck {
  bool ok = true;
  std::size_t lo_index = 0;  ///< offending pair when !ok
  std::size_t hi_index = 0;
  double lo_energy = 0.0;
  double hi_energy = 0.0;
};

/// Verify the map lambda -> sigma(lambda) is non-increasing across all ordered
/// pairs of (lambda, energy) samples, within an absolute+relative tolerance.
MonotonicityCheck energy_monotonicity_check(std::vector<std::pair<double, double>> samples,
                                            double tol = 1e-8);

}  // namespace ellab
