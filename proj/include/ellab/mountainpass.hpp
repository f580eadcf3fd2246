#pragma once

#include <vector>

#include "ellab/functional.hpp"
#include "ellab/minimize.hpp"

namespace ellab {

/// A compactly supported bump concentrated where h < 0, scaled so that its
/// Rayleigh quotient exceeds the sign-constrained principal level while its
/// energy at lambda is non-positive. Refuses when h has no negative part.
Field find_endpoint(const Problem& pb, double lambda);

struct MountainPassReport {
  double lambda = 0.0;
  double level = 0.0;  ///< saddle energy c
  StateVector v;       ///< critical point at the level
  double residual_dual = 0.0;
  double residual_scaled = 0.0;
  bool converged = false;
  bool level_collapsed = false;  ///< path maximum fell to zero: bad geometry
  int iterations = 0;
  int last_insertion_iteration = -1;  ///< refinement stops changing the level after this
  Field endpoint;
  double endpoint_energy = 0.0;
  double endpoint_rayleigh = 0.0;
  std::vector<double> max_energy_history;       ///< path maximum per iteration
  std::vector<std::vector<Field>> path_history; ///< a few path snapshots
};

/// Deform a discrete path from 0 to phi0 by descending the path-maximum node,
/// with midpoint refinement and periodic arclength reparametrization, then
/// polish the saddle by a damped Newton step on the full residual.
MountainPassReport mountain_pass(const Problem& pb, double lambda, const Field& phi0,
                                 int path_nodes = 33);

struct OrderedPair {
  StateVector u;      ///< re-minimized lower solution, capped below v
  double min_gap = 0.0;  ///< min over nodes of (v - u)
  bool converged = false;
};

/// Ordered-pair post-processing: restart the cone minimization from the
/// pointwise max of the minimizer and v, cut below v, so v dominates it.
OrderedPair order_pair(const Problem& pb, double lambda, const StateVector& u_min,
                       const StateVector& v);

struct ThresholdPair {
  double lambda = 0.0;  ///< the sign-constrained principal level
  StateVector u0;       ///< strict minimizer, I(u0) < 0
  StateVector u1;       ///< threshold solution, I(u1) = 0
  double energy_u0 = 0.0;
  double energy_u1 = 0.0;
  double second_variation_u1 = 0.0;  ///< (I''(u1) u1, u1), zero at the threshold
  double sign_integral_u1 = 0.0;     ///< int h |u1|^p, zero at the threshold
  double min_gap = 0.0;              ///< min over nodes of (u1 - u0)
  bool converged = false;
};

/// The ordered pair at lambda equal to the sign-constrained principal level:
/// u1 from the constrained minimizer's Lagrange data, u0 a strict minimizer
/// seeded and capped below u1. Refuses when h >= 0 or the window is empty.
ThresholdPair threshold_pair(const Problem& pb);

}  // namespace ellab
