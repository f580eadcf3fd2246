#pragma once

#include <string>
#include <vector>

#include "ellab/functional.hpp"
#include "ellab/minimize.hpp"

namespace ellab {

struct BranchPoint {
  double lambda = 0.0;
  double sigma = 0.0;   ///< attained infimum of the cone minimization
  double energy = 0.0;  ///< energy of the stored state (equal to sigma)
  double enorm = 0.0;
  double grad_norm = 0.0;
  double vp_norm = 0.0;  ///< L2(V^+) norm
  double hp_norm = 0.0;  ///< Lp(h^+) norm
  double residual = 0.0; ///< scaled dual residual
  bool converged = false;
  StateVector state;
};

/// Computed window triple carried by every report.
struct WindowTriple {
  double lambda1 = 0.0;            ///< unconstrained principal level
  double lambda1_h = 0.0;          ///< sign-constrained principal level
  double lambda1_minus_zero = 0.0; ///< principal level of the region {h <= 0}
};

struct Branch {
  std::vector<BranchPoint> points;  ///< sorted by lambda
  WindowTriple window;
  std::vector<std::string> warnings;
  bool aborted = false;
  std::string abort_reason;
};

/// Solve the cone minimization along a lambda ladder, warm-starting each solve
/// from its predecessor. Lambdas are clipped into the open window with a
/// warning; a failed interior solve aborts with the partial branch.
Branch continue_branch(const Problem& pb, std::vector<double> lambdas);

struct BlowupFit {
  double exponent = 0.0;   ///< slope of log enorm vs log(right endpoint - lambda)
  double amplitude = 0.0;  ///< exp(intercept)
  std::size_t points_used = 0;
  double mu = 0.0;            ///< calibration point (leftmost branch lambda)
  double c_calibrated = 0.0;  ///< largest C with u_mu >= C e1 on the region
  std::vector<double> pointwise_margin;  ///< per checked lambda: min of the bound slack
  bool pointwise_ok = false;
  double lambda_right = 0.0;  ///< right endpoint used by the fit
};

/// Fit the divergence rate of the branch norm at the right endpoint and check
/// the pointwise lower bound against the principal mode of {h <= 0}. Requires
/// V >= 0, h >= 0 and at least 5 branch points in the last fifth of the window.
BlowupFit fit_blowup(const Problem& pb, const Branch& branch);

struct MuSweep {
  std::vector<double> mu;
  std::vector<double> value;  ///< sign-constrained level for h scaled by mu on {h > 0}
  double target = 0.0;        ///< principal level of {h <= 0}
  bool monotone = false;
  bool all_below_target = false;
  double final_gap_rel = 0.0;  ///< (target - last value) / target
  WindowTriple window;
};

/// Sign-constrained principal level under progressively amplified positive
/// part of h; entries computed concurrently with cold starts.
MuSweep sweep_mu(const ProblemSpec& spec, std::vector<double> mus);

struct LambdaStarReport {
  double lambda_lo = 0.0;  ///< largest lambda with a verified solution
  double lambda_hi = 0.0;  ///< smallest lambda where the solve failed
  double resolution = 0.0;
  WindowTriple window;
  bool baseline_solvable = false;  ///< solve at the window's left edge succeeded
  StateVector last_solution;       ///< stored at lambda_lo
  double last_residual = 0.0;      ///< re-verified dual residual at lambda_lo
  std::string failure_diagnostic;  ///< why the solve at lambda_hi failed
  double hminus_e1_integral = 0.0; ///< int h^- e1({h<=0})^p, strict-gap predictor
  bool minus_zero_contiguous = false;  ///< radial grids: {h <= 0} is one interval
  int solves = 0;
};

/// Bracket the supremum of solvable lambdas by bisection over
/// [sign-constrained level, level of {h <= 0}], warm-starting from the last
/// success. Refuses when the window below the sign-constrained level is empty.
LambdaStarReport estimate_lambda_star(const Problem& pb, double resolution = -1.0);

enum class CertificateKind { none, nonexistence_above_threshold, candidate_violation };

struct Certificate {
  CertificateKind kind = CertificateKind::none;
  double lambda = 0.0;
  Field phi;         ///< test function witnessing the violated inequality
  double lhs = 0.0;  ///< int (lambda V - h u^{p-2}) phi^2 (or lambda int V phi^2)
  double rhs = 0.0;  ///< |grad phi|^2
  bool reverified = false;  ///< inequality recomputed from raw fields
  std::string detail;
  WindowTriple window;
};

/// Nonexistence certification: (a) lambda above the principal level of
/// {h <= 0} yields a test function no positive solution can satisfy;
/// (b) a supplied candidate is spot-checked against seeded test functions.
/// Absence of a certificate (kind none) never proves existence.
Certificate certify_nonexistence(const Problem& pb, double lambda,
                                 const StateVector* candidate = nullptr);

/// The window triple on this problem's grid (used by every CLI report).
WindowTriple compute_window(const Problem& pb);

std::string to_string(CertificateKind kind);

}  // namespace ellab
