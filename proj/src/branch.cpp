#include "ellab/branch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ellab/eigen.hpp"
#include "ellab/kernels.hpp"
#include "ellab/parallel.hpp"

namespace ellab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BranchPoint to_point(const MinimizeReport& rep) {
  BranchPoint pt;
  pt.lambda = rep.lambda;
  pt.sigma = rep.sigma;
  pt.energy = energy(rep.state, rep.lambda);
  pt.enorm = rep.state.enorm();
  pt.grad_norm = std::sqrt(std::max(0.0, rep.state.grad_sq));
  pt.vp_norm = std::sqrt(std::max(0.0, rep.state.intV_u2 + rep.state.intVm_u2));
  pt.hp_norm = std::pow(std::max(0.0, rep.state.intHp_up), 1.0 / rep.state.p);
  pt.residual = rep.residual_scaled;
  pt.converged = rep.converged;
  pt.state = rep.state;
  return pt;
}

/// Smooth compactly supported test bump with seeded center/width/height.
Field seeded_bump(const Problem& pb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Field f = make_field(pb.grid);
  const double rmax = pb.grid->extent();
  const int bumps = 1 + int(unif(rng) * 2.0);
  for (int b = 0; b < bumps; ++b) {
    const double center = 0.9 * unif(rng) * rmax;
    const double width = (0.05 + 0.35 * unif(rng)) * rmax;
    const double amp = 0.2 + unif(rng);
    const auto& r = pb.grid->radius();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double d = std::abs(r[i] - center) / width;
      if (d < 1.0) {
        const double c = std::cos(1.5707963267948966 * d);
        f.v[i] += amp * c * c;
      }
    }
  }
  return f;
}

}  // namespace

WindowTriple compute_window(const Problem& pb) {
  WindowTriple w;
  const SolverOptions& opt = pb.spec.solver;
  EigenResult base = principal_eigenpair(pb.grid, pb.V, nullptr, opt);
  w.lambda1 = base.infinite ? kInf : base.value;
  ConstrainedEigResult ce = lambda1_constrained(pb);
  w.lambda1_h = ce.infinite ? kInf : ce.value;
  RegionMask mask = minus_zero_region(pb.h);
  EigenResult masked = principal_eigenpair(pb.grid, pb.V, &mask, opt);
  w.lambda1_minus_zero = masked.infinite ? kInf : masked.value;
  return w;
}

Branch continue_branch(const Problem& pb, std::vector<double> lambdas) {
  Branch br;
  br.window = compute_window(pb);
  const double lo = br.window.lambda1;
  const double hi = br.window.lambda1_minus_zero;
  if (!(lo < hi))
    throw Refusal("empty continuation window: the principal level does not drop on {h <= 0}");
  const double pad = 1e-6 * (hi - lo);

  std::sort(lambdas.begin(), lambdas.end());
  for (double& l : lambdas) {
    const double clipped = std::min(std::max(l, lo + pad), hi - pad);
    if (clipped != l) {
      std::ostringstream msg;
      msg << "lambda " << l << " clipped to " << clipped << " inside the window";
      br.warnings.push_back(msg.str());
      l = clipped;
    }
  }

  const Field* warm = nullptr;
  for (double l : lambdas) {
    MinimizeReport rep = local_minimize(pb, l, warm, nullptr);
    if (!rep.feasible || rep.unbounded || !rep.converged) {
      br.aborted = true;
      std::ostringstream msg;
      msg << "solve at lambda " << l << " failed ("
          << (!rep.feasible ? "empty cone" : rep.unbounded ? "unbounded descent" : "no convergence")
          << "); branch truncated";
      br.abort_reason = msg.str();
      break;
    }
    br.points.push_back(to_point(rep));
    warm = &br.points.back().state.u;
  }
  return br;
}

BlowupFit fit_blowup(const Problem& pb, const Branch& branch) {
  if (pb.V.any_negative || pb.h.any_negative)
    throw Refusal("blow-up fit requires V >= 0 and h >= 0");
  if (branch.points.size() < 2) throw Refusal("blow-up fit needs a branch, not a single point");
  const double hi = branch.window.lambda1_minus_zero;
  const double lo = branch.window.lambda1;
  if (!std::isfinite(hi)) throw Refusal("the region {h <= 0} carries no principal level");

  const double cutoff = hi - 0.2 * (hi - lo);
  std::vector<const BranchPoint*> tail;
  for (const auto& pt : branch.points)
    if (pt.lambda >= cutoff) tail.push_back(&pt);
  if (tail.size() < 5) throw Refusal("blow-up fit needs at least 5 branch points near the right endpoint");

  BlowupFit fit;
  fit.lambda_right = hi;
  fit.points_used = tail.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto* pt : tail) {
    const double x = std::log(hi - pt->lambda);
    const double y = std::log(pt->enorm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(tail.size());
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 1e-300)) throw std::runtime_error("degenerate abscissae in blow-up fit");
  fit.exponent = (n * sxy - sx * sy) / denom;
  fit.amplitude = std::exp((sy - fit.exponent * sx) / n);

  RegionMask mask = minus_zero_region(pb.h);
  EigenResult masked = principal_eigenpair(pb.grid, pb.V, &mask, pb.spec.solver);
  if (masked.infinite) throw Refusal("no principal mode on {h <= 0}");
  const auto& e1 = masked.e1.v;

  const BranchPoint& base = branch.points.front();
  fit.mu = base.lambda;
  double c_cal = kInf;
  for (std::size_t i = 0; i < e1.size(); ++i)
    if (mask.keep[i] && e1[i] > 1e-12)
      c_cal = std::min(c_cal, base.state.u.v[i] / e1[i]);
  if (!std::isfinite(c_cal) || c_cal < 0.0) c_cal = 0.0;
  fit.c_calibrated = c_cal;

  const std::size_t checks = std::min<std::size_t>(3, branch.points.size());
  fit.pointwise_ok = true;
  for (std::size_t c = branch.points.size() - checks; c < branch.points.size(); ++c) {
    const BranchPoint& pt = branch.points[c];
    const double factor = (pt.lambda - fit.mu) * c_cal / (hi - pt.lambda);
    double margin = kInf;
    for (std::size_t i = 0; i < e1.size(); ++i)
      if (mask.keep[i])
        margin = std::min(margin, pt.state.u.v[i] - factor * e1[i] - base.state.u.v[i]);
    fit.pointwise_margin.push_back(margin);
    if (margin < -1e-6 * (1.0 + pt.enorm)) fit.pointwise_ok = false;
  }
  return fit;
}

MuSweep sweep_mu(const ProblemSpec& spec, std::vector<double> mus) {
  if (mus.empty()) throw std::invalid_argument("empty mu sequence");
  std::sort(mus.begin(), mus.end());
  Problem base = Problem::build(spec);
  MuSweep sweep;
  sweep.window = compute_window(base);
  if (!std::isfinite(sweep.window.lambda1_h))
    throw Refusal("sign-constrained level infinite at mu = 1; the sweep has no baseline");
  sweep.target = sweep.window.lambda1_minus_zero;
  sweep.mu = mus;
  sweep.value.assign(mus.size(), 0.0);

  std::vector<std::string> errors(mus.size());
  util::parallel_for(mus.size(), [&](std::size_t i) {
    try {
      ProblemSpec s = spec;
      s.h = perturb_h(spec.h, mus[i]);
      Problem pb = Problem::build(s);
      ConstrainedEigResult ce = lambda1_constrained(pb);
      sweep.value[i] = ce.infinite ? kInf : ce.value;
      if (!ce.converged && !ce.infinite) errors[i] = "constrained solve did not validate";
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("mu sweep entry failed: " + e);

  sweep.monotone = true;
  for (std::size_t i = 1; i < sweep.value.size(); ++i)
    if (sweep.value[i] < sweep.value[i - 1] - 1e-9 * (1.0 + std::abs(sweep.value[i - 1])))
      sweep.monotone = false;
  sweep.all_below_target = true;
  for (double v : sweep.value)
    if (v > sweep.target + 1e-6 * (1.0 + std::abs(sweep.target))) sweep.all_below_target = false;
  sweep.final_gap_rel = (sweep.target - sweep.value.back()) / sweep.target;
  return sweep;
}

LambdaStarReport estimate_lambda_star(const Problem& pb, double resolution) {
  LambdaStarReport rep;
  rep.window = compute_window(pb);
  const double l1 = rep.window.lambda1;
  const double l1h = rep.window.lambda1_h;
  const double lhi = rep.window.lambda1_minus_zero;
  if (!(l1 < l1h))
    throw Refusal("empty window: the sign constraint does not raise the principal level");
  if (!std::isfinite(lhi)) throw Refusal("the region {h <= 0} carries no principal level");
  if (resolution <= 0.0) resolution = 1e-3 * (lhi - l1);
  rep.resolution = resolution;

  RegionMask mask = minus_zero_region(pb.h);
  EigenResult masked = principal_eigenpair(pb.grid, pb.V, &mask, pb.spec.solver);
  if (!masked.infinite) {
    const auto& quad = pb.grid->quad_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < pb.size(); ++i)
      acc += quad[i] * pb.h.minus.v[i] * std::pow(std::abs(masked.e1.v[i]), pb.p);
    rep.hminus_e1_integral = acc;
  }
  if (pb.grid->kind() == GridKind::radial) {
    int runs = 0;
    bool inside = false;
    for (std::size_t i = 0; i < mask.keep.size(); ++i) {
      if (mask.keep[i] && !inside) {
        ++runs;
        inside = true;
      } else if (!mask.keep[i]) {
        inside = false;
      }
    }
    rep.minus_zero_contiguous = runs == 1;
  }

  // Solutions blow up toward the right endpoint, so the bracketing must not
  // mistake that growth for nonexistence: probe with the safety cap lifted
  // and let convergence, energy sign, and positivity decide solvability.
  Problem probe = pb;
  probe.spec.solver.enorm_cap = std::max(pb.spec.solver.enorm_cap, 1e9);

  auto solvable = [&](double l, const Field* warm, MinimizeReport& out, std::string& why) {
    out = local_minimize(probe, l, warm, nullptr);
    if (!out.feasible) {
      why = "cone empty";
      return false;
    }
    if (out.unbounded) {
      why = "descent unbounded";
      return false;
    }
    if (!out.converged) {
      why = "residual did not converge";
      return false;
    }
    if (!(out.sigma < 0.0)) {
      why = "attained energy not negative";
      return false;
    }
    // one Jacobi smoothing sweep, then require strict interior positivity
    const auto& diag = pb.grid->stiff_diag();
    Field au;
    stiffness_apply(out.state.u, au);
    double mn = kInf;
    for (std::size_t i = 0; i < pb.size(); ++i) {
      const double neighbor_avg = out.state.u.v[i] - au.v[i] / diag[i];
      mn = std::min(mn, neighbor_avg);
    }
    if (!(mn > 0.0)) {
      why = "smoothed iterate loses positivity";
      return false;
    }
    why.clear();
    return true;
  };

  MinimizeReport cur;
  std::string why;
  double lo = std::min(l1h, lhi - resolution);
  double hi = lhi;
  rep.baseline_solvable = solvable(lo, nullptr, cur, why);
  ++rep.solves;
  if (!rep.baseline_solvable) {
    rep.lambda_lo = lo;
    rep.lambda_hi = lo;
    rep.failure_diagnostic =
        "no solution at the window's left edge (" + why + "); likely a discretization artifact";
    return rep;
  }
  MinimizeReport best = cur;

  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    MinimizeReport trial;
    const bool ok = solvable(mid, &best.state.u, trial, why);
    ++rep.solves;
    if (ok) {
      lo = mid;
      best = std::move(trial);
    } else {
      hi = mid;
      rep.failure_diagnostic = why;
    }
  }
  rep.lambda_lo = lo;
  rep.lambda_hi = hi;
  rep.last_residual = residual_dual_norm(pb, best.state, lo);
  rep.last_solution = std::move(best.state);
  return rep;
}

Certificate certify_nonexistence(const Problem& pb, double lambda, const StateVector* candidate) {
  const auto& k = kernels::ops();
  const auto& quad = pb.grid->quad_weights();
  const std::size_t m = pb.size();
  Certificate cert;
  cert.lambda = lambda;
  cert.window = compute_window(pb);

  RegionMask mask = minus_zero_region(pb.h);
  EigenResult masked = principal_eigenpair(pb.grid, pb.V, &mask, pb.spec.solver);

  // An explicit candidate is judged by the candidate form first: the caller
  // asked about this particular field, and the witness integral must carry
  // its nonlinear term. The threshold form below remains as a fallback.
  if (candidate) {
    if (candidate->u.grid != pb.grid)
      throw std::invalid_argument("candidate not on the problem grid");
    std::vector<double> kfield(m);
    for (std::size_t i = 0; i < m; ++i)
      kfield[i] = lambda * pb.V.value.v[i] -
                  pb.h.value.v[i] * std::pow(std::abs(candidate->u.v[i]), pb.p - 2.0);
    const int trials = 100;
    std::vector<double> lhss(trials), rhss(trials);
    std::vector<Field> phis(trials);
    util::parallel_for(trials, [&](std::size_t t) {
      Field phi = t == 0 && !masked.infinite ? masked.e1
                                             : seeded_bump(pb, pb.spec.solver.seed * 1315423911ull + t);
      double lhs = 0.0;
      for (std::size_t i = 0; i < m; ++i) lhs += quad[i] * kfield[i] * phi.v[i] * phi.v[i];
      lhss[t] = lhs;
      rhss[t] = gradient_norm_sq(phi);
      phis[t] = std::move(phi);
    });
    for (int t = 0; t < trials; ++t) {
      if (lhss[t] > rhss[t] * (1.0 + 1e-9) + 1e-12) {
        cert.kind = CertificateKind::candidate_violation;
        cert.phi = std::move(phis[t]);
        cert.lhs = lhss[t];
        cert.rhs = rhss[t];
        cert.detail = "candidate fails the test-function inequality required of positive solutions";
        double lhs2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double ki = lambda * pb.V.value.v[i] -
                            pb.h.value.v[i] * std::pow(std::abs(candidate->u.v[i]), pb.p - 2.0);
          lhs2 += quad[i] * ki * cert.phi.v[i] * cert.phi.v[i];
        }
        Field ap;
        stiffness_apply(cert.phi, ap);
        const double rhs2 = k.dot(cert.phi.data(), ap.v.data(), m);
        cert.reverified = lhs2 > rhs2 * (1.0 + 1e-9);
        return cert;
      }
    }
  }

  if (!masked.infinite) {
    const Field& e1 = masked.e1;
    const double lhs = lambda * k.dot3(pb.wV.data(), e1.data(), e1.data(), m);
    const double rhs = gradient_norm_sq(e1);
    if (lhs > rhs * (1.0 + 1e-12)) {
      cert.kind = CertificateKind::nonexistence_above_threshold;
      cert.phi = e1;
      cert.lhs = lhs;
      cert.rhs = rhs;
      cert.detail =
          "test function supported in {h <= 0}; there the nonlinear term only strengthens the "
          "inequality against any positive solution";
      // independent recomputation through the stiffness operator
      Field ae;
      stiffness_apply(e1, ae);
      const double rhs2 = k.dot(e1.data(), ae.v.data(), m);
      double lhs2 = 0.0;
      for (std::size_t i = 0; i < m; ++i) lhs2 += lambda * quad[i] * pb.V.value.v[i] * e1.v[i] * e1.v[i];
      cert.reverified = lhs2 > rhs2 && std::abs(rhs2 - rhs) <= 1e-8 * (1.0 + rhs) &&
                        std::abs(lhs2 - lhs) <= 1e-8 * (1.0 + std::abs(lhs));
      return cert;
    }
  }

  cert.kind = CertificateKind::none;
  cert.detail = "no certificate found; this is not a proof of existence";
  return cert;
}

std::string to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::nonexistence_above_threshold:
      return "nonexistence_above_threshold";
    case CertificateKind::candidate_violation:
      return "candidate_violation";
    default:
      return "none";
  }
}

}  // namespace ellab
