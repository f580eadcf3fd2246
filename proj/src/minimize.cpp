#include "ellab/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ellab/kernels.hpp"
#include "ellab/linsolve.hpp"

namespace ellab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tri {
  std::vector<double> diag, off;
};

Tri stiffness_tri(const Grid& g) {
  Tri t;
  t.diag = g.stiff_diag();
  const auto& band = g.bands()[0].g;
  t.off.resize(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) t.off[i] = -band[i];
  return t;
}

double sign_integral(const Problem& pb, const std::vector<double>& u) {
  return kernels::ops().wabs_pow_sum(pb.wh.data(), u.data(), pb.p, u.size());
}

double b_norm_sq(const Problem& pb, const std::vector<double>& u) {
  return kernels::ops().dot3(pb.wV.data(), u.data(), u.data(), u.size());
}

/// Scale the {h > 0} component of u so the sign constraint holds with
/// equality, then renormalize int V u^2 = 1. Returns false when u carries no
/// negative-part mass to trade against or loses normalizability.
bool project_admissible(const Problem& pb, std::vector<double>& u) {
  const auto& k = kernels::ops();
  const std::size_t m = u.size();
  const double g_plus = k.wabs_pow_sum(pb.whp.data(), u.data(), pb.p, m);
  const double g_all = sign_integral(pb, u);
  if (g_all > 0.0) {
    const double g_minus = g_plus - g_all;  // int h^- |u|^p
    if (!(g_minus > 0.0) || !(g_plus > 0.0)) return false;
    const double t = std::pow(g_minus / g_plus, 1.0 / pb.p);
    const auto& hp = pb.h.plus.v;
    for (std::size_t i = 0; i < m; ++i)
      if (hp[i] > 0.0) u[i] *= t;
  }
  const double b2 = b_norm_sq(pb, u);
  if (!(b2 > 1e-300)) return false;
  const double inv = 1.0 / std::sqrt(b2);
  kernels::ops().scal(u.data(), inv, m);
  return true;
}

struct KktState {
  std::vector<double> u;
  double sigma1 = 0.0, sigma2 = 0.0;
  double fnorm = kInf;
  int iterations = 0;
  bool converged = false;
};

/// Stationarity system of the constrained minimization:
///   A u - sigma1 B u - sigma2 C(u) = 0,  (1 - u'Bu)/2 = 0,  -G(u)/p = 0
/// with C(u) = (w h) |u|^{p-2} u. Returns the euclidean norm of the system.
double kkt_residual(const Problem& pb, const std::vector<double>& u, double s1, double s2,
                    std::vector<double>& f, std::vector<double>& bu, std::vector<double>& c) {
  const auto& k = kernels::ops();
  const std::size_t m = u.size();
  Field uf{pb.grid, u}, au;
  stiffness_apply(uf, au);
  bu.resize(m);
  for (std::size_t i = 0; i < m; ++i) bu[i] = pb.wV[i] * u[i];
  c.assign(m, 0.0);
  k.pow_term_add(c.data(), pb.wh.data(), u.data(), pb.p - 2.0, m);
  f = au.v;
  k.axpy(f.data(), -s1, bu.data(), m);
  k.axpy(f.data(), -s2, c.data(), m);
  const double c1 = 0.5 * (1.0 - k.dot(u.data(), bu.data(), m));
  const double c2 = -sign_integral(pb, u) / pb.p;
  return std::sqrt(k.dot(f.data(), f.data(), m) + c1 * c1 + c2 * c2);
}

/// Damped Newton on the bordered system, tridiagonal grids only. Starts from
/// an admissible descent iterate; block elimination through a pivoted LU of
/// M = A - sigma1 B - sigma2 (p-1) diag(w h |u|^{p-2}).
KktState kkt_newton(const Problem& pb, std::vector<double> u, double s1, double s2) {
  const auto& k = kernels::ops();
  const std::size_t m = u.size();
  const Tri tri = stiffness_tri(*pb.grid);
  KktState st;
  std::vector<double> f, bu, c, z0, z1, z2, diag;
  double fn = kkt_residual(pb, u, s1, s2, f, bu, c);
  const double fscale = 1.0 + std::abs(s1) + std::abs(s2);
  int stall = 0;
  for (int it = 0; it < 60; ++it) {
    st.iterations = it;
    if (fn <= 1e-12 * fscale) {
      st.converged = true;
      break;
    }
    diag = tri.diag;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = std::pow(std::abs(u[i]), pb.p - 2.0);
      diag[i] -= s1 * pb.wV[i] + s2 * (pb.p - 1.0) * pb.wh[i] * w;
    }
    TriLU lu;
    lu.factor(tri.off, diag, tri.off);
    if (!lu.valid()) {
      for (std::size_t i = 0; i < m; ++i) diag[i] *= 1.0 + 1e-12;
      lu.factor(tri.off, diag, tri.off);
      if (!lu.valid()) break;
    }
    z0 = f;
    z1 = bu;
    z2 = c;
    lu.solve(z0);
    lu.solve(z1);
    lu.solve(z2);
    const double c1 = 0.5 * (1.0 - k.dot(u.data(), bu.data(), m));
    const double c2 = -sign_integral(pb, u) / pb.p;
    const double a11 = k.dot(bu.data(), z1.data(), m);
    const double a12 = k.dot(bu.data(), z2.data(), m);
    const double a21 = k.dot(c.data(), z1.data(), m);
    const double a22 = k.dot(c.data(), z2.data(), m);
    const double r1 = c1 + k.dot(bu.data(), z0.data(), m);
    const double r2 = c2 + k.dot(c.data(), z0.data(), m);
    const double det = a11 * a22 - a12 * a21;
    if (!(std::abs(det) > 1e-300)) break;
    const double ds1 = (r1 * a22 - r2 * a12) / det;
    const double ds2 = (a11 * r2 - a21 * r1) / det;
    // delta u = -z0 + ds1 z1 + ds2 z2
    std::vector<double> du = z0;
    k.scal(du.data(), -1.0, m);
    k.axpy(du.data(), ds1, z1.data(), m);
    k.axpy(du.data(), ds2, z2.data(), m);
    double step = 1.0;
    bool accepted = false;
    std::vector<double> u_try(m);
    for (int half = 0; half < 10; ++half) {
      for (std::size_t i = 0; i < m; ++i) u_try[i] = u[i] + step * du[i];
      const double s1t = s1 + step * ds1;
      const double s2t = s2 + step * ds2;
      const double fn_try = kkt_residual(pb, u_try, s1t, s2t, f, bu, c);
      if (fn_try <= (1.0 - 1e-4 * step) * fn) {
        u.swap(u_try);
        s1 = s1t;
        s2 = s2t;
        stall = (fn_try > 0.5 * fn) ? stall + 1 : 0;
        fn = fn_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || stall >= 5) break;
  }
  st.u = std::move(u);
  st.sigma1 = s1;
  st.sigma2 = s2;
  st.fnorm = fn;
  if (fn <= 1e-12 * fscale) st.converged = true;
  return st;
}

/// Projected Sobolev descent for the constrained Rayleigh quotient, starting
/// from an admissible field. Drives toward the minimizer but stalls short of
/// stationarity; kkt_newton finishes the job.
int constrained_descent(const Problem& pb, std::vector<double>& u, int max_iter) {
  const auto& k = kernels::ops();
  const std::size_t m = u.size();
  double step = 1.0;
  Field uf{pb.grid, {}}, au;
  double q_cur = kInf;
  int flat = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    uf.v = u;
    stiffness_apply(uf, au);
    const double q = k.dot(u.data(), au.v.data(), m);
    if (q_cur < kInf && q > q_cur - 1e-11 * std::abs(q_cur) && ++flat >= 3) break;
    if (q < q_cur) q_cur = q;
    std::vector<double> d = au.v;
    for (std::size_t i = 0; i < m; ++i) d[i] -= q * pb.wV[i] * u[i];
    pb.precond_solve(d);
    bool accepted = false;
    std::vector<double> u_try(m);
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < m; ++i) u_try[i] = std::abs(u[i] - step * d[i]);
      if (project_admissible(pb, u_try)) {
        uf.v = u_try;
        stiffness_apply(uf, au);
        const double q_try = k.dot(u_try.data(), au.v.data(), m);
        if (q_try < q_cur - 1e-12 * std::abs(q_cur)) {
          u.swap(u_try);
          q_cur = q_try;
          accepted = true;
          if (bt == 0) step *= 1.3;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return it;
}

/// Smooth seeded bump profile used to diversify multistart initials.
std::vector<double> bump_perturbation(const Problem& pb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& r = pb.grid->radius();
  const double rmax = pb.grid->extent();
  std::vector<double> f(r.size(), 1.0);
  for (int b = 0; b < 3; ++b) {
    const double center = unif(rng) * rmax;
    const double width = (0.1 + 0.4 * unif(rng)) * rmax;
    const double amp = 0.6 * (2.0 * unif(rng) - 1.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = std::abs(r[i] - center) / width;
      if (d < 1.0) {
        const double cosv = std::cos(1.5707963267948966 * d);
        f[i] += amp * cosv * cosv;
      }
    }
  }
  return f;
}

}  // namespace

ConstrainedEigResult lambda1_constrained(const Problem& pb) {
  const SolverOptions& opt = pb.spec.solver;
  const auto& k = kernels::ops();
  const std::size_t m = pb.size();
  ConstrainedEigResult out;

  EigenResult base = principal_eigenpair(pb.grid, pb.V, nullptr, opt);
  if (base.infinite) {
    out.infinite = true;
    return out;
  }

  // Scale that separates "G vanishes" from "G is genuinely positive".
  std::vector<double> wh_abs(m);
  for (std::size_t i = 0; i < m; ++i) wh_abs[i] = std::abs(pb.wh[i]);
  const double g_base = sign_integral(pb, base.e1.v);
  const double g_scale = k.wabs_pow_sum(wh_abs.data(), base.e1.data(), pb.p, m) + 1e-300;

  if (g_base <= 1e-12 * g_scale) {
    // Unconstrained minimizer already admissible: the two levels coincide.
    out.value = base.value;
    out.sigma1 = base.value;
    out.active = false;
    out.constraint_value = g_base;
    out.u0 = base.e1;
    out.converged = base.converged;
    out.kkt_residual = base.residual;
    out.iterations = base.iterations;
    return out;
  }

  RegionMask mask = minus_zero_region(pb.h);
  EigenResult masked = principal_eigenpair(pb.grid, pb.V, &mask, opt);

  if (!pb.h.any_negative) {
    // With h >= 0 the admissible set is exactly the fields supported in
    // {h <= 0}; the masked eigenpair is the answer (or the set is empty).
    if (masked.infinite) {
      out.infinite = true;
      return out;
    }
    out.value = masked.value;
    out.sigma1 = masked.value;
    out.active = true;
    out.u0 = masked.e1;
    out.converged = masked.converged;
    out.constraint_value = sign_integral(pb, masked.e1.v);
    out.kkt_residual = masked.residual;
    out.iterations = masked.iterations;
    return out;
  }

  if (!pb.grid->tridiagonal())
    throw std::runtime_error("sign-constrained level with sign-changing h requires a radial grid");

  // Multistart initials, all projected into the admissible set.
  std::vector<std::vector<double>> starts;
  if (!masked.infinite) starts.push_back(masked.e1.v);
  {
    std::vector<double> u = base.e1.v;
    if (project_admissible(pb, u)) starts.push_back(u);
  }
  for (std::uint64_t s = 0; s < 2 && !starts.empty(); ++s) {
    std::vector<double> u = starts[0];
    const std::vector<double> f = bump_perturbation(pb, opt.seed * 7919 + s + 1);
    for (std::size_t i = 0; i < m; ++i) u[i] *= f[i];
    if (project_admissible(pb, u)) starts.push_back(u);
  }
  if (starts.empty()) {
    out.converged = false;
    return out;
  }

  const double slack = 1e-6 * (1.0 + std::abs(base.value));
  bool have_valid = false;
  KktState best;
  int total_iters = 0;

  // Multiplier estimates from the current iterate, then the Newton solve.
  auto polish = [&](std::vector<double> u) {
    Field uf{pb.grid, u}, au;
    stiffness_apply(uf, au);
    double s1 = k.dot(u.data(), au.v.data(), m);
    std::vector<double> c(m, 0.0);
    k.pow_term_add(c.data(), pb.wh.data(), u.data(), pb.p - 2.0, m);
    const double cc = k.dot(c.data(), c.data(), m);
    double s2 = 0.0;
    if (cc > 1e-300) {
      double num = k.dot(au.v.data(), c.data(), m);
      for (std::size_t i = 0; i < m; ++i) num -= s1 * pb.wV[i] * u[i] * c[i];
      s2 = num / cc;
    }
    return kkt_newton(pb, std::move(u), s1, s2);
  };

  for (std::size_t si = 0; si < starts.size(); ++si) {
    std::vector<double> u = starts[si];
    total_iters += constrained_descent(pb, u, 300);
    KktState st = polish(std::move(u));
    total_iters += st.iterations;

    // A sign-changing stationary point is never the minimizer: folding to
    // |u| keeps both constraints and lowers the Dirichlet energy, so restart
    // the descent from the folded iterate. At strong positive-part scaling
    // every plain start funnels into such a point.
    for (int fold = 0; fold < 2; ++fold) {
      double fmax = 0.0, fmin = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        fmax = std::max(fmax, st.u[i]);
        fmin = std::min(fmin, st.u[i]);
      }
      if (!(fmin < -1e-8 * fmax)) break;
      std::vector<double> folded = st.u;
      for (double& x : folded) x = std::abs(x);
      total_iters += constrained_descent(pb, folded, 200);
      KktState st2 = polish(std::move(folded));
      total_iters += st2.iterations;
      if (!st2.converged || st2.sigma1 > st.sigma1 + slack) break;
      st = std::move(st2);
    }

    double umax = 0.0, umin = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      umax = std::max(umax, st.u[i]);
      umin = std::min(umin, st.u[i]);
    }
    const double bn_err = std::abs(1.0 - b_norm_sq(pb, st.u));
    const double gval = sign_integral(pb, st.u);
    const bool sandwich = st.sigma1 >= base.value - slack &&
                          (masked.infinite || st.sigma1 <= masked.value + slack);
    const bool valid = st.converged && bn_err <= 1e-8 &&
                       std::abs(gval) <= 1e-8 * (g_scale + 1.0) && sandwich &&
                       umin >= -1e-8 * umax;
    if (valid && (!have_valid || st.sigma1 < best.sigma1)) {
      have_valid = true;
      best = std::move(st);
    } else if (!have_valid && st.fnorm < best.fnorm) {
      best = std::move(st);
    }
    if (have_valid && si == 0) break;  // the canonical start validated; done
  }

  out.iterations = total_iters;
  out.converged = have_valid;
  out.sigma1 = best.sigma1;
  out.sigma2 = best.sigma2;
  out.value = best.sigma1;
  out.active = true;
  out.kkt_residual = best.fnorm;
  out.constraint_value = sign_integral(pb, best.u);
  out.normalization_error = std::abs(1.0 - b_norm_sq(pb, best.u));
  for (std::size_t i = 0; i < m; ++i) best.u[i] = std::abs(best.u[i]);
  out.u0 = Field{pb.grid, std::move(best.u)};
  if (out.sigma2 < 0.0) {
    out.alpha = std::pow(-out.sigma2, 1.0 / (pb.p - 2.0));
    Field u1 = out.u0;
    kernels::ops().scal(u1.data(), out.alpha, m);
    StateVector s = make_state(pb, u1);
    out.threshold_residual = residual_dual_norm(pb, s, out.sigma1);
    out.threshold_solution = std::move(s.u);
  } else {
    out.sign_inconsistent = true;
  }
  return out;
}

MinimizeReport local_minimize(const Problem& pb, double lambda, const Field* init,
                              const Field* cap) {
  const SolverOptions& opt = pb.spec.solver;
  const auto& k = kernels::ops();
  const std::size_t m = pb.size();
  MinimizeReport rep;
  rep.lambda = lambda;

  EigenResult base = principal_eigenpair(pb.grid, pb.V, nullptr, opt);
  rep.lambda1 = base.infinite ? kInf : base.value;
  if (base.infinite || !(lambda > base.value)) {
    rep.feasible = false;
    rep.sigma = kInf;
    return rep;
  }

  const double g_e1 = sign_integral(pb, base.e1.v);
  const double a_e1 = base.value - lambda;  // < 0
  double t_star = 1.0;
  if (g_e1 > 0.0) t_star = std::pow(-a_e1 / g_e1, 1.0 / (pb.p - 2.0));

  Field u = make_field(pb.grid);
  if (init) {
    if (init->grid != pb.grid) throw std::invalid_argument("warm start not on the problem grid");
    u.v = init->v;
    for (std::size_t i = 0; i < m; ++i) u.v[i] = std::abs(u.v[i]);
  } else {
    u.v = base.e1.v;
    k.scal(u.data(), t_star, m);
  }
  if (cap) {
    if (cap->grid != pb.grid) throw std::invalid_argument("cap not on the problem grid");
    k.min_cap(u.data(), cap->data(), m);
  }

  // Pull the start into the open cone, blending toward the scaled ground state.
  for (int blend = 0; blend <= 10; ++blend) {
    StateVector s = make_state(pb, u);
    if (s.intV_u2 > 0.0 && s.grad_sq < lambda * s.intV_u2) break;
    const double theta = blend < 10 ? 0.1 * (blend + 1) : 1.0;
    for (std::size_t i = 0; i < m; ++i)
      u.v[i] = (1.0 - theta) * u.v[i] + theta * t_star * base.e1.v[i];
    if (cap) k.min_cap(u.data(), cap->data(), m);
  }

  StateVector s = make_state(pb, u);
  double energy_cur = energy(s, lambda);
  std::vector<double> r(m), d(m);
  double step = 1.0;
  int it = 0;
  const int newton_budget = 30;
  bool cap_active = false;

  for (; it < opt.max_iterations; ++it) {
    residual_dual_vector(pb, s, lambda, r);
    d = r;
    pb.precond_solve(d);
    const double dual_sq = std::max(0.0, k.dot(r.data(), d.data(), m));
    rep.residual_dual = std::sqrt(dual_sq);
    rep.residual_scaled = rep.residual_dual / (1.0 + s.enorm());
    if (rep.residual_scaled <= 0.5 * opt.residual_tol) break;
    if (!cap && pb.grid->tridiagonal() && rep.residual_scaled <= 1e-3) break;  // Newton next

    bool accepted = false;
    Field u_try = make_field(pb.grid);
    for (int bt = 0; bt < 40; ++bt) {
      for (std::size_t i = 0; i < m; ++i) u_try.v[i] = std::abs(s.u.v[i] - step * d[i]);
      if (cap) k.min_cap(u_try.data(), cap->data(), m);
      StateVector s_try = make_state(pb, u_try);
      if (s_try.intV_u2 > 0.0 && s_try.grad_sq < lambda * s_try.intV_u2) {
        const double e_try = energy(s_try, lambda);
        const double want = bt < 20 ? energy_cur - 1e-4 * step * dual_sq : energy_cur;
        if (e_try < want) {
          s = std::move(s_try);
          energy_cur = e_try;
          accepted = true;
          if (bt == 0) step *= 1.5;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    // Exact minimization along the ray c -> I(c u): with a = grad^2 - lambda
    // int V u^2 < 0 and b = int h |u|^p > 0 the optimum is c = (-a/b)^{1/(p-2)}.
    // Jumping there removes the slow amplitude growth near the right window
    // edge, where the minimizer is orders of magnitude larger than the start.
    {
      const double a_ray = s.grad_sq - lambda * s.intV_u2;
      const double b_ray = s.intH_up;
      if (a_ray < 0.0 && b_ray > 0.0) {
        const double c = std::pow(-a_ray / b_ray, 1.0 / (pb.p - 2.0));
        if (std::abs(c - 1.0) > 1e-12) {
          k.scal(s.u.data(), c, m);
          s = make_state(pb, s.u);
          energy_cur = energy(s, lambda);
        }
      }
    }
    if (s.enorm() > opt.enorm_cap) {
      rep.unbounded = true;
      break;
    }
  }

  if (cap) {
    cap_active = false;
    for (std::size_t i = 0; i < m; ++i)
      if (s.u.v[i] >= cap->v[i] - 1e-14 * (1.0 + cap->v[i])) {
        cap_active = true;
        break;
      }
  }

  // Newton polish on the strong-form Hessian, radial grids without an active cap.
  if (!rep.unbounded && pb.grid->tridiagonal() && !cap_active && it < opt.max_iterations) {
    const Tri tri = stiffness_tri(*pb.grid);
    std::vector<double> diag(m);
    for (int nit = 0; nit < newton_budget; ++nit) {
      residual_dual_vector(pb, s, lambda, r);
      d = r;
      pb.precond_solve(d);
      const double dual = std::sqrt(std::max(0.0, k.dot(r.data(), d.data(), m)));
      rep.residual_dual = dual;
      rep.residual_scaled = dual / (1.0 + s.enorm());
      if (rep.residual_scaled <= 1e-13) break;
      diag = tri.diag;
      for (std::size_t i = 0; i < m; ++i) {
        const double w = std::pow(std::abs(s.u.v[i]), pb.p - 2.0);
        diag[i] += -lambda * pb.wV[i] + (pb.p - 1.0) * pb.wh[i] * w;
      }
      TriLU lu;
      lu.factor(tri.off, diag, tri.off);
      if (!lu.valid()) break;
      std::vector<double> delta = r;
      lu.solve(delta);
      double tstep = 1.0;
      bool accepted = false;
      Field u_try = make_field(pb.grid);
      for (int half = 0; half < 8; ++half) {
        for (std::size_t i = 0; i < m; ++i) u_try.v[i] = s.u.v[i] - tstep * delta[i];
        StateVector s_try = make_state(pb, u_try);
        std::vector<double> r_try(m), d_try(m);
        residual_dual_vector(pb, s_try, lambda, r_try);
        d_try = r_try;
        pb.precond_solve(d_try);
        const double dual_try = std::sqrt(std::max(0.0, k.dot(r_try.data(), d_try.data(), m)));
        if (dual_try < dual) {
          s = std::move(s_try);
          rep.residual_dual = dual_try;
          rep.residual_scaled = dual_try / (1.0 + s.enorm());
          accepted = true;
          break;
        }
        tstep *= 0.5;
      }
      ++it;
      if (!accepted) break;
    }
    // cheap positivity repair: the minimizer is a |.|-invariant energy level
    bool any_neg = false;
    for (std::size_t i = 0; i < m; ++i)
      if (s.u.v[i] < 0.0) {
        any_neg = true;
        break;
      }
    if (any_neg) {
      Field u_abs = s.u;
      for (std::size_t i = 0; i < m; ++i) u_abs.v[i] = std::abs(u_abs.v[i]);
      s = make_state(pb, u_abs);
      residual_dual_vector(pb, s, lambda, r);
      d = r;
      pb.precond_solve(d);
      rep.residual_dual = std::sqrt(std::max(0.0, k.dot(r.data(), d.data(), m)));
      rep.residual_scaled = rep.residual_dual / (1.0 + s.enorm());
    }
  }

  energy_cur = energy(s, lambda);
  rep.sigma = energy_cur;
  rep.iterations = it;
  rep.converged = !rep.unbounded && rep.residual_scaled <= opt.residual_tol;
  if (s.intV_u2 > 0.0) {
    const double margin = (lambda * s.intV_u2 - s.grad_sq) / (lambda * s.intV_u2);
    rep.boundary_contradiction = margin <= 1e-10;
  }
  rep.state = std::move(s);
  return rep;
}

Field random_cone_init(const Problem& pb, double lambda, std::uint64_t seed) {
  const SolverOptions& opt = pb.spec.solver;
  EigenResult base = principal_eigenpair(pb.grid, pb.V, nullptr, opt);
  if (base.infinite || !(lambda > base.value))
    throw std::invalid_argument("cone is empty at this lambda");
  const std::size_t m = pb.size();
  Field u = base.e1;
  const std::vector<double> f = bump_perturbation(pb, seed);
  for (std::size_t i = 0; i < m; ++i) u.v[i] *= f[i];
  for (int blend = 0; blend < 12; ++blend) {
    Rayleigh rq = rayleigh_quotient(u, pb.V);
    if (rq.admissible && rq.value < lambda) break;
    for (std::size_t i = 0; i < m; ++i) u.v[i] = 0.7 * u.v[i] + 0.3 * base.e1.v[i];
  }
  StateVector s = make_state(pb, u);
  const double a = s.grad_sq - lambda * s.intV_u2;  // < 0 in the cone
  double t = 1.0;
  if (s.intH_up > 0.0 && a < 0.0) t = std::pow(-a / s.intH_up, 1.0 / (pb.p - 2.0));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unif(0.8, 1.25);
  t *= unif(rng);
  kernels::ops().scal(u.data(), t, m);
  return u;
}

MonotonicityCheck energy_monotonicity_check(std::vector<std::pair<double, double>> samples,
                                            double tol) {
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  MonotonicityCheck out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double lo = samples[i].second, hi = samples[j].second;
      const double allow = tol * (1.0 + std::max(std::abs(lo), std::abs(hi)));
      if (hi > lo + allow) {
        out.ok = false;
        out.lo_index = i;
        out.hi_index = j;
        out.lo_energy = lo;
        out.hi_energy = hi;
        return out;
      }
    }
  return out;
}

}  // namespace ellab
