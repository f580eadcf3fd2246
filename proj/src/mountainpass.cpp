#include "ellab/mountainpass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ellab/kernels.hpp"
#include "ellab/linsolve.hpp"

namespace ellab {

namespace {

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

double path_energy(const Problem& pb, const Field& u, double lambda) {
  return energy(make_state(pb, u), lambda);
}

double enorm_diff(const Problem& pb, const Field& a, const Field& b) {
  Field d = make_field(pb.grid);
  for (std::size_t i = 0; i < d.size(); ++i) d.v[i] = a.v[i] - b.v[i];
  return make_state(pb, d).enorm();
}

double dual_residual(const Problem& pb, const StateVector& s, double lambda,
                     std::vector<double>& r, std::vector<double>& d) {
  residual_dual_vector(pb, s, lambda, r);
  d = r;
  pb.precond_solve(d);
  return std::sqrt(std::max(0.0, kernels::ops().dot(r.data(), d.data(), r.size())));
}

}  // namespace

Field find_endpoint(const Problem& pb, double lambda) {
  if (!pb.h.any_negative)
    throw Refusal("h is nonnegative: the positive solution is unique and no saddle geometry exists");
  const std::size_t m = pb.size();
  const auto& hval = pb.h.value.v;

  ConstrainedEigResult ce = lambda1_constrained(pb);
  const double lambda1h = ce.infinite ? std::numeric_limits<double>::infinity() : ce.value;

  // Bump geometry concentrated in the negative region.
  double center_r = 0.0, center_x = 0.0, center_y = 0.0, radius = 0.0;
  const bool radial = pb.grid->kind() == GridKind::radial;
  if (radial) {
    const auto& r = pb.grid->radius();
    std::size_t best_lo = 0, best_hi = 0;
    std::size_t i = 0;
    while (i < m) {
      if (hval[i] < 0.0) {
        std::size_t j = i;
        while (j + 1 < m && hval[j + 1] < 0.0) ++j;
        if (r[j] - r[i] >= r[best_hi] - r[best_lo]) {
          best_lo = i;
          best_hi = j;
        }
        i = j + 1;
      } else {
        ++i;
      }
    }
    if (hval[best_lo] >= 0.0) throw Refusal("no grid node with h < 0");
    center_r = 0.5 * (r[best_lo] + r[best_hi]);
    radius = std::max(0.45 * (r[best_hi] - r[best_lo]), 1.5 * (r[1] - r[0]));
  } else {
    const auto& x = pb.grid->coord_x();
    const auto& y = pb.grid->coord_y();
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (hval[i] < 0.0) {
        sx += x[i];
        sy += y[i];
        ++count;
      }
    if (count == 0) throw Refusal("no grid node with h < 0");
    center_x = sx / count;
    center_y = sy / count;
    double spread = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (hval[i] < 0.0)
        spread = std::max(spread, std::hypot(x[i] - center_x, y[i] - center_y));
    radius = std::max(0.6 * spread, 3.0 * pb.grid->extent() /
                                        std::max(1, pb.grid->params().nodes - 1));
  }

  Field phi = make_field(pb.grid);
  for (int attempt = 0; attempt < 7; ++attempt) {
    for (std::size_t i = 0; i < m; ++i) {
      double d;
      if (radial)
        d = std::abs(pb.grid->radius()[i] - center_r) / radius;
      else
        d = std::hypot(pb.grid->coord_x()[i] - center_x, pb.grid->coord_y()[i] - center_y) / radius;
      if (d < 1.0) {
        const double c = std::cos(1.5707963267948966 * d);
        phi.v[i] = c * c;
      } else {
        phi.v[i] = 0.0;
      }
    }
    StateVector s = make_state(pb, phi);
    if (!(s.intH_up < 0.0)) throw std::runtime_error("endpoint bump lost its negative sign mass");
    const bool rq_ok = s.intV_u2 <= 0.0 || s.grad_sq > lambda1h * s.intV_u2 * (1.0 + 1e-9);
    if (rq_ok) {
      // Scale onto the far side of the energy barrier.
      const double a = s.grad_sq - lambda * s.intV_u2;
      double t = 1.0;
      if (a > 0.0) t = 1.05 * std::pow(-pb.p * a / (2.0 * s.intH_up), 1.0 / (pb.p - 2.0));
      kernels::ops().scal(phi.data(), t, m);
      StateVector check = make_state(pb, phi);
      if (energy(check, lambda) <= 0.0) return phi;
      throw std::runtime_error("endpoint scaling failed to reach non-positive energy");
    }
    radius *= 0.7;  // narrower bump, larger Rayleigh quotient
  }
  throw std::runtime_error("could not satisfy the endpoint Rayleigh condition");
}

MountainPassReport mountain_pass(const Problem& pb, double lambda, const Field& phi0,
                                 int path_nodes) {
  if (path_nodes < 8) throw std::invalid_argument("path_nodes must be at least 8");
  if (phi0.grid != pb.grid) throw std::invalid_argument("endpoint not on the problem grid");
  if (!pb.h.any_negative)
    throw Refusal("h is nonnegative: the positive solution is unique and no saddle geometry exists");
  const SolverOptions& opt = pb.spec.solver;
  const std::size_t m = pb.size();

  MountainPassReport rep;
  rep.lambda = lambda;
  rep.endpoint = phi0;
  {
    StateVector se = make_state(pb, phi0);
    rep.endpoint_energy = energy(se, lambda);
    Rayleigh rq = rayleigh_quotient(phi0, pb.V);
    rep.endpoint_rayleigh = rq.admissible ? rq.value : std::numeric_limits<double>::infinity();
    if (rep.endpoint_energy > 1e-12 * (1.0 + se.enorm()))
      throw std::invalid_argument("endpoint energy must be non-positive");
  }

  std::vector<Field> path(path_nodes, make_field(pb.grid));
  for (int j = 0; j < path_nodes; ++j) {
    const double t = double(j) / (path_nodes - 1);
    for (std::size_t i = 0; i < m; ++i) path[j].v[i] = t * phi0.v[i];
  }
  const std::size_t max_nodes = 4u * static_cast<std::size_t>(path_nodes);
  std::vector<double> en(path.size());
  auto energize = [&]() {
    en.resize(path.size());
    for (std::size_t j = 0; j < path.size(); ++j) en[j] = path_energy(pb, path[j], lambda);
  };
  energize();

  const int max_iter = std::min(3000, pb.spec.solver.max_iterations);
  const int snapshot_at[6] = {0, 10, 30, 100, 300, 1000};
  int last_insertion = -1;
  int armijo_fails = 0;
  double step = 1.0;
  std::vector<double> r(m), d(m);
  std::size_t jstar = 0;

  // Trust cap: a node may move at most about one segment length per
  // iteration. Unbounded energy descent at the ridge overshoots far past the
  // saddle, and the resulting chasm segments destroy the path geometry.
  const double seg_scale =
      std::max(1.0, make_state(pb, phi0).enorm()) / static_cast<double>(path_nodes);

  int it = 0;
  for (; it < max_iter; ++it) {
    for (int sa : snapshot_at)
      if (it == sa && rep.path_history.size() < 7) rep.path_history.push_back(path);

    // Re-maximize along the path: insert a segment midpoint if it dominates.
    if (path.size() < max_nodes) {
      double best_mid = -std::numeric_limits<double>::infinity();
      std::size_t best_seg = 0;
      Field mid = make_field(pb.grid), best_field = make_field(pb.grid);
      for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        for (std::size_t i = 0; i < m; ++i) mid.v[i] = 0.5 * (path[j].v[i] + path[j + 1].v[i]);
        const double e = path_energy(pb, mid, lambda);
        if (e > best_mid) {
          best_mid = e;
          best_seg = j;
          best_field.v = mid.v;
        }
      }
      const double node_max = *std::max_element(en.begin(), en.end());
      if (best_mid > node_max) {
        path.insert(path.begin() + best_seg + 1, best_field);
        en.insert(en.begin() + best_seg + 1, best_mid);
        last_insertion = it;
      }
    }

    jstar = 1;
    for (std::size_t j = 1; j + 1 < path.size(); ++j)
      if (en[j] > en[jstar]) jstar = j;
    rep.max_energy_history.push_back(en[jstar]);

    if (en[jstar] <= 1e-8) {
      rep.level_collapsed = true;
      break;
    }

    StateVector s = make_state(pb, path[jstar]);
    const double dual = dual_residual(pb, s, lambda, r, d);
    const double scaled = dual / (1.0 + s.enorm());
    if (scaled <= 2e-6) break;

    bool accepted = false;
    const double dual_sq = dual * dual;
    Field u_try = make_field(pb.grid);
    {
      Field df = make_field(pb.grid);
      df.v = d;
      const double dn = make_state(pb, df).enorm();
      if (step * dn > seg_scale) step = seg_scale / dn;
    }
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < m; ++i) u_try.v[i] = std::abs(path[jstar].v[i] - step * d[i]);
      const double e_try = path_energy(pb, u_try, lambda);
      const double want = bt < 15 ? en[jstar] - 1e-4 * step * dual_sq : en[jstar];
      if (e_try < want) {
        path[jstar].v = u_try.v;
        en[jstar] = e_try;
        accepted = true;
        if (bt == 0) step *= 1.4;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (++armijo_fails >= 3) break;
    } else {
      armijo_fails = 0;
    }

    // Arclength reparametrization keeps the nodes from clustering.
    if ((it + 1) % 10 == 0 && path.size() >= 3) {
      std::vector<double> arc(path.size(), 0.0);
      for (std::size_t j = 1; j < path.size(); ++j)
        arc[j] = arc[j - 1] + enorm_diff(pb, path[j], path[j - 1]);
      if (arc.back() > 0.0) {
        std::vector<Field> fresh(static_cast<std::size_t>(path_nodes), make_field(pb.grid));
        fresh.front().v = path.front().v;
        fresh.back().v = path.back().v;
        std::size_t seg = 0;
        for (int j = 1; j + 1 < path_nodes; ++j) {
          const double target = arc.back() * j / (path_nodes - 1);
          while (seg + 2 < path.size() && arc[seg + 1] < target) ++seg;
          const double span = arc[seg + 1] - arc[seg];
          const double w = span > 0.0 ? (target - arc[seg]) / span : 0.0;
          for (std::size_t i = 0; i < m; ++i)
            fresh[j].v[i] = (1.0 - w) * path[seg].v[i] + w * path[seg + 1].v[i];
        }
        std::vector<double> fresh_en(fresh.size());
        for (std::size_t j = 0; j < fresh.size(); ++j)
          fresh_en[j] = path_energy(pb, fresh[j], lambda);
        // Compare interior maxima (the endpoints are pinned at 0 and phi0):
        // resampling must not raise the ridge, and a material drop means the
        // ridge fell between fresh nodes, so keep the old sampling.
        double old_imax = -std::numeric_limits<double>::infinity();
        double new_imax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j + 1 < en.size(); ++j) old_imax = std::max(old_imax, en[j]);
        for (std::size_t j = 1; j + 1 < fresh_en.size(); ++j)
          new_imax = std::max(new_imax, fresh_en[j]);
        if (new_imax <= old_imax + 1e-12 * (1.0 + std::abs(old_imax)) &&
            old_imax - new_imax <= 0.1 * (1.0 + std::abs(old_imax))) {
          path = std::move(fresh);
          en = std::move(fresh_en);
        }
      }
    }
  }
  rep.iterations = it;

  if (rep.level_collapsed) {
    rep.converged = false;
    rep.last_insertion_iteration = last_insertion;
    return rep;
  }

  // Saddle polish: damped Newton on the full residual from the path maximum.
  // Recompute the argmax: insertions, descent, and reparametrization inside
  // the last iteration may have moved it since jstar was set.
  jstar = 1;
  for (std::size_t j = 1; j + 1 < path.size(); ++j)
    if (en[j] > en[jstar]) jstar = j;
  StateVector s = make_state(pb, path[jstar]);
  const double pre_level = energy(s, lambda);
  if (pb.grid->tridiagonal()) {
    const Tri tri = stiffness_tri(*pb.grid);
    StateVector cand = s;
    double dual = dual_residual(pb, cand, lambda, r, d);
    std::vector<double> diag(m);
    bool drifted = false;
    for (int nit = 0; nit < 40 && dual / (1.0 + cand.enorm()) > 1e-13; ++nit) {
      diag = tri.diag;
      for (std::size_t i = 0; i < m; ++i) {
        const double w = std::pow(std::abs(cand.u.v[i]), pb.p - 2.0);
        diag[i] += -lambda * pb.wV[i] + (pb.p - 1.0) * pb.wh[i] * w;
      }
      TriLU lu;
      lu.factor(tri.off, diag, tri.off);
      if (!lu.valid()) break;
      std::vector<double> delta = r;
      lu.solve(delta);
      double tstep = 1.0;
      bool accepted = false;
      for (int half = 0; half < 8; ++half) {
        Field u_try = make_field(pb.grid);
        for (std::size_t i = 0; i < m; ++i) u_try.v[i] = cand.u.v[i] - tstep * delta[i];
        StateVector s_try = make_state(pb, u_try);
        std::vector<double> r2(m), d2(m);
        const double dual_try = dual_residual(pb, s_try, lambda, r2, d2);
        if (dual_try < dual) {
          cand = std::move(s_try);
          dual = dual_try;
          r = std::move(r2);
          d = std::move(d2);
          accepted = true;
          break;
        }
        tstep *= 0.5;
      }
      if (!accepted) break;
    }
    const double post_level = energy(cand, lambda);
    drifted = std::abs(post_level - pre_level) > 0.2 * (1.0 + std::abs(pre_level));
    if (!drifted) {
      // keep the polished saddle, with tiny negatives folded back
      bool any_neg = false;
      for (std::size_t i = 0; i < m; ++i)
        if (cand.u.v[i] < 0.0) {
          any_neg = true;
          break;
        }
      if (any_neg) {
        Field u_abs = cand.u;
        for (std::size_t i = 0; i < m; ++i) u_abs.v[i] = std::abs(u_abs.v[i]);
        cand = make_state(pb, u_abs);
      }
      s = std::move(cand);
    }
  }

  rep.residual_dual = dual_residual(pb, s, lambda, r, d);
  rep.residual_scaled = rep.residual_dual / (1.0 + s.enorm());
  rep.level = energy(s, lambda);
  rep.converged = rep.residual_scaled <= opt.residual_tol && rep.level > 1e-8;
  rep.v = std::move(s);
  rep.last_insertion_iteration = last_insertion;
  if (rep.path_history.size() < 8) rep.path_history.push_back(path);
  return rep;
}

OrderedPair order_pair(const Problem& pb, double lambda, const StateVector& u_min,
                       const StateVector& v) {
  const std::size_t m = pb.size();
  Field start = make_field(pb.grid);
  for (std::size_t i = 0; i < m; ++i)
    start.v[i] = std::min(std::max(u_min.u.v[i], v.u.v[i]), v.u.v[i]);
  MinimizeReport rep = local_minimize(pb, lambda, &start, &v.u);
  OrderedPair out;
  out.converged = rep.converged;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i)
    out.min_gap = std::min(out.min_gap, v.u.v[i] - rep.state.u.v[i]);
  out.u = std::move(rep.state);
  return out;
}

ThresholdPair threshold_pair(const Problem& pb) {
  if (!pb.h.any_negative)
    throw Refusal("h is nonnegative: the threshold pair requires a sign-changing h");
  ConstrainedEigResult ce = lambda1_constrained(pb);
  if (ce.infinite) throw std::runtime_error("sign-constrained principal level is infinite");
  if (!ce.active)
    throw Refusal("sign constraint inactive: the two principal levels coincide and no pair exists");
  if (ce.sign_inconsistent || ce.threshold_solution.v.empty())
    throw std::runtime_error("constrained minimizer produced no threshold solution");

  ThresholdPair out;
  out.lambda = ce.value;
  const std::size_t m = pb.size();
  out.u1 = make_state(pb, ce.threshold_solution);
  out.energy_u1 = energy(out.u1, out.lambda);
  out.second_variation_u1 = second_variation(pb, out.u1, out.lambda, out.u1.u);
  out.sign_integral_u1 = kernels::ops().wabs_pow_sum(pb.wh.data(), out.u1.u.data(), pb.p, m);

  Field init = make_field(pb.grid);
  for (std::size_t i = 0; i < m; ++i) init.v[i] = 0.5 * out.u1.u.v[i];
  MinimizeReport rep = local_minimize(pb, out.lambda, &init, &out.u1.u);
  out.u0 = std::move(rep.state);
  out.energy_u0 = energy(out.u0, out.lambda);
  out.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i)
    out.min_gap = std::min(out.min_gap, out.u1.u.v[i] - out.u0.u.v[i]);
  out.converged = ce.converged && rep.converged;
  return out;
}

}  // namespace ellab
