#include "ellab/eigen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ellab/kernels.hpp"
#include "ellab/linsolve.hpp"
#include "ellab/parallel.hpp"

namespace ellab {

namespace {

/// Dual-norm evaluator for a standalone grid: sqrt(r' (A+M)^{-1} r).
class KSolver {
 public:
  explicit KSolver(const GridPtr& grid) : grid_(grid) {
    const auto& quad = grid->quad_weights();
    if (grid->tridiagonal()) {
      std::vector<double> diag = grid->stiff_diag();
      for (std::size_t i = 0; i < diag.size(); ++i) diag[i] += quad[i];
      std::vector<double> off(grid->bands()[0].g.size());
      for (std::size_t i = 0; i < off.size(); ++i) off[i] = -grid->bands()[0].g[i];
      tri_.factor(diag, off);
      use_tri_ = true;
    } else {
      jac_ = grid->stiff_diag();
      for (std::size_t i = 0; i < jac_.size(); ++i) jac_[i] += quad[i];
    }
  }

  double dual_norm(const std::vector<double>& r) const {
    std::vector<double> kr = r;
    if (use_tri_) {
      tri_.solve(kr);
    } else {
      const std::size_t m = r.size();
      std::vector<double> x(m, 0.0);
      Field tmp;
      tmp.grid = grid_;
      auto apply = [&](const double* in, double* out) {
        tmp.v.assign(in, in + m);
        Field o;
        stiffness_apply(tmp, o);
        const auto& quad = grid_->quad_weights();
        for (std::size_t i = 0; i < m; ++i) out[i] = o.v[i] + quad[i] * in[i];
      };
      if (conjugate_gradient(m, apply, kr.data(), x.data(), jac_, 1e-11, 20000) < 0)
        throw std::runtime_error("dual-norm solve did not converge");
      kr = std::move(x);
    }
    const double v = kernels::ops().dot(r.data(), kr.data(), r.size());
    return std::sqrt(std::max(v, 0.0));
  }

 private:
  GridPtr grid_;
  TriFactor tri_;
  bool use_tri_ = false;
  std::vector<double> jac_;
};

std::vector<std::size_t> active_indices(std::size_t m, const RegionMask* mask) {
  std::vector<std::size_t> idx;
  idx.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    if (mask == nullptr || (i < mask->keep.size() && mask->keep[i])) idx.push_back(i);
  return idx;
}

/// Tridiagonal pencil (A - t B) restricted to an ascending index subset;
/// non-adjacent actives decouple, which the pivot sweeps handle natively.
struct TriPencil {
  std::vector<double> a_diag, a_off, b_diag;
};

TriPencil compress_radial(const GridPtr& grid, const std::vector<double>& wv,
                          const std::vector<std::size_t>& idx) {
  TriPencil t;
  const auto& diag = grid->stiff_diag();
  const auto& g = grid->bands()[0].g;
  const std::size_t k = idx.size();
  t.a_diag.resize(k);
  t.b_diag.resize(k);
  t.a_off.assign(k > 0 ? k - 1 : 0, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    t.a_diag[j] = diag[idx[j]];
    t.b_diag[j] = wv[idx[j]];
    if (j + 1 < k && idx[j + 1] == idx[j] + 1) t.a_off[j] = -g[idx[j]];
  }
  return t;
}

int pencil_neg_count(const TriPencil& t, double lam) {
  std::vector<double> shifted(t.a_diag.size());
  for (std::size_t i = 0; i < shifted.size(); ++i)
    shifted[i] = t.a_diag[i] - lam * t.b_diag[i];
  return sturm_count(shifted, t.a_off, 0.0);
}

void tri_apply(const TriPencil& t, const std::vector<double>& x, double lam,
               std::vector<double>& out) {
  const std::size_t k = x.size();
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double v = (t.a_diag[i] - lam * t.b_diag[i]) * x[i];
    if (i > 0) v += t.a_off[i - 1] * x[i - 1];
    if (i + 1 < k) v += t.a_off[i] * x[i + 1];
    out[i] = v;
  }
}

EigenResult solve_radial(const GridPtr& grid, const WeightField& v,
                         const std::vector<std::size_t>& idx, const SolverOptions& opt) {
  EigenResult res;
  const auto& quad = grid->quad_weights();
  std::vector<double> wv(grid->size());
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = quad[i] * v.value.v[i];
  TriPencil t = compress_radial(grid, wv, idx);
  const std::size_t k = idx.size();

  // Upper bound from single-node trial fields on {V > 0}.
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j)
    if (t.b_diag[j] > 0.0) hi = std::min(hi, t.a_diag[j] / t.b_diag[j]);
  if (!std::isfinite(hi)) {
    res.infinite = true;
    return res;
  }
  hi *= 1.0 + 1e-9;
  int expand = 0;
  while (pencil_neg_count(t, hi) < 1 && expand++ < 100) hi *= 2.0;
  if (pencil_neg_count(t, hi) < 1) throw std::logic_error("eigenvalue bracket not found");
  double lo = 0.0;
  int iters = 0;
  while (hi - lo > 1e-14 * hi && iters < 200) {
    const double mid = 0.5 * (lo + hi);
    if (pencil_neg_count(t, mid) >= 1)
      hi = mid;
    else
      lo = mid;
    ++iters;
  }
  const double lam_bis = 0.5 * (lo + hi);

  // Inverse iteration just below the eigenvalue.
  const double shift = lam_bis * (1.0 - 1e-9) - 1e-13;
  std::vector<double> diag(k), off(t.a_off);
  for (std::size_t j = 0; j < k; ++j) diag[j] = t.a_diag[j] - shift * t.b_diag[j];
  TriFactor f;
  f.factor(diag, off);
  std::vector<double> z(k, 1.0), rhs(k), az(k);
  KSolver ks(grid);
  double rq = lam_bis;
  const auto& kops = kernels::ops();
  for (int it = 0; it < 50; ++it) {
    for (std::size_t j = 0; j < k; ++j) rhs[j] = t.b_diag[j] * z[j];
    f.solve(rhs);
    const double nrm = std::sqrt(kops.dot(rhs.data(), rhs.data(), k));
    if (nrm == 0.0) break;
    for (std::size_t j = 0; j < k; ++j) z[j] = rhs[j] / nrm;
    const double zbz = kops.dot3(t.b_diag.data(), z.data(), z.data(), k);
    tri_apply(t, z, 0.0, az);
    const double zaz = kops.dot(z.data(), az.data(), k);
    if (zbz <= 0.0) continue;
    rq = zaz / zbz;
    // Residual of the full-grid pencil, masked rows only.
    std::vector<double> rfull(grid->size(), 0.0);
    for (std::size_t j = 0; j < k; ++j) rfull[idx[j]] = az[j] - rq * t.b_diag[j] * z[j];
    // Normalize to int V e^2 = 1 before measuring.
    const double scale = 1.0 / std::sqrt(zbz);
    for (auto& x : rfull) x *= scale;
    const double dn = ks.dual_norm(rfull);
    res.residual_history.push_back(dn);
    res.iterations = iters + it + 1;
    res.residual = dn;
    if (dn <= opt.residual_tol) break;
  }
  const double zbz = kops.dot3(t.b_diag.data(), z.data(), z.data(), k);
  if (zbz <= 0.0) {
    res.converged = false;
    res.value = lam_bis;
    return res;
  }
  res.value = rq;
  res.converged = res.residual <= opt.residual_tol && std::abs(rq - lam_bis) <= 1e-6 * lam_bis + 1e-12;
  res.e1 = make_field(grid);
  const double scale = 1.0 / std::sqrt(zbz);
  for (std::size_t j = 0; j < k; ++j) res.e1.v[idx[j]] = std::abs(z[j]) * scale;
  return res;
}

EigenResult solve_general(const GridPtr& grid, const WeightField& v,
                          const std::vector<std::size_t>& idx, const SolverOptions& opt) {
  EigenResult res;
  const std::size_t m = grid->size();
  const auto& quad = grid->quad_weights();
  const auto& kops = kernels::ops();
  std::vector<std::uint8_t> act(m, 0);
  for (std::size_t i : idx) act[i] = 1;
  std::vector<double> wv(m);
  for (std::size_t i = 0; i < m; ++i) wv[i] = act[i] ? quad[i] * v.value.v[i] : 0.0;

  Field tmp;
  tmp.grid = grid;
  auto apply_a = [&](const double* x, double* out) {
    tmp.v.assign(x, x + m);
    for (std::size_t i = 0; i < m; ++i)
      if (!act[i]) tmp.v[i] = 0.0;
    Field o;
    stiffness_apply(tmp, o);
    for (std::size_t i = 0; i < m; ++i) out[i] = act[i] ? o.v[i] : x[i];
  };
  std::vector<double> jac = grid->stiff_diag();
  for (std::size_t i = 0; i < m; ++i)
    if (!act[i]) jac[i] = 1.0;

  auto solve_a = [&](const std::vector<double>& b, std::vector<double>& x) {
    x.assign(m, 0.0);
    if (conjugate_gradient(m, apply_a, b.data(), x.data(), jac, 1e-12, 20000) < 0)
      throw std::runtime_error("stiffness solve did not converge");
  };

  // Lanczos for T = A^{-1} B, self-adjoint in the A-inner product.
  const int kmax = std::min<std::size_t>(80, idx.size());
  std::vector<std::vector<double>> vs, avs;
  std::vector<double> alpha, beta;
  std::vector<double> v0(m, 0.0);
  for (std::size_t i : idx) v0[i] = std::max(wv[i], quad[i] * 1e-3);
  std::vector<double> av(m);
  apply_a(v0.data(), av.data());
  double an = std::sqrt(std::max(kops.dot(v0.data(), av.data(), m), 0.0));
  if (an == 0.0) {
    res.infinite = true;
    return res;
  }
  for (std::size_t i = 0; i < m; ++i) {
    v0[i] /= an;
    av[i] /= an;
  }
  vs.push_back(v0);
  avs.push_back(av);
  std::vector<double> w(m), b_v(m);
  for (int j = 0; j < kmax; ++j) {
    for (std::size_t i = 0; i < m; ++i) b_v[i] = wv[i] * vs[j][i];
    solve_a(b_v, w);
    // Full A-reorthogonalization keeps the small pencil trustworthy.
    for (std::size_t rep = 0; rep < 2; ++rep) {
      for (std::size_t q = 0; q < vs.size(); ++q) {
        const double c = kops.dot(avs[q].data(), w.data(), m);
        kops.axpy(w.data(), -c, vs[q].data(), m);
        if (rep == 0 && q == vs.size() - 1) alpha.push_back(c);
      }
    }
    std::vector<double> aw(m);
    apply_a(w.data(), aw.data());
    const double bn = std::sqrt(std::max(kops.dot(w.data(), aw.data(), m), 0.0));
    if (bn < 1e-13) break;
    beta.push_back(bn);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] /= bn;
      aw[i] /= bn;
    }
    vs.push_back(w);
    avs.push_back(aw);
  }
  const std::size_t kk = alpha.size();
  if (kk == 0) {
    res.infinite = true;
    return res;
  }
  std::vector<double> off(beta.begin(), beta.begin() + (kk > 0 ? kk - 1 : 0));

  // Largest Ritz value of the small tridiagonal by bisection.
  double rad = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    double s = std::abs(alpha[i]);
    if (i > 0) s += std::abs(off[i - 1]);
    if (i + 1 < kk) s += std::abs(off[i]);
    rad = std::max(rad, s);
  }
  double lo = -rad - 1.0, hi = rad + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (std::abs(hi) + 1.0); ++it) {
    const double mid = 0.5 * (lo + hi);
    const int below = sturm_count(alpha, off, mid);
    if (below >= static_cast<int>(kk))
      hi = mid;  // all eigenvalues below mid
    else
      lo = mid;
  }
  const double mu_max = 0.5 * (lo + hi);
  if (mu_max <= 1e-13) {
    res.infinite = true;  // no B-positive direction found in the Krylov space
    return res;
  }

  // Ritz vector via small inverse iteration.
  std::vector<double> sd(kk), soff(off);
  for (std::size_t i = 0; i < kk; ++i) sd[i] = alpha[i] - mu_max * (1.0 - 1e-10) - 1e-14;
  TriFactor sf;
  sf.factor(sd, soff);
  std::vector<double> y(kk, 1.0);
  for (int it = 0; it < 3; ++it) {
    sf.solve(y);
    double n2 = std::sqrt(kops.dot(y.data(), y.data(), kk));
    for (auto& x : y) x /= n2;
  }
  std::vector<double> z(m, 0.0);
  for (std::size_t q = 0; q < kk; ++q) kops.axpy(z.data(), y[q], vs[q].data(), m);

  // Rayleigh refinement by shifted inverse iterations.
  KSolver ks(grid);
  double lam = 1.0 / mu_max;
  std::vector<double> az(m), bz(m), r(m), x(m);
  for (int it = 0; it < 40; ++it) {
    apply_a(z.data(), az.data());
    for (std::size_t i = 0; i < m; ++i) bz[i] = wv[i] * z[i];
    const double zaz = kops.dot(z.data(), az.data(), m);
    const double zbz = kops.dot(z.data(), bz.data(), m);
    if (zbz <= 0.0) break;
    lam = zaz / zbz;
    const double scale = 1.0 / std::sqrt(zbz);
    for (std::size_t i = 0; i < m; ++i) r[i] = act[i] ? (az[i] - lam * bz[i]) * scale : 0.0;
    const double dn = ks.dual_norm(r);
    res.residual_history.push_back(dn);
    res.residual = dn;
    res.iterations = it + 1;
    if (dn <= opt.residual_tol) break;
    double sigma = lam * 0.9;
    bool solved = false;
    for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
      auto apply_shift = [&](const double* in, double* out) {
        apply_a(in, out);
        for (std::size_t i = 0; i < m; ++i)
          if (act[i]) out[i] -= sigma * wv[i] * in[i];
      };
      std::vector<double> sj = jac;
      for (std::size_t i = 0; i < m; ++i)
        if (act[i]) sj[i] = std::max(sj[i] - sigma * wv[i], 1e-8 * sj[i]);
      x.assign(m, 0.0);
      if (conjugate_gradient(m, apply_shift, bz.data(), x.data(), sj, 1e-10, 20000) >= 0)
        solved = true;
      else
        sigma *= 0.7;
    }
    if (!solved) break;
    const double nrm = std::sqrt(kops.dot(x.data(), x.data(), m));
    if (nrm == 0.0) break;
    for (std::size_t i = 0; i < m; ++i) z[i] = x[i] / nrm;
  }
  for (std::size_t i = 0; i < m; ++i) bz[i] = wv[i] * z[i];
  const double zbz = kops.dot(z.data(), bz.data(), m);
  if (zbz <= 0.0) {
    res.converged = false;
    res.value = lam;
    return res;
  }
  res.value = lam;
  res.converged = res.residual <= opt.residual_tol;
  res.e1 = make_field(grid);
  const double scale = 1.0 / std::sqrt(zbz);
  for (std::size_t i = 0; i < m; ++i) res.e1.v[i] = act[i] ? std::abs(z[i]) * scale : 0.0;
  return res;
}

}  // namespace

EigenResult principal_eigenpair(const GridPtr& grid, const WeightField& v,
                                const RegionMask* mask, const SolverOptions& opt) {
  if (v.value.grid != grid) throw std::invalid_argument("weight sampled on a different grid");
  const std::vector<std::size_t> idx = active_indices(grid->size(), mask);
  bool any_pos = false;
  for (std::size_t i : idx)
    if (v.value.v[i] > 0.0) {
      any_pos = true;
      break;
    }
  if (idx.empty() || !any_pos) {
    EigenResult res;
    res.infinite = true;
    return res;
  }
  if (grid->tridiagonal()) return solve_radial(grid, v, idx, opt);
  return solve_general(grid, v, idx, opt);
}

std::vector<EigenSweepRow> eigen_convergence_sweep(const ProblemSpec& spec,
                                                   const std::vector<double>& r_values) {
  std::vector<EigenSweepRow> rows(r_values.size());
  util::parallel_for(r_values.size(), [&](std::size_t i) {
    GridParams gp = spec.grid;
    gp.extent = r_values[i];
    GridPtr grid = Grid::build(gp);
    WeightField v = sample_weight(spec.V, grid);
    EigenResult res = principal_eigenpair(grid, v, nullptr, spec.solver);
    rows[i] = {r_values[i], res.value};
  });
  return rows;
}

}  // namespace ellab
