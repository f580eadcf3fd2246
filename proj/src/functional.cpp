#include "ellab/functional.hpp"

#include <cmath>
#include <stdexcept>

#include "ellab/kernels.hpp"

namespace ellab {

namespace {

void combine(const std::vector<double>& quad, const std::vector<double>& w,
             std::vector<double>& out) {
  out.resize(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) out[i] = quad[i] * w[i];
}

}  // namespace

Problem Problem::build(GridPtr grid, WeightField v, WeightField h, double p,
                       SolverOptions solver, double lambda) {
  if (p <= 2.0) throw std::invalid_argument("superlinearity requires p > 2");
  Problem pb;
  pb.grid = std::move(grid);
  pb.V = std::move(v);
  pb.h = std::move(h);
  pb.p = p;
  pb.spec.p = p;
  pb.spec.lambda = lambda;
  pb.spec.solver = solver;
  pb.spec.grid = pb.grid->params();
  if (!pb.V.any_positive) throw std::invalid_argument("V^+ vanishes on the sampled grid");
  if (!pb.h.any_positive)
    pb.warnings.push_back("h has no positive part: superlinear coercivity is absent and "
                          "energy minima may be unbounded");
  const auto& quad = pb.grid->quad_weights();
  combine(quad, pb.V.value.v, pb.wV);
  combine(quad, pb.V.minus.v, pb.wVm);
  combine(quad, pb.h.value.v, pb.wh);
  combine(quad, pb.h.plus.v, pb.whp);
  if (pb.grid->tridiagonal()) {
    std::vector<double> diag = pb.grid->stiff_diag();
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] += quad[i];
    std::vector<double> off(pb.grid->bands()[0].g.size());
    for (std::size_t i = 0; i < off.size(); ++i) off[i] = -pb.grid->bands()[0].g[i];
    auto f = std::make_shared<TriFactor>();
    f->factor(diag, off);
    pb.kfactor_ = std::move(f);
  }
  return pb;
}

Problem Problem::build(const ProblemSpec& spec) {
  auto grid = Grid::build(spec.grid);
  WeightField v = sample_weight(spec.V, grid);
  WeightField h = sample_weight(spec.h, grid);
  Problem pb = build(grid, std::move(v), std::move(h), spec.p, spec.solver, spec.lambda);
  pb.spec = spec;
  pb.embedding = check_embedding(spec.V, spec.h, grid->dimension(), spec.p, grid);
  if (pb.embedding.cond3 == Verdict::fails)
    pb.warnings.push_back("h^- growth control fails: compactness of the negative-part embedding is not justified");
  if (pb.embedding.cond3 == Verdict::undetermined)
    pb.warnings.push_back("h^- growth control undetermined for this weight family");
  if (pb.embedding.cond4 == Verdict::fails)
    pb.warnings.push_back("V^+ growth control fails: the weighted L2 embedding is not justified");
  return pb;
}

void Problem::precond_solve(std::vector<double>& rhs) const {
  if (kfactor_) {
    kfactor_->solve(rhs);
    return;
  }
  const auto& quad = grid->quad_weights();
  const std::size_t m = grid->size();
  std::vector<double> jac = grid->stiff_diag();
  for (std::size_t i = 0; i < m; ++i) jac[i] += quad[i];
  Field tmp;
  tmp.grid = grid;
  std::vector<double> x(m, 0.0);
  auto apply = [&](const double* in, double* out) {
    tmp.v.assign(in, in + m);
    Field o;
    stiffness_apply(tmp, o);
    for (std::size_t i = 0; i < m; ++i) out[i] = o.v[i] + quad[i] * in[i];
  };
  if (conjugate_gradient(m, apply, rhs.data(), x.data(), jac, 1e-12, 10000) < 0)
    throw std::runtime_error("preconditioner solve did not converge");
  rhs = std::move(x);
}

double Problem::h1_inner(const Field& x, const Field& y) const {
  return gradient_form(x, y) + kernels::ops().dot3(grid->quad_weights().data(), x.data(), y.data(),
                                                   x.size());
}

double StateVector::enorm() const {
  return std::sqrt(grad_sq) + std::sqrt(intVm_u2) + std::pow(intHp_up, 1.0 / p);
}

StateVector make_state(const Problem& pb, Field u) {
  if (u.grid != pb.grid) throw std::invalid_argument("field not on the problem grid");
  const auto& k = kernels::ops();
  StateVector s;
  s.p = pb.p;
  s.grad_sq = gradient_norm_sq(u);
  const std::size_t m = u.size();
  s.intV_u2 = k.dot3(pb.wV.data(), u.data(), u.data(), m);
  s.intVm_u2 = k.dot3(pb.wVm.data(), u.data(), u.data(), m);
  s.intH_up = k.wabs_pow_sum(pb.wh.data(), u.data(), pb.p, m);
  s.intHp_up = k.wabs_pow_sum(pb.whp.data(), u.data(), pb.p, m);
  s.nonneg = true;
  for (std::size_t i = 0; i < m; ++i)
    if (u.v[i] < 0.0) {
      s.nonneg = false;
      break;
    }
  s.u = std::move(u);
  return s;
}

double energy(const StateVector& s, double lambda) {
  return 0.5 * s.grad_sq - 0.5 * lambda * s.intV_u2 + s.intH_up / s.p;
}

void residual_dual_vector(const Problem& pb, const StateVector& s, double lambda,
                          std::vector<double>& out) {
  const auto& k = kernels::ops();
  Field au;
  stiffness_apply(s.u, au);
  out = std::move(au.v);
  const std::size_t m = out.size();
  std::vector<double> lam_wv(m);
  for (std::size_t i = 0; i < m; ++i) lam_wv[i] = lambda * pb.wV[i];
  k.fms_vec(out.data(), lam_wv.data(), s.u.data(), m);
  k.pow_term_add(out.data(), pb.wh.data(), s.u.data(), pb.p - 2.0, m);
}

Field first_variation(const Problem& pb, const StateVector& s, double lambda) {
  std::vector<double> r;
  residual_dual_vector(pb, s, lambda, r);
  Field out = make_field(pb.grid);
  const auto& quad = pb.grid->quad_weights();
  for (std::size_t i = 0; i < r.size(); ++i) out.v[i] = r[i] / quad[i];
  return out;
}

double second_variation(const Problem& pb, const StateVector& s, double lambda,
                        const Field& phi) {
  if (phi.grid != pb.grid) throw std::invalid_argument("direction not on the problem grid");
  const auto& k = kernels::ops();
  const std::size_t m = phi.size();
  double val = gradient_norm_sq(phi);
  val -= lambda * k.dot3(pb.wV.data(), phi.data(), phi.data(), m);
  std::vector<double> hw(m);
  const double q = pb.p - 2.0;
  for (std::size_t i = 0; i < m; ++i)
    hw[i] = pb.wh[i] * std::pow(std::abs(s.u.v[i]), q);
  val += (pb.p - 1.0) * k.dot3(hw.data(), phi.data(), phi.data(), m);
  return val;
}

Rayleigh rayleigh_quotient(const Field& u, const WeightField& v) {
  const auto& k = kernels::ops();
  const std::size_t m = u.size();
  if (u.grid != v.value.grid) throw std::invalid_argument("field and weight on different grids");
  double norm2 = k.dot(u.data(), u.data(), m);
  if (norm2 == 0.0) throw std::invalid_argument("Rayleigh quotient of the zero field");
  const auto& quad = u.grid->quad_weights();
  std::vector<double> wv(m);
  for (std::size_t i = 0; i < m; ++i) wv[i] = quad[i] * v.value.v[i];
  const double denom = k.dot3(wv.data(), u.data(), u.data(), m);
  Rayleigh r;
  if (denom <= 0.0) return r;
  r.admissible = true;
  r.value = gradient_norm_sq(u) / denom;
  return r;
}

double residual_dual_norm(const Problem& pb, const StateVector& s, double lambda) {
  std::vector<double> r;
  residual_dual_vector(pb, s, lambda, r);
  std::vector<double> kr = r;
  pb.precond_solve(kr);
  const double v = kernels::ops().dot(r.data(), kr.data(), r.size());
  return std::sqrt(std::max(v, 0.0));
}

double residual_scaled(const Problem& pb, const StateVector& s, double lambda) {
  return residual_dual_norm(pb, s, lambda) / (1.0 + s.enorm());
}

EnergyReport energy_report(const Problem& pb, const StateVector& s, double lambda,
                           const Field& direction) {
  EnergyReport rep;
  rep.value = energy(s, lambda);
  rep.residual_dual = residual_dual_norm(pb, s, lambda);
  rep.second_variation = second_variation(pb, s, lambda, direction);
  return rep;
}

WeightField weight_from_values(Field values) {
  WeightField out;
  const std::size_t m = values.size();
  out.plus = make_field(values.grid);
  out.minus = make_field(values.grid);
  out.minus_zero_mask.resize(m);
  out.zero_mask.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = values.v[i];
    if (!std::isfinite(v)) throw std::invalid_argument("weight values must be finite");
    out.plus.v[i] = v > 0.0 ? v : 0.0;
    out.minus.v[i] = v < 0.0 ? -v : 0.0;
    out.minus_zero_mask[i] = v <= 0.0 ? 1 : 0;
    out.zero_mask[i] = v == 0.0 ? 1 : 0;
    out.any_negative = out.any_negative || v < 0.0;
    out.any_positive = out.any_positive || v > 0.0;
  }
  out.value = std::move(values);
  return out;
}

}  // namespace ellab
