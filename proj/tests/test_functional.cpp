#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "ellab/functional.hpp"
#include "ellab/grid.hpp"
#include "ellab/weights.hpp"

using namespace ellab;

namespace {

WeightSpec power_law(double amplitude, double exponent) {
  WeightComponent c;
  c.family = WeightFamily::power_law;
  c.amplitude = amplitude;
  c.exponent = exponent;
  return WeightSpec{{c}, 1.0};
}

WeightSpec piecewise(std::vector<double> breaks, std::vector<double> values) {
  WeightComponent c;
  c.family = WeightFamily::piecewise_radial;
  c.breakpoints = std::move(breaks);
  c.values = std::move(values);
  return WeightSpec{{c}, 1.0};
}

/// Sign-changing reference problem on the ball of radius 2: V = 1 and h
/// negative inside r < 0.3, zero on [0.3, 0.5], positive outside.
Problem reference_problem(int n) {
  ProblemSpec spec;
  spec.grid.kind = GridKind::radial;
  spec.grid.dimension = 3;
  spec.grid.extent = 2.0;
  spec.grid.nodes = n;
  spec.p = 4.0;
  spec.V = power_law(1.0, 0.0);
  spec.h = piecewise({0.3, 0.5}, {-1.0, 0.0, 1.0});
  return Problem::build(spec);
}

Field smooth_bump(const GridPtr& grid, double center, double width, double amp) {
  return sample_profile(grid, [=](double r) {
    const double d = (r - center) / width;
    return std::abs(d) < 1.0 ? amp * std::pow(1.0 - d * d, 2.0) : 0.0;
  });
}

/// Manufactured critical point u* = (1 - r^2)^2 on the unit ball with V = 1:
/// h is chosen from the analytic Laplacian so the continuum first variation
/// vanishes identically, and the discrete dual residual is pure
/// discretization error.
struct Manufactured {
  Problem pb;
  StateVector state;
};

Manufactured manufactured(int dim, int n, double lambda) {
  GridPtr grid = build_radial_grid(dim, 1.0, n);
  Field ustar = sample_profile(grid, [](double r) {
    const double q = 1.0 - r * r;
    return q * q;
  });
  Field hval = sample_profile(grid, [dim, lambda](double r) {
    const double q = 1.0 - r * r;
    const double lap = (4.0 * dim + 8.0) * r * r - 4.0 * dim;
    return (lap + lambda * q * q) / (q * q * q * q * q * q);
  });
  Field vval = sample_profile(grid, [](double) { return 1.0; });
  Manufactured m{Problem::build(grid, weight_from_values(vval), weight_from_values(hval), 4.0,
                                {}, lambda),
                 {}};
  m.state = make_state(m.pb, ustar);
  return m;
}

}  // namespace

TEST_CASE("state scalars of simple fields") {
  Problem pb = reference_problem(400);
  StateVector z = make_state(pb, make_field(pb.grid));
  CHECK(z.grad_sq == 0.0);
  CHECK(z.intV_u2 == 0.0);
  CHECK(z.intH_up == 0.0);
  CHECK(z.enorm() == 0.0);
  CHECK(energy(z, 3.0) == 0.0);
  CHECK(z.nonneg);

  Field u = smooth_bump(pb.grid, 0.8, 0.5, 1.0);
  StateVector s = make_state(pb, u);
  CHECK(s.grad_sq == doctest::Approx(gradient_norm_sq(u)).epsilon(1e-14));
  CHECK(s.intV_u2 == doctest::Approx(integral_pow(u, 2.0)).epsilon(1e-12));
  CHECK(s.intVm_u2 == 0.0);  // V = 1 has no negative part
  CHECK(s.intHp_up > 0.0);
  CHECK(s.nonneg);

  // h < 0 only inside r < 0.3, where this bump vanishes.
  CHECK(s.intH_up == doctest::Approx(s.intHp_up).epsilon(1e-13));
}

TEST_CASE("energy homogeneity and lambda linearity") {
  Problem pb = reference_problem(300);
  Field u = smooth_bump(pb.grid, 0.4, 0.35, 1.3);
  StateVector s = make_state(pb, u);

  Field u2 = u;
  for (auto& x : u2.v) x *= 2.0;
  StateVector s2 = make_state(pb, u2);
  CHECK(s2.grad_sq == doctest::Approx(4.0 * s.grad_sq).epsilon(1e-13));
  CHECK(s2.intV_u2 == doctest::Approx(4.0 * s.intV_u2).epsilon(1e-13));
  CHECK(s2.intH_up == doctest::Approx(16.0 * s.intH_up).epsilon(1e-13));

  const double lam1 = 2.0, lam2 = 3.25;
  CHECK(energy(s, lam1) - energy(s, lam2) ==
        doctest::Approx(0.5 * (lam2 - lam1) * s.intV_u2).epsilon(1e-13));

  // quadratic + quartic split for p = 4
  const double quad = 0.5 * s.grad_sq - 0.5 * lam1 * s.intV_u2;
  const double quart = 0.25 * s.intH_up;
  CHECK(energy(s, lam1) == doctest::Approx(quad + quart).epsilon(1e-13));
  CHECK(energy(s2, lam1) == doctest::Approx(4.0 * quad + 16.0 * quart).epsilon(1e-12));
}

TEST_CASE("sign flips leave the energy invariant") {
  Problem pb = reference_problem(300);
  Field u = smooth_bump(pb.grid, 0.6, 0.4, 1.0);
  Field uf = u;
  std::mt19937_64 rng(5);
  for (auto& x : uf.v)
    if (rng() & 1) x = -x;
  StateVector s = make_state(pb, u);
  StateVector sf = make_state(pb, uf);
  CHECK(!sf.nonneg);
  CHECK(sf.intV_u2 == doctest::Approx(s.intV_u2).epsilon(1e-13));
  CHECK(sf.intH_up == doctest::Approx(s.intH_up).epsilon(1e-13));
  // flipping signs can only add interface gradient energy
  CHECK(sf.grad_sq >= s.grad_sq - 1e-12);
}

TEST_CASE("manufactured residual measures discretization error") {
  Manufactured coarse = manufactured(3, 2000, 2.0);
  Manufactured fine = manufactured(3, 4000, 2.0);
  const double dc = residual_dual_norm(coarse.pb, coarse.state, 2.0);
  const double df = residual_dual_norm(fine.pb, fine.state, 2.0);
  CHECK(df / fine.state.enorm() < 1e-3);
  // halving the mesh width divides the dual residual by about four
  const double ratio = dc / df;
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.5);
}

TEST_CASE("finite differences confirm first and second variations") {
  Problem pb = reference_problem(500);
  const double lambda = 2.8;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> cdist(0.2, 1.6);
  std::uniform_real_distribution<double> wdist(0.15, 0.6);
  std::uniform_real_distribution<double> adist(-1.0, 1.0);
  const auto& quad = pb.grid->quad_weights();

  double worst_grad = 0.0, worst_hess = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Field u = smooth_bump(pb.grid, cdist(rng), wdist(rng), adist(rng) + 1.2);
    Field phi = smooth_bump(pb.grid, cdist(rng), wdist(rng), adist(rng));
    StateVector s = make_state(pb, u);

    // directional derivative via the dual vector
    std::vector<double> r(pb.size());
    residual_dual_vector(pb, s, lambda, r);
    double pairing = 0.0;
    for (std::size_t i = 0; i < pb.size(); ++i) pairing += r[i] * phi.v[i];

    const double dir_scale = 1.0 + std::sqrt(gradient_norm_sq(phi));
    auto energy_at = [&](double t) {
      Field ut = u;
      for (std::size_t i = 0; i < pb.size(); ++i) ut.v[i] += t * phi.v[i];
      return energy(make_state(pb, ut), lambda);
    };

    // first difference: truncation ~ eps^2, roundoff ~ 1e-14 / eps
    const double eps1 = 1e-5 * (1.0 + s.enorm()) / dir_scale;
    const double fd1 = (energy_at(eps1) - energy_at(-eps1)) / (2.0 * eps1);
    worst_grad = std::max(worst_grad,
                          std::abs(fd1 - pairing) / (1.0 + std::abs(pairing)));

    // second difference needs a larger step: roundoff grows like 1e-14 / eps^2
    const double eps2 = 3e-4 * (1.0 + s.enorm()) / dir_scale;
    const double fd2 =
        (energy_at(eps2) - 2.0 * energy(s, lambda) + energy_at(-eps2)) / (eps2 * eps2);
    const double sv = second_variation(pb, s, lambda, phi);
    worst_hess = std::max(worst_hess, std::abs(fd2 - sv) / (1.0 + std::abs(sv)));

    // the strong form pairs with phi through the quadrature inner product
    Field fv = first_variation(pb, s, lambda);
    double strong = 0.0;
    for (std::size_t i = 0; i < pb.size(); ++i) strong += quad[i] * fv.v[i] * phi.v[i];
    CHECK(strong == doctest::Approx(pairing).epsilon(1e-10));
  }
  CHECK(worst_grad < 1e-5);
  CHECK(worst_hess < 1e-5);
}

TEST_CASE("second variation along the field itself") {
  Problem pb = reference_problem(400);
  Field u = smooth_bump(pb.grid, 0.7, 0.5, 0.9);
  StateVector s = make_state(pb, u);
  const double lambda = 3.0;
  const double direct = s.grad_sq - lambda * s.intV_u2 + 3.0 * s.intH_up;
  CHECK(second_variation(pb, s, lambda, u) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("dual and scaled residual norms") {
  Problem pb = reference_problem(400);
  Field u = smooth_bump(pb.grid, 0.5, 0.4, 1.0);
  StateVector s = make_state(pb, u);
  const double lambda = 2.5;
  const double dual = residual_dual_norm(pb, s, lambda);
  CHECK(dual > 0.0);
  CHECK(residual_scaled(pb, s, lambda) ==
        doctest::Approx(dual / (1.0 + s.enorm())).epsilon(1e-13));

  // dual norm is the H1-preconditioned length of the dual vector
  std::vector<double> r(pb.size());
  residual_dual_vector(pb, s, lambda, r);
  std::vector<double> d = r;
  pb.precond_solve(d);
  double quad_form = 0.0;
  for (std::size_t i = 0; i < pb.size(); ++i) quad_form += r[i] * d[i];
  CHECK(dual == doctest::Approx(std::sqrt(quad_form)).epsilon(1e-12));

  EnergyReport er = energy_report(pb, s, lambda, u);
  CHECK(er.value == doctest::Approx(energy(s, lambda)).epsilon(1e-13));
  CHECK(er.residual_dual == doctest::Approx(dual).epsilon(1e-12));
  CHECK(er.second_variation ==
        doctest::Approx(second_variation(pb, s, lambda, u)).epsilon(1e-12));
}

TEST_CASE("H1 preconditioner solves its own operator") {
  Problem pb = reference_problem(350);
  Field x = smooth_bump(pb.grid, 0.9, 0.6, 1.1);
  // forward apply: (A + M) x with M the quadrature mass diagonal
  Field ax = make_field(pb.grid);
  stiffness_apply(x, ax);
  const auto& quad = pb.grid->quad_weights();
  std::vector<double> rhs(pb.size());
  for (std::size_t i = 0; i < pb.size(); ++i) rhs[i] = ax.v[i] + quad[i] * x.v[i];
  pb.precond_solve(rhs);
  for (std::size_t i = 0; i < pb.size(); ++i)
    CHECK(rhs[i] == doctest::Approx(x.v[i]).epsilon(1e-9));

  Field y = smooth_bump(pb.grid, 0.4, 0.3, 0.8);
  CHECK(pb.h1_inner(x, y) == doctest::Approx(pb.h1_inner(y, x)).epsilon(1e-12));
  CHECK(pb.h1_inner(x, x) > 0.0);
}

TEST_CASE("Rayleigh quotient basics") {
  Problem pb = reference_problem(300);
  Field u = smooth_bump(pb.grid, 0.6, 0.5, 1.0);
  Rayleigh rq = rayleigh_quotient(u, pb.V);
  CHECK(rq.admissible);
  CHECK(rq.value > 0.0);

  Field u3 = u;
  for (auto& x : u3.v) x *= 3.0;
  CHECK(rayleigh_quotient(u3, pb.V).value == doctest::Approx(rq.value).epsilon(1e-13));

  WeightField negV = sample_weight(power_law(-1.0, 0.0), pb.grid);
  CHECK(!rayleigh_quotient(u, negV).admissible);

  CHECK_THROWS_AS(rayleigh_quotient(make_field(pb.grid), pb.V), std::invalid_argument);
}

TEST_CASE("problem construction guards") {
  GridPtr g = build_radial_grid(3, 1.0, 64);
  WeightField one = sample_weight(power_law(1.0, 0.0), g);
  WeightField negone = sample_weight(power_law(-1.0, 0.0), g);

  CHECK_THROWS_AS(Problem::build(g, one, one, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Problem::build(g, negone, one, 4.0), std::invalid_argument);

  // h without positive part is allowed but flagged
  Problem pb = Problem::build(g, one, negone, 4.0);
  CHECK(!pb.warnings.empty());

  // mismatched grids are rejected
  Problem ok = Problem::build(g, one, one, 4.0);
  GridPtr g2 = build_radial_grid(3, 1.0, 65);
  CHECK_THROWS_AS(make_state(ok, make_field(g2)), std::invalid_argument);

  // spec-driven build records embedding diagnostics and warnings
  ProblemSpec spec;
  spec.grid.dimension = 3;
  spec.grid.extent = 2.0;
  spec.grid.nodes = 128;
  spec.p = 4.0;
  spec.V = power_law(1.0, 0.0);
  spec.h = power_law(1.0, 2.0);  // tail growth too slow for V ~ 1
  Problem built = Problem::build(spec);
  CHECK(built.embedding.cond4 == Verdict::fails);
  CHECK(!built.warnings.empty());
}

TEST_CASE("states recompute identically") {
  Problem pb = reference_problem(300);
  Field u = smooth_bump(pb.grid, 0.5, 0.45, 1.0);
  StateVector a = make_state(pb, u);
  StateVector b = make_state(pb, u);
  CHECK(a.grad_sq == b.grad_sq);
  CHECK(a.intV_u2 == b.intV_u2);
  CHECK(a.intH_up == b.intH_up);
  CHECK(a.intHp_up == b.intHp_up);
  CHECK(a.enorm() == b.enorm());
}
