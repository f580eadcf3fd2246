#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ellab/eigen.hpp"
#include "ellab/functional.hpp"
#include "ellab/grid.hpp"
#include "ellab/minimize.hpp"
#include "ellab/mountainpass.hpp"
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

Problem reference_problem(int n) {
  ProblemSpec spec;
  spec.grid.dimension = 3;
  spec.grid.extent = 2.0;
  spec.grid.nodes = n;
  spec.p = 4.0;
  spec.V = power_law(1.0, 0.0);
  spec.h = piecewise({0.3, 0.5}, {-1.0, 0.0, 1.0});
  return Problem::build(spec);
}

struct Window {
  double l1 = 0.0;
  double l1h = 0.0;
};

Window window_of(const Problem& pb) {
  EigenResult base = principal_eigenpair(pb.grid, pb.V, nullptr, pb.spec.solver);
  ConstrainedEigResult ce = lambda1_constrained(pb);
  REQUIRE(ce.converged);
  return {base.value, ce.value};
}

double e_distance(const Problem& pb, const Field& a, const Field& b) {
  Field d = a;
  for (std::size_t i = 0; i < d.size(); ++i) d.v[i] -= b.v[i];
  return make_state(pb, d).enorm();
}

}  // namespace

TEST_CASE("endpoint bump satisfies both defining inequalities") {
  Problem pb = reference_problem(800);
  Window w = window_of(pb);
  const double lambda = 0.5 * (w.l1 + w.l1h);
  Field phi = find_endpoint(pb, lambda);

  // supported where h < 0 (inside r < 0.3)
  const auto& r = pb.grid->radius();
  for (std::size_t i = 0; i < pb.size(); ++i)
    if (r[i] >= 0.3) CHECK(phi.v[i] == 0.0);

  StateVector s = make_state(pb, phi);
  CHECK(energy(s, lambda) <= 0.0);
  Rayleigh rq = rayleigh_quotient(phi, pb.V);
  REQUIRE(rq.admissible);
  CHECK(rq.value > w.l1h);
}

TEST_CASE("saddle search finds a positive level with small residual") {
  Problem pb = reference_problem(800);
  Window w = window_of(pb);
  const double lambda = 0.5 * (w.l1 + w.l1h);
  Field phi = find_endpoint(pb, lambda);

  MountainPassReport mp = mountain_pass(pb, lambda, phi);
  REQUIRE(!mp.level_collapsed);
  CHECK(mp.converged);
  CHECK(mp.level > 0.0);
  CHECK(mp.residual_scaled <= 1e-5);
  CHECK(energy(mp.v, lambda) == doctest::Approx(mp.level).epsilon(1e-10));

  // the critical point is nonnegative and distinct from zero
  for (std::size_t i = 0; i < pb.size(); ++i) CHECK(mp.v.u.v[i] >= -1e-12);
  CHECK(mp.v.enorm() > 1e-3);

  // second variation along the critical point itself is negative: a saddle,
  // not a local minimizer (identity (I'' v, v) = (p - 2 - ... ) reduces to
  // 2 int h |v|^p with the Euler equation; check the quadratic form directly)
  CHECK(second_variation(pb, mp.v, lambda, mp.v.u) < 0.0);

  // endpoint data is echoed
  CHECK(mp.endpoint_energy <= 0.0);
  CHECK(mp.endpoint_rayleigh > w.l1h);

  // the recorded path maximum never rises once refinement has settled
  REQUIRE(!mp.max_energy_history.empty());
  for (std::size_t i = static_cast<std::size_t>(mp.last_insertion_iteration) + 1;
       i + 1 < mp.max_energy_history.size(); ++i)
    CHECK(mp.max_energy_history[i + 1] <=
          mp.max_energy_history[i] + 1e-9 * (1.0 + std::abs(mp.max_energy_history[i])));

  // path snapshots keep the endpoints pinned
  REQUIRE(!mp.path_history.empty());
  for (const auto& path : mp.path_history) {
    REQUIRE(path.size() >= 8);
    for (double x : path.front().v) CHECK(x == 0.0);
    for (std::size_t i = 0; i < pb.size(); ++i) CHECK(path.back().v[i] == phi.v[i]);
  }
}

TEST_CASE("the level is stable under path refinement") {
  Problem pb = reference_problem(500);
  Window w = window_of(pb);
  const double lambda = 0.5 * (w.l1 + w.l1h);
  Field phi = find_endpoint(pb, lambda);

  MountainPassReport coarse = mountain_pass(pb, lambda, phi, 33);
  MountainPassReport fine = mountain_pass(pb, lambda, phi, 66);
  REQUIRE(coarse.converged);
  REQUIRE(fine.converged);
  CHECK(std::abs(coarse.level - fine.level) <= 1e-2 * std::abs(coarse.level));
}

TEST_CASE("ordering: the saddle dominates the re-minimized lower solution") {
  Problem pb = reference_problem(800);
  Window w = window_of(pb);
  const double lambda = 0.5 * (w.l1 + w.l1h);

  MinimizeReport mn = local_minimize(pb, lambda);
  REQUIRE(mn.converged);
  Field phi = find_endpoint(pb, lambda);
  MountainPassReport mp = mountain_pass(pb, lambda, phi);
  REQUIRE(mp.converged);

  // strict energy ordering around zero
  CHECK(mn.sigma < 0.0);
  CHECK(mp.level > 0.0);

  // the two critical points are far apart in the energy norm
  CHECK(e_distance(pb, mp.v.u, mn.state.u) > 1e-2 * (1.0 + mn.state.enorm()));

  OrderedPair op = order_pair(pb, lambda, mn.state, mp.v);
  CHECK(op.converged);
  CHECK(op.min_gap >= -1e-6);
  for (std::size_t i = 0; i < pb.size(); ++i)
    CHECK(mp.v.u.v[i] >= op.u.u.v[i] - 1e-6);

  // re-minimization returns essentially the same lower solution
  CHECK(e_distance(pb, op.u.u, mn.state.u) <= 1e-4 * (1.0 + mn.state.enorm()));
  CHECK(std::abs(energy(op.u, lambda) - mn.sigma) <= 1e-6 * (1.0 + std::abs(mn.sigma)));
}

TEST_CASE("threshold pair at the right window endpoint") {
  Problem pb = reference_problem(800);
  ThresholdPair tp = threshold_pair(pb);
  CHECK(tp.converged);

  const double scale = 1.0 + tp.u1.enorm();
  // u1 solves the equation at lambda with energy exactly balancing
  CHECK(std::abs(tp.energy_u1) <= 1e-6 * scale);
  CHECK(std::abs(tp.sign_integral_u1) <= 1e-6 * scale);
  CHECK(std::abs(tp.second_variation_u1) <= 1e-5 * scale);

  // u0 is a strict minimizer below it
  CHECK(tp.energy_u0 < 0.0);
  CHECK(tp.min_gap >= -1e-6);

  // cross-check the recorded scalars against the states
  CHECK(tp.energy_u0 == doctest::Approx(energy(tp.u0, tp.lambda)).epsilon(1e-12));
  CHECK(tp.energy_u1 == doctest::Approx(energy(tp.u1, tp.lambda)).epsilon(1e-12));
  CHECK(tp.sign_integral_u1 ==
        doctest::Approx(weighted_integral(pb.h.value, tp.u1.u, 4.0)).epsilon(1e-10));
  CHECK(tp.second_variation_u1 ==
        doctest::Approx(second_variation(pb, tp.u1, tp.lambda, tp.u1.u)).epsilon(1e-10));
}

TEST_CASE("saddle searches refuse geometries without a barrier") {
  ProblemSpec spec;
  spec.grid.dimension = 3;
  spec.grid.extent = 2.0;
  spec.grid.nodes = 400;
  spec.p = 4.0;
  spec.V = power_law(1.0, 0.0);
  spec.h = piecewise({0.5}, {0.0, 1.0});  // h >= 0: no negative region
  Problem pb = Problem::build(spec);

  CHECK_THROWS_AS(find_endpoint(pb, 10.0), Refusal);
  CHECK_THROWS_AS(threshold_pair(pb), Refusal);

  Problem ref = reference_problem(400);
  Field phi = find_endpoint(ref, 2.8);
  CHECK_THROWS_AS(mountain_pass(ref, 2.8, phi, 4), std::invalid_argument);
}
