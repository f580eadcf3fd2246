#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

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

WeightSpec bump(double center, double radius, double sign, double amplitude) {
  WeightComponent c;
  c.family = WeightFamily::bump;
  c.center = center;
  c.radius = radius;
  c.sign = sign;
  c.amplitude = amplitude;
  return WeightSpec{{c}, 1.0};
}

}  // namespace

TEST_CASE("power law sampling matches the analytic profile") {
  GridPtr g = build_radial_grid(3, 1.0, 64);
  WeightField w = sample_weight(power_law(2.0, 4.0), g);
  const auto& r = g->radius();
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(w.value.v[i] == doctest::Approx(2.0 * std::pow(r[i], 4.0)).epsilon(1e-15));
    CHECK(w.minus.v[i] == 0.0);
  }
  CHECK(w.any_positive);
  CHECK(!w.any_negative);
}

TEST_CASE("sign decomposition is exact") {
  GridPtr g = build_radial_grid(3, 2.0, 200);
  WeightField w = sample_weight(piecewise({0.3, 0.5}, {-1.0, 0.0, 1.0}), g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(w.value.v[i] == w.plus.v[i] - w.minus.v[i]);
    CHECK(w.plus.v[i] >= 0.0);
    CHECK(w.minus.v[i] >= 0.0);
    CHECK((w.minus_zero_mask[i] == 1) == (w.value.v[i] <= 0.0));
    CHECK((w.zero_mask[i] == 1) == (w.value.v[i] == 0.0));
  }
  CHECK(w.any_negative);
  CHECK(w.any_positive);
}

TEST_CASE("zero plateaus own their breakpoints") {
  // 256 uniform cells on (0, 2] put nodes at (k+1)/128: 0.25 and 0.5 land on
  // nodes exactly, so the mask boundary is decided by the tie rule, not by
  // float noise.
  GridPtr g = build_radial_grid(3, 2.0, 256);
  WeightField w = sample_weight(piecewise({0.25, 0.5}, {-1.0, 0.0, 1.0}), g);
  const auto& r = g->radius();
  CHECK(r[31] == 0.25);
  CHECK(r[63] == 0.5);
  CHECK(w.value.v[31] == 0.0);
  CHECK(w.value.v[63] == 0.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(w.minus_zero_mask[i] == (i <= 63 ? 1 : 0));
    CHECK(w.zero_mask[i] == (i >= 31 && i <= 63 ? 1 : 0));
  }
  RegionMask mz = minus_zero_region(w);
  CHECK(mz.tag == RegionMask::Tag::minus_zero);
  CHECK(mz.keep == w.minus_zero_mask);
  RegionMask z = zero_region(w);
  CHECK(z.tag == RegionMask::Tag::zero);
  CHECK(z.keep == w.zero_mask);
}

TEST_CASE("bumps vanish identically outside their support") {
  GridPtr g = build_radial_grid(3, 1.0, 400);
  WeightField w = sample_weight(bump(0.4, 0.2, -1.0, 2.0), g);
  const auto& r = g->radius();
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (std::abs(r[i] - 0.4) >= 0.2) {
      CHECK(w.value.v[i] == 0.0);
    } else {
      CHECK(w.value.v[i] < 0.0);
    }
  }
  CHECK(eval_radial(bump(0.4, 0.2, -1.0, 2.0), 0.4) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(eval_radial(bump(0.4, 0.2, -1.0, 2.0), 0.3) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(eval_radial(bump(0.4, 0.2, -1.0, 2.0), 0.7) == 0.0);
}

TEST_CASE("eval_radial agrees with grid sampling") {
  GridPtr g = build_radial_grid(3, 2.0, 100);
  WeightSpec spec = piecewise({0.3, 0.5}, {-1.0, 0.0, 1.0});
  spec.components.push_back(power_law(0.5, 2.0).components[0]);
  WeightField w = sample_weight(spec, g);
  const auto& r = g->radius();
  for (std::size_t i = 0; i < g->size(); i += 7)
    CHECK(w.value.v[i] == eval_radial(spec, r[i]));
}

TEST_CASE("positive-part amplification") {
  GridPtr g = build_radial_grid(3, 2.0, 300);
  WeightSpec h = piecewise({0.3, 0.5}, {-1.0, 0.0, 1.0});
  WeightField base = sample_weight(h, g);

  WeightSpec h2 = perturb_h(h, 2.0);
  WeightField scaled = sample_weight(h2, g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(scaled.plus.v[i] == doctest::Approx(2.0 * base.plus.v[i]).epsilon(1e-15));
    CHECK(scaled.minus.v[i] == base.minus.v[i]);
  }
  CHECK(scaled.minus_zero_mask == base.minus_zero_mask);
  CHECK(scaled.zero_mask == base.zero_mask);

  WeightField comp = sample_weight(perturb_h(perturb_h(h, 2.0), 3.0), g);
  WeightField six = sample_weight(perturb_h(h, 6.0), g);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(comp.value.v[i] == six.value.v[i]);

  WeightField off = sample_weight(perturb_h(h, 0.0), g);
  CHECK(!off.any_positive);
  CHECK(off.any_negative);

  CHECK_THROWS_AS(perturb_h(h, -1.0), std::invalid_argument);
}

TEST_CASE("degenerate weight specs are rejected") {
  GridPtr g = build_radial_grid(3, 1.0, 64);
  CHECK_THROWS_AS(sample_weight(WeightSpec{}, g), std::invalid_argument);
  WeightSpec neg = power_law(1.0, 2.0);
  neg.mu_scale_positive = -0.5;
  CHECK_THROWS_AS(sample_weight(neg, g), std::invalid_argument);

  WeightComponent box;
  box.family = WeightFamily::box_expression;
  box.c0 = 1.0;
  CHECK_THROWS_AS(sample_weight(WeightSpec{{box}, 1.0}, g), std::invalid_argument);
  CHECK_THROWS_AS(eval_radial(WeightSpec{{box}, 1.0}, 0.5), std::invalid_argument);

  WeightComponent pw;
  pw.family = WeightFamily::piecewise_radial;
  pw.breakpoints = {0.5};
  pw.values = {1.0};  // needs two values
  CHECK_THROWS_AS(sample_weight(WeightSpec{{pw}, 1.0}, g), std::invalid_argument);
}

TEST_CASE("growth-rate verdict flips at the critical tail exponent") {
  GridPtr g = build_radial_grid(3, 2.0, 64);
  const WeightSpec v = power_law(1.0, 0.0);
  // For V ~ 1 and p = 4 in dimension 3 the tail criterion needs
  // beta - alpha > (N/2)(p - 2) = 3, strictly.
  struct Case {
    double beta;
    Verdict want;
  };
  const Case cases[] = {{2.0, Verdict::fails},
                        {2.9, Verdict::fails},
                        {3.0, Verdict::fails},
                        {3.1, Verdict::holds},
                        {4.0, Verdict::holds}};
  for (const auto& c : cases) {
    EmbeddingReport rep = check_embedding(v, power_law(1.0, c.beta), 3, 4.0, g);
    CHECK(rep.knuutz == c.want);
    CHECK(rep.cond4 == c.want);  // the integrability alternative fails for V ~ 1
    CHECK(rep.eq48 == Verdict::fails);
    CHECK(rep.exponents_known);
    CHECK(rep.alpha == 0.0);
    CHECK(rep.beta == c.beta);
    CHECK(rep.exponent_rhs == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(rep.hminus_zero);
    CHECK(rep.cond3 == Verdict::holds);
    CHECK(rep.limsup_proxy[0] == 0.0);
  }
}

TEST_CASE("tail integral evidence tracks the verdict") {
  GridPtr g = build_radial_grid(3, 2.0, 64);
  const WeightSpec v = power_law(1.0, 0.0);

  EmbeddingReport conv = check_embedding(v, power_law(1.0, 4.0), 3, 4.0, g);
  const double c1 = conv.knuutz_tail[1] - conv.knuutz_tail[0];
  const double c2 = conv.knuutz_tail[2] - conv.knuutz_tail[1];
  CHECK(c1 > 0.0);
  CHECK(c2 < c1);  // increments shrink: the tail integral converges

  EmbeddingReport div = check_embedding(v, power_law(1.0, 2.0), 3, 4.0, g);
  const double d1 = div.knuutz_tail[1] - div.knuutz_tail[0];
  const double d2 = div.knuutz_tail[2] - div.knuutz_tail[1];
  CHECK(d2 > d1);  // increments grow: the tail integral diverges
}

TEST_CASE("negative-part conditions") {
  GridPtr g = build_radial_grid(3, 2.0, 64);
  const WeightSpec v = power_law(1.0, 0.0);

  // Compactly supported negative part, subcritical p: both alternatives hold.
  WeightSpec h = power_law(1.0, 0.0);
  h.components.push_back(bump(0.2, 0.1, -1.0, 3.0).components[0]);
  EmbeddingReport rep = check_embedding(v, h, 3, 4.0, g);
  CHECK(!rep.hminus_zero);
  CHECK(rep.eq46 == Verdict::holds);
  CHECK(rep.eq47 == Verdict::holds);
  CHECK(rep.cond3 == Verdict::holds);
  CHECK(rep.positivity_radius >= 0.3);
  CHECK(rep.positivity_radius < 0.5);

  // Supercritical p: no control of the negative-part integral.
  EmbeddingReport sup = check_embedding(v, h, 3, 7.0, g);
  CHECK(sup.eq46 == Verdict::fails);
  CHECK(sup.eq47 == Verdict::fails);
  CHECK(sup.cond3 == Verdict::fails);

  // Nonnegative h: control is vacuous regardless of tails.
  EmbeddingReport nn = check_embedding(v, power_law(1.0, 1.0), 3, 4.0, g);
  CHECK(nn.hminus_zero);
  CHECK(nn.cond3 == Verdict::holds);

  // Compactly supported V: the tail condition holds trivially.
  EmbeddingReport cv = check_embedding(bump(0.0, 1.0, 1.0, 1.0), power_law(1.0, 1.0), 3, 4.0, g);
  CHECK(cv.knuutz == Verdict::holds);
  CHECK(cv.eq48 == Verdict::holds);
  CHECK(cv.cond4 == Verdict::holds);
}

TEST_CASE("box weights leave tail conditions undetermined") {
  GridPtr g = build_box_grid(1.0, 24);
  WeightComponent hc;
  hc.family = WeightFamily::box_expression;
  hc.c0 = -0.5;
  hc.cr2 = 1.0;
  EmbeddingReport rep =
      check_embedding(power_law(1.0, 0.0), WeightSpec{{hc}, 1.0}, 2, 4.0, g);
  CHECK(rep.cond3 == Verdict::undetermined);
  CHECK(rep.knuutz == Verdict::undetermined);
  CHECK(!rep.exponents_known);

  WeightField w = sample_weight(WeightSpec{{hc}, 1.0}, g);
  const auto& x = g->coord_x();
  const auto& y = g->coord_y();
  for (std::size_t i = 0; i < g->size(); i += 11)
    CHECK(w.value.v[i] ==
          doctest::Approx(-0.5 + x[i] * x[i] + y[i] * y[i]).epsilon(1e-15));

  CHECK_THROWS_AS(check_embedding(power_law(1.0, 0.0), power_law(1.0, 1.0), 3, 2.0, g),
                  std::invalid_argument);
}
