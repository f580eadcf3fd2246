#include "ellab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ellab {

namespace {

double eval_piecewise(const WeightComponent& c, double r) {
  const auto& b = c.breakpoints;
  const auto& v = c.values;
  if (v.size() != b.size() + 1)
    throw std::invalid_argument("piecewise_radial needs one more value than breakpoints");
  // Exact breakpoint hits take the side with smaller magnitude (ties left),
  // so zero plateaus own their endpoints.
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (r == b[k]) return std::abs(v[k]) <= std::abs(v[k + 1]) ? v[k] : v[k + 1];
    if (r < b[k]) return v[k];
  }
  return v.back();
}

double eval_component(const WeightComponent& c, double r, double x, double y, bool is_box) {
  switch (c.family) {
    case WeightFamily::power_law:
      if (c.amplitude == 0.0) return 0.0;
      return c.amplitude * std::pow(r, c.exponent);
    case WeightFamily::bump: {
      const double d = is_box ? std::hypot(x - c.center, y - c.center_y)
                              : std::abs(r - c.center);
      if (d >= c.radius) return 0.0;
      const double t = std::cos(0.5 * std::numbers::pi * d / c.radius);
      return c.sign * c.amplitude * t * t;
    }
    case WeightFamily::piecewise_radial:
      return eval_piecewise(c, r);
    case WeightFamily::box_expression:
      if (!is_box) throw std::invalid_argument("box_expression requires a box grid");
      return c.c0 + c.cx * x + c.cy * y + c.cr2 * (x * x + y * y);
  }
  throw std::logic_error("unknown weight family");
}

double apply_mu(double raw, double mu) {
  if (mu == 1.0) return raw;
  return raw > 0.0 ? mu * raw : raw;
}

/// Behavior of the spec as r -> infinity.
struct Tail {
  enum class Kind { zero, power, unknown } kind = Kind::zero;
  double amp = 0.0;
  double exp = 0.0;
};

Tail analytic_tail(const WeightSpec& spec) {
  Tail t;
  // Collect persisting power terms: power_law components and the final value
  // of each piecewise family (a constant, exponent 0). Bumps vanish.
  std::vector<std::pair<double, double>> terms;  // (exp, amp)
  for (const auto& c : spec.components) {
    switch (c.family) {
      case WeightFamily::power_law:
        if (c.amplitude != 0.0) terms.emplace_back(c.exponent, c.amplitude);
        break;
      case WeightFamily::bump:
        break;
      case WeightFamily::piecewise_radial:
        if (!c.values.empty() && c.values.back() != 0.0) terms.emplace_back(0.0, c.values.back());
        break;
      case WeightFamily::box_expression:
        t.kind = Tail::Kind::unknown;
        return t;
    }
  }
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < terms.size();) {
    double amp = terms[i].second;
    std::size_t j = i + 1;
    while (j < terms.size() && terms[j].first == terms[i].first) amp += terms[j++].second;
    if (amp != 0.0) {
      t.kind = Tail::Kind::power;
      t.exp = terms[i].first;
      t.amp = amp;
      break;
    }
    i = j;
  }
  if (t.kind == Tail::Kind::power) {
    const double mu = spec.mu_scale_positive;
    if (t.amp > 0.0) {
      t.amp *= mu;
      if (mu == 0.0) t.kind = Tail::Kind::zero;
    }
  }
  return t;
}

bool analytically_nonnegative(const WeightSpec& spec) {
  for (const auto& c : spec.components) {
    switch (c.family) {
      case WeightFamily::power_law:
        if (c.amplitude < 0.0) return false;
        break;
      case WeightFamily::bump:
        if (c.sign * c.amplitude < 0.0) return false;
        break;
      case WeightFamily::piecewise_radial:
        for (double v : c.values)
          if (v < 0.0) return false;
        break;
      case WeightFamily::box_expression:
        if (c.cx != 0.0 || c.cy != 0.0 || c.c0 < 0.0 || c.cr2 < 0.0) return false;
        break;
    }
  }
  return true;
}

double unit_sphere_measure(int n) {
  if (n == 1) return 1.0;
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace

double eval_radial(const WeightSpec& spec, double r) {
  double raw = 0.0;
  for (const auto& c : spec.components) raw += eval_component(c, r, 0.0, 0.0, false);
  return apply_mu(raw, spec.mu_scale_positive);
}

WeightField sample_weight(const WeightSpec& spec, const GridPtr& grid) {
  if (spec.components.empty()) throw std::invalid_argument("weight spec has no components");
  if (spec.mu_scale_positive < 0.0)
    throw std::invalid_argument("positive-part scale must be >= 0");
  const bool is_box = grid->kind() == GridKind::box;
  WeightField out;
  out.value = make_field(grid);
  out.plus = make_field(grid);
  out.minus = make_field(grid);
  const std::size_t m = grid->size();
  out.minus_zero_mask.resize(m);
  out.zero_mask.resize(m);
  const auto& r = grid->radius();
  for (std::size_t i = 0; i < m; ++i) {
    double raw = 0.0;
    for (const auto& c : spec.components)
      raw += eval_component(c, r[i], is_box ? grid->coord_x()[i] : r[i],
                            is_box ? grid->coord_y()[i] : 0.0, is_box);
    const double val = apply_mu(raw, spec.mu_scale_positive);
    if (!std::isfinite(val)) throw std::invalid_argument("weight evaluates to a non-finite value");
    out.value.v[i] = val;
    out.plus.v[i] = val > 0.0 ? val : 0.0;
    out.minus.v[i] = val < 0.0 ? -val : 0.0;
    out.minus_zero_mask[i] = val <= 0.0 ? 1 : 0;
    out.zero_mask[i] = val == 0.0 ? 1 : 0;
    out.any_negative = out.any_negative || val < 0.0;
    out.any_positive = out.any_positive || val > 0.0;
  }
  return out;
}

RegionMask minus_zero_region(const WeightField& w) {
  RegionMask m;
  m.tag = RegionMask::Tag::minus_zero;
  m.keep = w.minus_zero_mask;
  return m;
}

RegionMask zero_region(const WeightField& w) {
  RegionMask m;
  m.tag = RegionMask::Tag::zero;
  m.keep = w.zero_mask;
  return m;
}

WeightSpec perturb_h(const WeightSpec& spec_h, double mu) {
  if (mu < 0.0) throw std::invalid_argument("perturbation parameter must be >= 0");
  WeightSpec out = spec_h;
  out.mu_scale_positive *= mu;
  return out;
}

EmbeddingReport check_embedding(const WeightSpec& spec_v, const WeightSpec& spec_h, int dimension,
                                double p, const GridPtr& grid) {
  if (p <= 2.0) throw std::invalid_argument("superlinearity requires p > 2");
  const int N = dimension;
  EmbeddingReport rep;
  const Tail tv = analytic_tail(spec_v);
  const Tail th = analytic_tail(spec_h);
  rep.hminus_zero = analytically_nonnegative(spec_h) && spec_h.mu_scale_positive >= 0.0;

  // p below the critical Sobolev exponent 2N/(N-2); no restriction for N <= 2.
  const bool subcritical = N <= 2 || p < 2.0 * N / (N - 2.0);
  // Conjugate exponent of the h^- integrability condition; 1 in the N <= 2 limit.
  const double q = N <= 2 ? 1.0 : (2.0 * N / (N - 2.0)) / (2.0 * N / (N - 2.0) - p);
  const double decay_power = 0.5 * (N - 2.0) * p - N;  // always < 0 when subcritical

  // h^- tail: zero/positive tails leave h^- compactly supported.
  if (rep.hminus_zero) {
    rep.eq46 = subcritical ? Verdict::holds : Verdict::fails;
    rep.eq47 = rep.eq46;
    rep.cond3 = Verdict::holds;
  } else if (th.kind == Tail::Kind::unknown) {
    rep.eq46 = rep.eq47 = rep.cond3 = Verdict::undetermined;
  } else {
    const bool hm_compact = th.kind == Tail::Kind::zero || th.amp > 0.0;
    if (!subcritical) {
      rep.eq46 = rep.eq47 = Verdict::fails;
    } else if (hm_compact) {
      rep.eq46 = rep.eq47 = Verdict::holds;
    } else {
      rep.eq46 = (th.exp * q < -N) ? Verdict::holds : Verdict::fails;
      const bool bounded = th.exp <= 0.0;
      rep.eq47 = (bounded && th.exp + decay_power < 0.0) ? Verdict::holds : Verdict::fails;
    }
    rep.cond3 = (rep.eq46 == Verdict::holds || rep.eq47 == Verdict::holds) ? Verdict::holds
                                                                           : Verdict::fails;
  }

  // V^+ tail conditions.
  if (tv.kind == Tail::Kind::unknown) {
    rep.eq48 = Verdict::undetermined;
  } else if (tv.kind == Tail::Kind::zero || tv.amp < 0.0) {
    rep.eq48 = Verdict::holds;
  } else {
    rep.eq48 = (tv.exp < -2.0) ? Verdict::holds : Verdict::fails;
  }

  if (th.kind == Tail::Kind::unknown || tv.kind == Tail::Kind::unknown) {
    rep.knuutz = Verdict::undetermined;
  } else if (th.kind != Tail::Kind::power || th.amp <= 0.0) {
    rep.knuutz = Verdict::fails;  // no radius with h > 0 outside
  } else if (tv.kind == Tail::Kind::zero || tv.amp < 0.0) {
    rep.knuutz = Verdict::holds;  // V^+ compactly supported
  } else {
    rep.exponents_known = true;
    rep.alpha = tv.exp;
    rep.beta = th.exp;
    rep.exponent_lhs = th.exp - tv.exp;
    rep.exponent_rhs = (0.5 * N + 0.5 * tv.exp) * (p - 2.0);
    rep.knuutz = (rep.exponent_lhs > rep.exponent_rhs) ? Verdict::holds : Verdict::fails;
  }
  if (rep.knuutz == Verdict::holds || rep.eq48 == Verdict::holds)
    rep.cond4 = Verdict::holds;
  else if (rep.knuutz == Verdict::undetermined || rep.eq48 == Verdict::undetermined)
    rep.cond4 = Verdict::undetermined;
  else
    rep.cond4 = Verdict::fails;

  // Numeric evidence (radial specs only).
  const bool radial_specs = th.kind != Tail::Kind::unknown && tv.kind != Tail::Kind::unknown;
  if (radial_specs) {
    const double r_max = grid->extent();
    // Positivity radius: analytic extent of compact features, refined by a
    // dense scan of the sampled values.
    if (th.kind == Tail::Kind::power && th.amp > 0.0) {
      double r0 = 0.0;
      for (const auto& c : spec_h.components) {
        if (c.family == WeightFamily::bump) r0 = std::max(r0, c.center + c.radius);
        if (c.family == WeightFamily::piecewise_radial && !c.breakpoints.empty())
          r0 = std::max(r0, c.breakpoints.back());
      }
      const double r_hi = std::max(4.0 * r_max, 2.0 * r0 + 1.0);
      const int samples = 4096;
      double last_bad = 0.0;
      for (int i = 0; i < samples; ++i) {
        const double r = r0 + (r_hi - r0) * (i + 0.5) / samples;
        if (eval_radial(spec_h, r) <= 0.0) last_bad = r;
      }
      rep.positivity_radius = std::max(r0, last_bad);
    }
    if (rep.positivity_radius >= 0.0) {
      const double omega = unit_sphere_measure(N);
      const double e = 2.0 / (p - 2.0);
      // Cumulative integrals built from per-interval quadratures, so every
      // increment is an honest estimate of its own slab even when the
      // integrand is steep near the lower endpoint.
      auto slab = [&](double lo, double hi) {
        if (hi <= lo) return 0.0;
        const int samples = 8192;
        double acc = 0.0;
        const double dr = (hi - lo) / samples;
        for (int i = 0; i < samples; ++i) {
          const double r = lo + (i + 0.5) * dr;
          const double hv = eval_radial(spec_h, r);
          const double vv = std::max(eval_radial(spec_v, r), 0.0);
          if (hv > 0.0 && vv > 0.0)
            acc += vv * std::pow(vv / hv, e) * omega * std::pow(r, N - 1) * dr;
        }
        return acc;
      };
      double acc = 0.0, lo = rep.positivity_radius;
      for (int k = 0; k < 3; ++k) {
        const double hi = r_max * std::pow(2.0, k);
        acc += slab(std::max(lo, rep.positivity_radius), hi);
        rep.knuutz_tail[k] = acc;
        lo = hi;
      }
    }
    for (int k = 0; k < 2; ++k) {
      const double r = r_max * (k + 1);
      rep.limsup_proxy[k] = std::max(-eval_radial(spec_h, r), 0.0) * std::pow(r, decay_power);
    }
  }
  return rep;
}

}  // namespace ellab
