#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ellab/grid.hpp"

namespace ellab {

enum class WeightFamily { power_law, bump, piecewise_radial, box_expression };

/// One additive term of a weight function.
///   power_law:        amplitude * r^exponent
///   bump:             sign * amplitude * cos^2(pi/2 * d/radius) for d < radius,
///                     exactly 0 outside; d = |r - center| on radial grids,
///                     distance to (center, center_y) on box grids
///   piecewise_radial: values[k] on [breakpoints[k-1], breakpoints[k]); at a
///                     breakpoint the side with the smaller magnitude wins
///                     (ties to the left), so zero plateaus absorb their
///                     endpoints
///   box_expression:   c0 + cx*x + cy*y + cr2*(x^2+y^2), box grids only
struct WeightComponent {
  WeightFamily family = WeightFamily::power_law;
  double amplitude = 1.0;
  double exponent = 0.0;
  double center = 0.0;
  double center_y = 0.0;
  double radius = 1.0;
  double sign = 1.0;
  std::vector<double> breakpoints;
  std::vector<double> values;
  double c0 = 0.0, cx = 0.0, cy = 0.0, cr2 = 0.0;
};

/// Sum of components, with an optional rescaling of the positive part:
/// sampled value = mu_scale_positive * (sum)^+ - (sum)^-.
struct WeightSpec {
  std::vector<WeightComponent> components;
  double mu_scale_positive = 1.0;
};

/// Weight sampled on a grid with sign decomposition and the exact region
/// masks {value <= 0} and {value == 0}. Masks come from analytic zeros of
/// the expression, never from float thresholds.
struct WeightField {
  Field value;
  Field plus;   ///< max(value, 0)
  Field minus;  ///< max(-value, 0); value = plus - minus exactly
  std::vector<std::uint8_t> minus_zero_mask;  ///< nodes with value <= 0
  std::vector<std::uint8_t> zero_mask;        ///< nodes with value == 0
  bool any_negative = false;
  bool any_positive = false;
};

/// Node subset of a grid, used to restrict solves to subregions.
struct RegionMask {
  enum class Tag { minus_zero, zero, custom };
  Tag tag = Tag::custom;
  std::vector<std::uint8_t> keep;  ///< 1 = node belongs to the region
};

/// Region {h <= 0} of a sampled weight.
RegionMask minus_zero_region(const WeightField& w);

/// Region {h == 0} of a sampled weight.
RegionMask zero_region(const WeightField& w);

enum class Verdict { holds, fails, undetermined };

/// Evaluation of the compact-embedding sufficient conditions for the energy
/// space: growth control of h^- (two alternatives) and of V^+ against h
/// (two alternatives), plus the power-law exponent criterion.
struct EmbeddingReport {
  Verdict eq46 = Verdict::undetermined;    ///< p < 2* and h^- in L^{2*/(2*-p)}
  Verdict eq47 = Verdict::undetermined;    ///< p < 2*, h^- bounded, h^-(x)|x|^{(N-2)p/2-N} -> 0
  Verdict knuutz = Verdict::undetermined;  ///< h > 0 outside B_R and tail V^+(V^+/h)^{2/(p-2)} integrable
  Verdict eq48 = Verdict::undetermined;    ///< V^+ in L^{N/2}
  /// Overall sufficiency: cond3 for the h^- embedding (holds unconditionally
  /// when h^- == 0), cond4 for the V^+ embedding.
  Verdict cond3 = Verdict::undetermined;
  Verdict cond4 = Verdict::undetermined;
  bool hminus_zero = false;

  /// Tail exponent data, valid when both tails are positive power laws.
  bool exponents_known = false;
  double alpha = 0.0;           ///< V ~ |x|^alpha
  double beta = 0.0;            ///< h ~ |x|^beta
  double exponent_lhs = 0.0;    ///< beta - alpha
  double exponent_rhs = 0.0;    ///< (N/2 + alpha/2)(p-2)

  /// Numeric evidence on the truncated domain.
  double positivity_radius = -1.0;       ///< R with sampled h > 0 beyond; -1 if none
  std::array<double, 3> knuutz_tail{};   ///< tail integral to R_max, 2R_max, 4R_max
  std::array<double, 2> limsup_proxy{};  ///< h^-(r) r^{(N-2)p/2-N} at R_max, 2R_max
};

/// Evaluate a spec at every interior node of a grid.
WeightField sample_weight(const WeightSpec& spec, const GridPtr& grid);

/// Spec sampling to mu * h^+ - h^- of the original. Requires mu >= 0.
WeightSpec perturb_h(const WeightSpec& spec_h, double mu);

/// Evaluate a radial spec at an arbitrary radius (box_expression rejected).
double eval_radial(const WeightSpec& spec, double r);

/// Decide the embedding conditions for the pair (V, h) in dimension N with
/// superlinearity p > 2; the grid supplies the truncation radius for the
/// numeric evidence.
EmbeddingReport check_embedding(const WeightSpec& spec_v, const WeightSpec& spec_h, int dimension,
                                double p, const GridPtr& grid);

}  // namespace ellab
