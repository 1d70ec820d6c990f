#pragma once

#include <string>

#include "mcflow/curve.hpp"
#include "mcflow/potential.hpp"
#include "mcflow/variant.hpp"

namespace mcflow {

// Pinching polynomial L a^4 + |a| c3 + (lambda_hi - 2 lambda_lo) a^2 with
// L = 1 for hypersurfaces and L = 5 in higher codimension. Negative values
// mean the curvature bound at level a^2 is self-improving.
double pinch_poly(double a, double c3, double lambda_hi, double lambda_lo,
                  Variant variant);

struct ThresholdResult {
  double c_star = 0.0;  // largest admissible initial |A|^2 bound
  bool exists = false;  // false when the polynomial never dips negative
};

// Square of the largest positive root of the cubic factor
// L a^3 - (2 lambda_lo - lambda_hi) a + c3, located by bisection to 1e-13
// in a. Returns {0, false} when lambda_hi >= 2 lambda_lo or lambda_lo <= 0.
ThresholdResult admissible_threshold(double c3, double lambda_hi, double lambda_lo,
                                     Variant variant);

// Smallest positive a with pinch_poly < 0 just above it (the middle root of
// the cubic factor; 0 when c3 = 0). NaN when no admissible window exists.
double basin_lower_edge(double c3, double lambda_hi, double lambda_lo,
                        Variant variant);

struct ConditionWindow {
  bool ok = false;
  double delta = 0.0;  // largest half-width that passed the scan
};

// Interval form of the polynomial condition at pinching level C: the
// polynomial must be strictly negative on (sqrt(C)-delta, sqrt(C)) in higher
// codimension and on the two-sided window (sqrt(C)-delta, sqrt(C)+delta) for
// hypersurfaces. delta is scanned over {1e-1,...,1e-6} * sqrt(C), largest
// passing value reported, 201 interior samples per window.
ConditionWindow polynomial_window(double C, double c3, double lambda_hi,
                                  double lambda_lo, Variant variant);

struct HypothesisReport {
  Variant variant = Variant::Hypersurface;
  HessianBounds bounds;
  double a2_initial = 0.0;
  bool cond1_hessian_pinch = false;      // 0 < lambda_lo and lambda_hi < 2 lambda_lo
  bool cond2_initial_a2 = false;         // a2_initial strictly under the threshold
  ConditionWindow cond3_polynomial;      // scanned at reference_C
  std::string cond4_derivative_bounds = "unknown";  // certified | sampled | unknown
  double admissible_C = 0.0;
  bool threshold_exists = false;
  double reference_C = 0.0;  // midpoint between the initial level and the threshold
  bool region_contains_initial = false;

  bool all_hold() const;
};

// Evaluates every hypothesis for the given potential and starting curve.
// Derivative bounds are taken over `region`; never throws on unmet
// conditions, they are reported.
HypothesisReport check_hypotheses(const PotentialField& field,
                                  const DiscreteCurve& curve0, Variant variant,
                                  const Box& region);

struct DiagonalPinchReport {
  double m = 0.0;  // min coefficient
  double M = 0.0;  // max coefficient
  bool M_lt_2m = false;
  double a2_initial = 0.0;
  bool a2_lt_threshold = false;  // strict comparison against 2m - M
};

// Specialization for quadratic-diagonal potentials, where the threshold
// collapses to the coefficient gap 2 min(c) - max(c).
DiagonalPinchReport check_diagonal_pinch(const Eigen::VectorXd& coeffs,
                                         const DiscreteCurve& curve0);

}  // namespace mcflow
