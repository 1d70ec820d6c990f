#include "mcflow/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcflow {
namespace {

double quartic_weight(Variant v) { return v == Variant::Hypersurface ? 1.0 : 5.0; }

double coefficient_gap(double lambda_hi, double lambda_lo) {
  return 2.0 * lambda_lo - lambda_hi;
}

// cubic factor of the pinching polynomial, q(a) = L a^3 - gap a + c3
double cubic(double a, double L, double gap, double c3) {
  return L * a * a * a - gap * a + c3;
}

void require_c3(double c3) {
  if (c3 < 0) throw std::invalid_argument("third-derivative bound must be >= 0");
}

}  // namespace

double pinch_poly(double a, double c3, double lambda_hi, double lambda_lo,
                  Variant variant) {
  require_c3(c3);
  const double a2 = a * a;
  return quartic_weight(variant) * a2 * a2 + std::abs(a) * c3 +
         (lambda_hi - 2.0 * lambda_lo) * a2;
}

ThresholdResult admissible_threshold(double c3, double lambda_hi, double lambda_lo,
                                     Variant variant) {
  require_c3(c3);
  ThresholdResult out;
  const double gap = coefficient_gap(lambda_hi, lambda_lo);
  if (!(lambda_lo > 0) || !(gap > 0)) return out;

  const double L = quartic_weight(variant);
  const double a_dip = std::sqrt(gap / (3.0 * L));
  // q decreases to a_dip then increases; no admissible window unless the
  // minimum is negative
  if (!(cubic(a_dip, L, gap, c3) < 0)) return out;

  // the largest root sits between the dip and sqrt(gap/L), where q = c3 >= 0;
  // widen the top end a hair so c3 = 0 still brackets a sign change
  double lo = a_dip;
  double hi = std::sqrt(gap / L) * (1.0 + 1e-9);
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (cubic(mid, L, gap, c3) < 0 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  out.c_star = root * root;
  out.exists = true;
  return out;
}

double basin_lower_edge(double c3, double lambda_hi, double lambda_lo,
                        Variant variant) {
  require_c3(c3);
  const double gap = coefficient_gap(lambda_hi, lambda_lo);
  if (!(lambda_lo > 0) || !(gap > 0))
    return std::numeric_limits<double>::quiet_NaN();
  if (c3 == 0) return 0.0;

  const double L = quartic_weight(variant);
  const double a_dip = std::sqrt(gap / (3.0 * L));
  if (!(cubic(a_dip, L, gap, c3) < 0))
    return std::numeric_limits<double>::quiet_NaN();
  // q(0) = c3 > 0 and q(a_dip) < 0
  double lo = 0.0, hi = a_dip;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (cubic(mid, L, gap, c3) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ConditionWindow polynomial_window(double C, double c3, double lambda_hi,
                                  double lambda_lo, Variant variant) {
  ConditionWindow out;
  if (!(C > 0)) return out;
  const double root = std::sqrt(C);
  for (int k = 1; k <= 6; ++k) {
    const double delta = std::pow(10.0, -k) * root;
    const double lo = root - delta;
    const double hi = variant == Variant::Hypersurface ? root + delta : root;
    bool negative = true;
    for (int j = 1; j <= 201 && negative; ++j) {
      const double a = lo + (hi - lo) * j / 202.0;
      negative = pinch_poly(a, c3, lambda_hi, lambda_lo, variant) < 0;
    }
    if (negative) {
      out.ok = true;
      out.delta = delta;
      break;
    }
  }
  return out;
}

bool HypothesisReport::all_hold() const {
  return cond1_hessian_pinch && cond2_initial_a2 && cond3_polynomial.ok &&
         region_contains_initial;
}

HypothesisReport check_hypotheses(const PotentialField& field,
                                  const DiscreteCurve& curve0, Variant variant,
                                  const Box& region) {
  HypothesisReport rep;
  rep.variant = variant;
  rep.a2_initial = max_a2(curve0);

  if (region.dimension() != field.dimension()) {
    rep.bounds.region = region;
    return rep;  // nothing is verifiable without a matching region
  }
  rep.bounds = field.hessian_eigen_bounds(region);
  rep.bounds.c3 = field.third_derivative_bound(region);
  rep.cond4_derivative_bounds = rep.bounds.certified ? "certified" : "sampled";

  rep.region_contains_initial = region.dimension() == curve0.dim();
  for (int i = 0; i < curve0.size() && rep.region_contains_initial; ++i)
    if (!region.contains(curve0.vertex(i))) rep.region_contains_initial = false;

  rep.cond1_hessian_pinch =
      rep.bounds.lambda_lo > 0 &&
      rep.bounds.lambda_hi < 2.0 * rep.bounds.lambda_lo;

  const ThresholdResult th = admissible_threshold(
      rep.bounds.c3, rep.bounds.lambda_hi, rep.bounds.lambda_lo, variant);
  rep.admissible_C = th.c_star;
  rep.threshold_exists = th.exists;
  // strict inequality with a relative guard so boundary cases computed in
  // floating point do not slip through
  rep.cond2_initial_a2 = th.exists && rep.a2_initial < th.c_star * (1.0 - 1e-12);

  if (th.exists) {
    const double a1 = basin_lower_edge(rep.bounds.c3, rep.bounds.lambda_hi,
                                       rep.bounds.lambda_lo, variant);
    const double base = std::max(rep.a2_initial, a1 * a1);
    rep.reference_C = base < th.c_star ? 0.5 * (base + th.c_star) : th.c_star;
    rep.cond3_polynomial =
        polynomial_window(rep.reference_C, rep.bounds.c3, rep.bounds.lambda_hi,
                          rep.bounds.lambda_lo, variant);
  }
  return rep;
}

DiagonalPinchReport check_diagonal_pinch(const Eigen::VectorXd& coeffs,
                                         const DiscreteCurve& curve0) {
  if (coeffs.size() == 0 || (coeffs.array() <= 0).any())
    throw std::invalid_argument("check_diagonal_pinch: coefficients must be positive");
  if (coeffs.size() != curve0.dim())
    throw std::invalid_argument("check_diagonal_pinch: coefficient count mismatch");

  DiagonalPinchReport rep;
  rep.m = coeffs.minCoeff();
  rep.M = coeffs.maxCoeff();
  rep.M_lt_2m = rep.M < 2.0 * rep.m;
  rep.a2_initial = max_a2(curve0);
  const double threshold = 2.0 * rep.m - rep.M;
  rep.a2_lt_threshold =
      rep.M_lt_2m && rep.a2_initial < threshold * (1.0 - 1e-12);
  return rep;
}

}  // namespace mcflow
