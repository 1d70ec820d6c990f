#pragma once

#include <utility>
#include <vector>

#include "mcflow/curve.hpp"
#include "mcflow/potential.hpp"
#include "mcflow/variant.hpp"

namespace mcflow {

enum class FlowStatus { Running, ReachedHorizon, Extinction, BlowUp, NumericalFailure };
const char* to_string(FlowStatus s);

// One row of the flow time series. min_kappa is NaN for space curves, where
// the scalar curvature has no sign.
struct MonitorRecord {
  double t = 0.0;
  double dt = 0.0;
  double max_a2 = 0.0;
  double min_kappa = 0.0;
  double s_min = 0.0;  // min over vertices of |x|^2 / 2
  double length = 0.0;
  double min_edge = 0.0;
  double pinch_margin = 0.0;
  bool region_ok = true;
};

// Reaction bracket of the pinching inequality at a = sqrt(a2): negative means
// the maximum-principle barrier is pushing |A|^2 down at that level.
double pinch_margin(double a2, const HessianBounds& bounds, Variant variant);

// Populates a record from the current curve. region_ok is evaluated against
// bounds.region when that box is non-empty.
MonitorRecord record(const DiscreteCurve& c, const PotentialField& field,
                     const HessianBounds& bounds, double t);

struct CurveSnapshot {
  double t = 0.0;
  Eigen::MatrixXd pts;
};

struct FlowTrace {
  std::vector<MonitorRecord> records;
  std::vector<CurveSnapshot> snapshots;
  FlowStatus status = FlowStatus::Running;
  double final_time = 0.0;
  long steps = 0;
  int remesh_count = 0;
  double initial_length = 0.0;
  DiscreteCurve final_curve;
};

struct Outcome {
  FlowStatus status = FlowStatus::Running;
  double time = 0.0;  // blow-up: first record over threshold; else final time
};
Outcome classify(const FlowTrace& trace, double blowup_a2);

// d=2 only: all vertex curvatures >= -tol.
bool convexity(const DiscreteCurve& c, double tol = 1e-8);

// Symmetric minimum vertex-to-segment distance between two closed polygons.
double polygon_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Gap per shared snapshot time. Throws if the snapshot grids disagree.
std::vector<std::pair<double, double>> avoidance_series(const FlowTrace& a,
                                                        const FlowTrace& b);
double avoidance(const FlowTrace& a, const FlowTrace& b);

// Exponential floor for s(t) = min 1/2 |x|^2 under forcing with Hessian
// eigenvalues >= m, starting from c0 = 2 m s(0) - n > 0. `ode` solves the
// comparison equation ds/dt = -n + 2 m s exactly; `product` moves the
// inhomogeneous term inside the exponential, which overshoots for t > 0.
double expansion_floor_ode(int n, double c0, double m, double t);
double expansion_floor_product(int n, double c0, double m, double t);

struct SphereBoundReport {
  bool c0_positive = false;
  bool ok = false;           // floor_ode held at every sample (tol 1e-9)
  double c0 = 0.0;
  double margin = 0.0;          // min over samples of s/floor_ode - 1
  double margin_product = 0.0;  // min over samples of s/floor_product - 1
};

// samples are (t, s) pairs with s = 1/2 R(t)^2.
SphereBoundReport verify_sphere_bound(const std::vector<std::pair<double, double>>& samples,
                                      double m, int n);

}  // namespace mcflow
