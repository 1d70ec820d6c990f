#pragma once

#include "mcflow/monitors.hpp"

namespace mcflow {

struct FlowConfig {
  double t_end = 1.0;
  double dt_max = 1e-3;
  double cfl = 0.4;
  double snapshot_every = 0.05;  // time between stored snapshots
  double remesh_ratio = 3.0;
  double blowup_a2 = 1e6;
  double extinction_fraction = 1e-3;  // of the initial length
  double dt_floor = 1e-14;
  long max_steps = 50000000;
};

void validate(const FlowConfig& cfg);

// Explicit Euler integration of the forced flow. Records every step;
// snapshots land exactly on the grid k * snapshot_every (the step size is
// clamped to the boundary and t is assigned the exact grid value), so two
// runs with the same config share a bit-identical snapshot grid.
FlowTrace run_flow(const DiscreteCurve& start, const PotentialField& field,
                   const HessianBounds& bounds, const FlowConfig& cfg);

// Round sphere S^n(R) under a radial potential reduces to a scalar ODE for
// R(t) with closed-form solutions; no time stepping involved.
struct RadialState {
  int n = 1;
  double R = 0.0;
  double t = 0.0;
};

struct RadialTrajectory {
  std::vector<RadialState> states;  // uniform time grid, truncated at extinction
  double extinction_time = 0.0;     // NaN when the sphere never vanishes
  double equilibrium_radius = 0.0;  // NaN unless radial-quadratic with c > 0
  std::vector<std::pair<double, double>> half_norm2_series() const;
};

// field must be constant or radial-quadratic.
RadialTrajectory radial_flow(int n, const PotentialField& field, double R0,
                             double t_end, int samples = 200);

double radial_radius_constant(double R0, int n, double t);
double radial_radius_quadratic(double R0, int n, double c, double t);
double radial_extinction_constant(double R0, int n);
// infinity when the sphere survives (R0^2 >= n/c with c > 0)
double radial_extinction_quadratic(double R0, int n, double c);

}  // namespace mcflow
