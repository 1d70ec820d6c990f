#include "mcflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcflow {

void validate(const FlowConfig& cfg) {
  if (!(cfg.t_end > 0)) throw std::invalid_argument("flow config: t_end must be positive");
  if (!(cfg.dt_max > 0)) throw std::invalid_argument("flow config: dt_max must be positive");
  if (!(cfg.cfl > 0) || cfg.cfl > 1)
    throw std::invalid_argument("flow config: cfl must be in (0, 1]");
  if (!(cfg.snapshot_every >= 1e-9))
    throw std::invalid_argument("flow config: snapshot_every too small");
  if (!(cfg.remesh_ratio > 1))
    throw std::invalid_argument("flow config: remesh_ratio must exceed 1");
  if (!(cfg.blowup_a2 > 0) || !(cfg.extinction_fraction > 0))
    throw std::invalid_argument("flow config: thresholds must be positive");
}

FlowTrace run_flow(const DiscreteCurve& start, const PotentialField& field,
                   const HessianBounds& bounds, const FlowConfig& cfg) {
  validate(cfg);
  validate_curve(start);
  if (field.dimension() != start.dim())
    throw std::invalid_argument("run_flow: potential dimension mismatch");

  DiscreteCurve curve = start;
  FlowTrace trace;
  trace.initial_length = total_length(curve);

  double t = 0.0;
  long snap_index = 0;

  auto push_record = [&](double dt) {
    MonitorRecord r = record(curve, field, bounds, t);
    r.dt = dt;
    trace.records.push_back(r);
    return r;
  };
  auto push_snapshot = [&] {
    trace.snapshots.push_back({t, curve.pts});
    ++snap_index;
  };

  // Extinction is checked before blow-up: a collapsing curve crosses both
  // thresholds in the same regime and counts as extinct.
  auto terminal = [&](const MonitorRecord& r) {
    if (r.length < cfg.extinction_fraction * trace.initial_length)
      return FlowStatus::Extinction;
    if (r.max_a2 > cfg.blowup_a2) return FlowStatus::BlowUp;
    return FlowStatus::Running;
  };

  push_snapshot();
  trace.status = terminal(push_record(0.0));

  const double horizon_slack = 1e-13 * std::max(1.0, cfg.t_end);
  while (trace.status == FlowStatus::Running) {
    if (trace.steps >= cfg.max_steps) {
      trace.status = FlowStatus::NumericalFailure;
      break;
    }
    if (cfg.t_end - t <= horizon_slack) {
      trace.status = FlowStatus::ReachedHorizon;
      break;
    }

    const Eigen::MatrixXd vel = flow_velocities(curve, field);
    double dt = adaptive_dt(curve, vel, cfg.dt_max, cfg.cfl);
    dt = std::min(dt, cfg.t_end - t);

    bool on_snapshot = false;
    const double t_snap = snap_index * cfg.snapshot_every;
    if (t_snap <= cfg.t_end + horizon_slack && t + dt >= t_snap - horizon_slack) {
      dt = t_snap - t;
      on_snapshot = true;
    }
    if (dt < cfg.dt_floor) {
      trace.status = FlowStatus::NumericalFailure;
      break;
    }

    euler_step(curve, vel, dt);
    t = on_snapshot ? t_snap : t + dt;
    ++trace.steps;

    if (curve.dim() == 2 && !(signed_area(curve) > 0)) {
      push_record(dt);
      trace.status = FlowStatus::NumericalFailure;
      break;
    }
    if (needs_remesh(curve, cfg.remesh_ratio)) {
      curve = resample_uniform(curve);
      ++trace.remesh_count;
    }

    const MonitorRecord r = push_record(dt);
    trace.status = terminal(r);
    if (on_snapshot && trace.status == FlowStatus::Running) {
      push_snapshot();
      if (curve.dim() == 2 && self_intersects(curve))
        trace.status = FlowStatus::NumericalFailure;
    }
  }

  trace.final_time = t;
  trace.final_curve = curve;
  return trace;
}

std::vector<std::pair<double, double>> RadialTrajectory::half_norm2_series() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(states.size());
  for (const auto& s : states) out.emplace_back(s.t, 0.5 * s.R * s.R);
  return out;
}

double radial_radius_constant(double R0, int n, double t) {
  const double r2 = R0 * R0 - 2.0 * n * t;
  return r2 > 0 ? std::sqrt(r2) : 0.0;
}

double radial_radius_quadratic(double R0, int n, double c, double t) {
  if (c == 0.0) return radial_radius_constant(R0, n, t);
  const double r2 = (R0 * R0 - n / c) * std::exp(2.0 * c * t) + n / c;
  return r2 > 0 ? std::sqrt(r2) : 0.0;
}

double radial_extinction_constant(double R0, int n) { return R0 * R0 / (2.0 * n); }

double radial_extinction_quadratic(double R0, int n, double c) {
  if (c == 0.0) return radial_extinction_constant(R0, n);
  const double q = n / c;
  if (c > 0 && R0 * R0 >= q) return std::numeric_limits<double>::infinity();
  // r2(t) = (R0^2 - q) e^{2ct} + q reaches 0 when e^{2ct} = q / (q - R0^2)
  return std::log(q / (q - R0 * R0)) / (2.0 * c);
}

RadialTrajectory radial_flow(int n, const PotentialField& field, double R0, double t_end,
                             int samples) {
  if (n < 1) throw std::invalid_argument("radial_flow: n must be >= 1");
  if (!(R0 > 0)) throw std::invalid_argument("radial_flow: R0 must be positive");
  if (!(t_end > 0)) throw std::invalid_argument("radial_flow: t_end must be positive");
  if (samples < 2) throw std::invalid_argument("radial_flow: need at least 2 samples");
  if (field.dimension() != n + 1)
    throw std::invalid_argument("radial_flow: potential must live in R^(n+1)");

  double c = 0.0;
  switch (field.kind()) {
    case PotentialField::Kind::Constant: c = 0.0; break;
    case PotentialField::Kind::RadialQuadratic: c = field.scalar_param(); break;
    default:
      throw std::invalid_argument("radial_flow: potential must be constant or radial-quadratic");
  }

  RadialTrajectory out;
  const double tx = c == 0.0 ? radial_extinction_constant(R0, n)
                             : radial_extinction_quadratic(R0, n, c);
  out.extinction_time =
      std::isfinite(tx) ? tx : std::numeric_limits<double>::quiet_NaN();
  out.equilibrium_radius = c > 0 ? std::sqrt(n / c)
                                 : std::numeric_limits<double>::quiet_NaN();

  for (int i = 0; i < samples; ++i) {
    const double t = t_end * i / (samples - 1);
    const double R = radial_radius_quadratic(R0, n, c, t);
    if (!(R > 0)) break;
    out.states.push_back({n, R, t});
  }
  return out;
}

}  // namespace mcflow
