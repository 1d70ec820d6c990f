#include "mcflow/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcflow {

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Running: return "running";
    case FlowStatus::ReachedHorizon: return "reached_horizon";
    case FlowStatus::Extinction: return "extinction";
    case FlowStatus::BlowUp: return "blow_up";
    case FlowStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double pinch_margin(double a2, const HessianBounds& bounds, Variant variant) {
  const double a = std::sqrt(std::max(0.0, a2));
  const double quartic = variant == Variant::Hypersurface ? 2.0 : 10.0;
  return quartic * a2 * a2 + 2.0 * a * bounds.c3 +
         2.0 * (bounds.lambda_hi - 2.0 * bounds.lambda_lo) * a2;
}

MonitorRecord record(const DiscreteCurve& c, const PotentialField& field,
                     const HessianBounds& bounds, double t) {
  (void)field;
  MonitorRecord r;
  r.t = t;
  r.max_a2 = max_a2(c);
  r.min_kappa = c.dim() == 2 ? min_scalar_curvature(c)
                             : std::numeric_limits<double>::quiet_NaN();
  r.s_min = min_half_norm2(c);
  r.length = total_length(c);
  r.min_edge = min_edge(c);
  const Variant v = c.dim() == 2 ? Variant::Hypersurface : Variant::HigherCodim;
  r.pinch_margin = pinch_margin(r.max_a2, bounds, v);
  r.region_ok = true;
  if (bounds.region.dimension() == c.dim()) {
    for (int i = 0; i < c.size() && r.region_ok; ++i)
      if (!bounds.region.contains(c.vertex(i))) r.region_ok = false;
  }
  return r;
}

Outcome classify(const FlowTrace& trace, double blowup_a2) {
  Outcome out;
  out.status = trace.status;
  out.time = trace.final_time;
  if (trace.status == FlowStatus::BlowUp) {
    for (const auto& r : trace.records)
      if (r.max_a2 > blowup_a2) {
        out.time = r.t;
        break;
      }
  }
  return out;
}

bool convexity(const DiscreteCurve& c, double tol) {
  if (c.dim() != 2)
    throw std::invalid_argument("convexity: undefined for space curves");
  return min_scalar_curvature(c) >= -tol;
}

namespace {

double point_segment_dist(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b) {
  const Eigen::VectorXd ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

double one_sided_gap(const Eigen::MatrixXd& verts, const Eigen::MatrixXd& poly) {
  const int nv = static_cast<int>(verts.rows());
  const int np = static_cast<int>(poly.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nv; ++i) {
    const Eigen::VectorXd p = verts.row(i).transpose();
    for (int j = 0; j < np; ++j) {
      const Eigen::VectorXd a = poly.row(j).transpose();
      const Eigen::VectorXd b = poly.row((j + 1) % np).transpose();
      best = std::min(best, point_segment_dist(p, a, b));
    }
  }
  return best;
}

}  // namespace

double polygon_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::min(one_sided_gap(a, b), one_sided_gap(b, a));
}

std::vector<std::pair<double, double>> avoidance_series(const FlowTrace& a,
                                                        const FlowTrace& b) {
  const size_t n = std::min(a.snapshots.size(), b.snapshots.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (a.snapshots[i].t != b.snapshots[i].t)
      throw std::invalid_argument("avoidance: snapshot grids disagree");
    out.emplace_back(a.snapshots[i].t,
                     polygon_gap(a.snapshots[i].pts, b.snapshots[i].pts));
  }
  return out;
}

double avoidance(const FlowTrace& a, const FlowTrace& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [t, gap] : avoidance_series(a, b)) {
    (void)t;
    best = std::min(best, gap);
  }
  return best;
}

double expansion_floor_ode(int n, double c0, double m, double t) {
  return (n + c0 * std::exp(2.0 * m * t)) / (2.0 * m);
}

double expansion_floor_product(int n, double c0, double m, double t) {
  return (n + c0) / (2.0 * m) * std::exp(2.0 * m * t);
}

SphereBoundReport verify_sphere_bound(
    const std::vector<std::pair<double, double>>& samples, double m, int n) {
  SphereBoundReport rep;
  if (samples.empty()) return rep;
  rep.c0 = 2.0 * m * samples.front().second - n;
  rep.c0_positive = rep.c0 > 0;
  if (!rep.c0_positive) return rep;
  double margin = std::numeric_limits<double>::infinity();
  double margin_prod = std::numeric_limits<double>::infinity();
  for (const auto& [t, s] : samples) {
    margin = std::min(margin, s / expansion_floor_ode(n, rep.c0, m, t) - 1.0);
    margin_prod =
        std::min(margin_prod, s / expansion_floor_product(n, rep.c0, m, t) - 1.0);
  }
  rep.margin = margin;
  rep.margin_product = margin_prod;
  rep.ok = margin >= -1e-9;
  return rep;
}

}  // namespace mcflow
