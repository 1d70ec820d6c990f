#pragma once

#include <Eigen/Dense>

#include "mcflow/potential.hpp"

namespace mcflow {

// Closed polyline in R^d, d = 2 or 3, one vertex per row. The 2D factories
// normalize to positive signed area (counterclockwise), which makes the
// rotated tangent the outward normal.
struct DiscreteCurve {
  Eigen::MatrixXd pts;

  int size() const { return static_cast<int>(pts.rows()); }
  int dim() const { return static_cast<int>(pts.cols()); }
  Eigen::VectorXd vertex(int i) const;  // index taken modulo the vertex count
};

DiscreteCurve make_circle(int n, double radius);
DiscreteCurve make_ellipse(int n, double a, double b);
// polar r(t) = radius * (1 + amplitude cos(lobes t)); amplitude must be < 1
// so the curve stays embedded
DiscreteCurve make_star(int n, double radius, double amplitude, int lobes);
DiscreteCurve make_tilted_circle(int n, double radius, const Eigen::Vector3d& plane_normal);
DiscreteCurve make_wavy_space_curve(int n, double radius, double amplitude);

// Throws std::invalid_argument on: fewer than 8 vertices, near-duplicate
// consecutive vertices, or (d=2) non-positive signed area.
void validate_curve(const DiscreteCurve& c);

double total_length(const DiscreteCurve& c);
double min_edge(const DiscreteCurve& c);
double max_edge(const DiscreteCurve& c);
double edge_ratio(const DiscreteCurve& c);
double signed_area(const DiscreteCurve& c);  // d=2 only
Eigen::VectorXd vertex_centroid(const DiscreteCurve& c);

// Curvature vector at vertex i from the circumcircle through vertices
// i-1, i, i+1: magnitude 1/R_circ, pointing at the circumcenter. Collinear
// triples give the zero vector.
Eigen::VectorXd curvature_vector(const DiscreteCurve& c, int i);
Eigen::VectorXd tangent_dir(const DiscreteCurve& c, int i);
Eigen::VectorXd outward_normal(const DiscreteCurve& c, int i);  // d=2 only
// -<curvature vector, outward normal>; positive on convex curves
double scalar_curvature(const DiscreteCurve& c, int i);  // d=2 only
double dual_length(const DiscreteCurve& c, int i);
double max_a2(const DiscreteCurve& c);
double min_scalar_curvature(const DiscreteCurve& c);  // d=2 only
double min_half_norm2(const DiscreteCurve& c);

// Per-vertex flow velocity: the normal-space projection of
// (curvature vector + grad w). For d=2 this equals -(H - <grad w, nu>) nu.
Eigen::MatrixXd flow_velocities(const DiscreteCurve& c, const PotentialField& field);
// cfl * l_min^2 / (2 (1 + l_min^2 W)) with W = max |velocity| / l_min,
// capped at dt_max
double adaptive_dt(const DiscreteCurve& c, const Eigen::MatrixXd& velocities,
                   double dt_max, double cfl);
void euler_step(DiscreteCurve& c, const Eigen::MatrixXd& velocities, double dt);

bool needs_remesh(const DiscreteCurve& c, double ratio_limit);
// Uniform-arclength resampling with the same vertex count, anchored at vertex
// 0. Total length is restored to relative 1e-12 by a uniform scaling about
// the vertex centroid.
DiscreteCurve resample_uniform(const DiscreteCurve& c);

bool self_intersects(const DiscreteCurve& c);  // d=2 only

}  // namespace mcflow
