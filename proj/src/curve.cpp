#include "mcflow/curve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mcflow {
namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

constexpr int kMinVertices = 8;

// The per-step loops below run millions of times; all geometry kernels work
// on fixed-size stack vectors and never touch the heap.
template <int D>
using RowD = Eigen::Matrix<double, 1, D>;

template <int D>
RowD<D> row_at(const Eigen::MatrixXd& pts, int i) {
  return pts.row(wrap(i, static_cast<int>(pts.rows()))).template head<D>();
}

// Circumcircle through vertices i-1, i, i+1: the returned vector has
// magnitude 1/R_circ and points at the circumcenter. Collinear triples give
// zero.
template <int D>
RowD<D> curvature_kernel(const Eigen::MatrixXd& pts, int i) {
  const RowD<D> B = row_at<D>(pts, i);
  const RowD<D> u = row_at<D>(pts, i - 1) - B;
  const RowD<D> w = row_at<D>(pts, i + 1) - B;
  const double uu = u.squaredNorm(), ww = w.squaredNorm(), uw = u.dot(w);
  // Gram determinant uu*ww - uw^2 as the squared cross product. The
  // subtractive form cancels catastrophically on near-collinear triples
  // (resampling places vertices exactly on chords), letting rounding noise
  // through the guard and producing wild curvature spikes.
  double det;
  if constexpr (D == 2) {
    const double cross = u[0] * w[1] - u[1] * w[0];
    det = cross * cross;
  } else {
    det = u.cross(w).squaredNorm();
  }
  if (!(det > 1e-24 * uu * ww)) return RowD<D>::Zero();
  // circumcenter B + alpha u + beta w, equidistant from all three vertices
  const double alpha = 0.5 * ww * (uu - uw) / det;
  const double beta = 0.5 * uu * (ww - uw) / det;
  const RowD<D> r = alpha * u + beta * w;
  return r / r.squaredNorm();
}

template <int D>
RowD<D> tangent_kernel(const Eigen::MatrixXd& pts, int i) {
  return (row_at<D>(pts, i + 1) - row_at<D>(pts, i - 1)).normalized();
}

template <int D>
double max_a2_impl(const Eigen::MatrixXd& pts) {
  double s = 0;
  for (int i = 0; i < pts.rows(); ++i)
    s = std::max(s, curvature_kernel<D>(pts, i).squaredNorm());
  return s;
}

template <int D>
void velocities_impl(const DiscreteCurve& c, const PotentialField& field,
                     Eigen::MatrixXd& vel) {
  const int n = c.size();
  Eigen::VectorXd x(D);
  for (int i = 0; i < n; ++i) {
    x = c.pts.row(i).transpose();
    const RowD<D> total =
        curvature_kernel<D>(c.pts, i) + field.gradient(x).transpose();
    if constexpr (D == 2) {
      const RowD<2> t = tangent_kernel<2>(c.pts, i);
      RowD<2> nu;
      nu << t[1], -t[0];
      vel.row(i) = total.dot(nu) * nu;
    } else {
      const RowD<3> t = tangent_kernel<3>(c.pts, i);
      vel.row(i) = total - total.dot(t) * t;
    }
  }
}

DiscreteCurve from_polar(int n, const std::function<Eigen::Vector2d(double)>& f) {
  DiscreteCurve c;
  c.pts.resize(n, 2);
  for (int j = 0; j < n; ++j) {
    const double t = 2.0 * M_PI * j / n;
    c.pts.row(j) = f(t).transpose();
  }
  validate_curve(c);
  return c;
}

}  // namespace

Eigen::VectorXd DiscreteCurve::vertex(int i) const {
  return pts.row(wrap(i, size())).transpose();
}

void validate_curve(const DiscreteCurve& c) {
  const int n = c.size();
  if (n < kMinVertices) throw std::invalid_argument("curve needs at least 8 vertices");
  if (c.dim() != 2 && c.dim() != 3)
    throw std::invalid_argument("curve must live in R^2 or R^3");
  const double mean = total_length(c) / n;
  if (!(min_edge(c) > 1e-12 * mean))
    throw std::invalid_argument("curve has (near-)duplicate consecutive vertices");
  if (c.dim() == 2 && !(signed_area(c) > 0))
    throw std::invalid_argument("2D curve must be counterclockwise");
}

DiscreteCurve make_circle(int n, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("make_circle: radius must be positive");
  return from_polar(n, [radius](double t) {
    return Eigen::Vector2d(radius * std::cos(t), radius * std::sin(t));
  });
}

DiscreteCurve make_ellipse(int n, double a, double b) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("make_ellipse: bad semi-axes");
  return from_polar(
      n, [a, b](double t) { return Eigen::Vector2d(a * std::cos(t), b * std::sin(t)); });
}

DiscreteCurve make_star(int n, double radius, double amplitude, int lobes) {
  if (!(radius > 0)) throw std::invalid_argument("make_star: radius must be positive");
  if (lobes < 1) throw std::invalid_argument("make_star: lobes must be >= 1");
  if (!(amplitude >= 0) || amplitude >= 1)
    throw std::invalid_argument("make_star: amplitude must be in [0, 1) to stay embedded");
  return from_polar(n, [radius, amplitude, lobes](double t) {
    const double r = radius * (1.0 + amplitude * std::cos(lobes * t));
    return Eigen::Vector2d(r * std::cos(t), r * std::sin(t));
  });
}

DiscreteCurve make_tilted_circle(int n, double radius, const Eigen::Vector3d& plane_normal) {
  if (!(radius > 0))
    throw std::invalid_argument("make_tilted_circle: radius must be positive");
  const double nn = plane_normal.norm();
  if (!(nn > 0)) throw std::invalid_argument("make_tilted_circle: zero normal");
  const Eigen::Vector3d nh = plane_normal / nn;
  const Eigen::Vector3d seed =
      std::abs(nh.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d p = (seed - seed.dot(nh) * nh).normalized();
  const Eigen::Vector3d q = nh.cross(p);
  DiscreteCurve c;
  c.pts.resize(n, 3);
  for (int j = 0; j < n; ++j) {
    const double t = 2.0 * M_PI * j / n;
    c.pts.row(j) = (radius * std::cos(t) * p + radius * std::sin(t) * q).transpose();
  }
  validate_curve(c);
  return c;
}

DiscreteCurve make_wavy_space_curve(int n, double radius, double amplitude) {
  if (!(radius > 0))
    throw std::invalid_argument("make_wavy_space_curve: radius must be positive");
  DiscreteCurve c;
  c.pts.resize(n, 3);
  for (int j = 0; j < n; ++j) {
    const double t = 2.0 * M_PI * j / n;
    c.pts.row(j) << radius * std::cos(t), radius * std::sin(t),
        amplitude * std::sin(2.0 * t);
  }
  validate_curve(c);
  return c;
}

double total_length(const DiscreteCurve& c) {
  const int n = c.size();
  double s = 0;
  for (int i = 0; i < n; ++i) s += (c.pts.row((i + 1) % n) - c.pts.row(i)).norm();
  return s;
}

double min_edge(const DiscreteCurve& c) {
  const int n = c.size();
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    s = std::min(s, (c.pts.row((i + 1) % n) - c.pts.row(i)).norm());
  return s;
}

double max_edge(const DiscreteCurve& c) {
  const int n = c.size();
  double s = 0;
  for (int i = 0; i < n; ++i)
    s = std::max(s, (c.pts.row((i + 1) % n) - c.pts.row(i)).norm());
  return s;
}

double edge_ratio(const DiscreteCurve& c) { return max_edge(c) / min_edge(c); }

double signed_area(const DiscreteCurve& c) {
  if (c.dim() != 2) throw std::invalid_argument("signed_area: 2D only");
  const int n = c.size();
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    s += c.pts(i, 0) * c.pts(j, 1) - c.pts(j, 0) * c.pts(i, 1);
  }
  return 0.5 * s;
}

Eigen::VectorXd vertex_centroid(const DiscreteCurve& c) {
  return c.pts.colwise().mean().transpose();
}

Eigen::VectorXd curvature_vector(const DiscreteCurve& c, int i) {
  if (c.dim() == 2) return curvature_kernel<2>(c.pts, i).transpose();
  return curvature_kernel<3>(c.pts, i).transpose();
}

Eigen::VectorXd tangent_dir(const DiscreteCurve& c, int i) {
  if (c.dim() == 2) return tangent_kernel<2>(c.pts, i).transpose();
  return tangent_kernel<3>(c.pts, i).transpose();
}

Eigen::VectorXd outward_normal(const DiscreteCurve& c, int i) {
  if (c.dim() != 2) throw std::invalid_argument("outward_normal: 2D only");
  const RowD<2> t = tangent_kernel<2>(c.pts, i);
  Eigen::VectorXd nu(2);
  nu << t[1], -t[0];
  return nu;
}

double scalar_curvature(const DiscreteCurve& c, int i) {
  if (c.dim() != 2) throw std::invalid_argument("scalar_curvature: 2D only");
  const RowD<2> kv = curvature_kernel<2>(c.pts, i);
  const RowD<2> t = tangent_kernel<2>(c.pts, i);
  // -<kv, nu> with nu = (t_y, -t_x)
  return -(kv[0] * t[1] - kv[1] * t[0]);
}

double dual_length(const DiscreteCurve& c, int i) {
  const int n = c.size();
  const int j = wrap(i, n);
  return 0.5 * ((c.pts.row(j) - c.pts.row(wrap(i - 1, n))).norm() +
                (c.pts.row((j + 1) % n) - c.pts.row(j)).norm());
}

double max_a2(const DiscreteCurve& c) {
  return c.dim() == 2 ? max_a2_impl<2>(c.pts) : max_a2_impl<3>(c.pts);
}

double min_scalar_curvature(const DiscreteCurve& c) {
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.size(); ++i) s = std::min(s, scalar_curvature(c, i));
  return s;
}

double min_half_norm2(const DiscreteCurve& c) {
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.size(); ++i) s = std::min(s, 0.5 * c.pts.row(i).squaredNorm());
  return s;
}

Eigen::MatrixXd flow_velocities(const DiscreteCurve& c, const PotentialField& field) {
  if (field.dimension() != c.dim())
    throw std::invalid_argument("flow_velocities: potential dimension mismatch");
  Eigen::MatrixXd vel(c.size(), c.dim());
  if (c.dim() == 2)
    velocities_impl<2>(c, field, vel);
  else
    velocities_impl<3>(c, field, vel);
  return vel;
}

double adaptive_dt(const DiscreteCurve& c, const Eigen::MatrixXd& velocities,
                   double dt_max, double cfl) {
  const double l = min_edge(c);
  const double vmax = velocities.rowwise().norm().maxCoeff();
  const double W = vmax / l;
  const double dt = cfl * l * l / (2.0 * (1.0 + l * l * W));
  return std::min(dt_max, dt);
}

void euler_step(DiscreteCurve& c, const Eigen::MatrixXd& velocities, double dt) {
  c.pts += dt * velocities;
}

bool needs_remesh(const DiscreteCurve& c, double ratio_limit) {
  return edge_ratio(c) > ratio_limit;
}

DiscreteCurve resample_uniform(const DiscreteCurve& c) {
  const int n = c.size();
  const double L = total_length(c);
  std::vector<double> cum(n + 1, 0.0);
  for (int i = 0; i < n; ++i)
    cum[i + 1] = cum[i] + (c.pts.row((i + 1) % n) - c.pts.row(i)).norm();

  DiscreteCurve out;
  out.pts.resize(n, c.dim());
  int seg = 0;
  for (int j = 0; j < n; ++j) {
    const double target = L * j / n;
    while (seg + 1 < n && cum[seg + 1] < target) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double frac = span > 0 ? (target - cum[seg]) / span : 0.0;
    out.pts.row(j) = (1.0 - frac) * c.pts.row(seg) + frac * c.pts.row((seg + 1) % n);
  }

  // linear interpolation cuts corners; restore the total length exactly by a
  // uniform dilation about the vertex centroid
  const double Lnew = total_length(out);
  if (Lnew > 0) {
    const Eigen::RowVectorXd ctr = out.pts.colwise().mean();
    out.pts = ((out.pts.rowwise() - ctr) * (L / Lnew)).rowwise() + ctr;
  }
  return out;
}

bool self_intersects(const DiscreteCurve& c) {
  if (c.dim() != 2) throw std::invalid_argument("self_intersects: 2D only");
  const int n = c.size();
  auto cross2 = [](const RowD<2>& a, const RowD<2>& b) {
    return a[0] * b[1] - a[1] * b[0];
  };
  auto proper = [&](int i, int j) {
    const RowD<2> p1 = row_at<2>(c.pts, i), p2 = row_at<2>(c.pts, i + 1);
    const RowD<2> q1 = row_at<2>(c.pts, j), q2 = row_at<2>(c.pts, j + 1);
    const double d1 = cross2(q2 - q1, p1 - q1);
    const double d2 = cross2(q2 - q1, p2 - q1);
    const double d3 = cross2(p2 - p1, q1 - p1);
    const double d4 = cross2(p2 - p1, q2 - p1);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
      if (proper(i, j)) return true;
    }
  return false;
}

}  // namespace mcflow
