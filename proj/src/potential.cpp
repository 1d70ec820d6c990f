#include "mcflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcflow {

bool Box::contains(const Eigen::VectorXd& x, double slack) const {
  if (x.size() != lo.size()) throw std::invalid_argument("Box::contains: dimension mismatch");
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw std::invalid_argument("make_box: bad extents");
  Box b;
  b.lo = Eigen::Map<const Eigen::VectorXd>(lo.begin(), static_cast<long>(lo.size()));
  b.hi = Eigen::Map<const Eigen::VectorXd>(hi.begin(), static_cast<long>(hi.size()));
  for (int i = 0; i < b.lo.size(); ++i)
    if (!(b.lo[i] <= b.hi[i])) throw std::invalid_argument("make_box: lo > hi");
  return b;
}

PotentialField PotentialField::constant(int dim, double value) {
  if (dim < 1) throw std::invalid_argument("constant: dim must be positive");
  PotentialField f(Kind::Constant, dim);
  f.scalar_ = value;
  return f;
}

PotentialField PotentialField::quadratic_diagonal(Eigen::VectorXd coeffs) {
  if (coeffs.size() < 1) throw std::invalid_argument("quadratic_diagonal: empty coefficients");
  PotentialField f(Kind::QuadraticDiagonal, static_cast<int>(coeffs.size()));
  f.params_ = std::move(coeffs);
  return f;
}

PotentialField PotentialField::radial_quadratic(int dim, double coeff) {
  if (dim < 1) throw std::invalid_argument("radial_quadratic: dim must be positive");
  PotentialField f(Kind::RadialQuadratic, dim);
  f.scalar_ = coeff;
  return f;
}

PotentialField PotentialField::gaussian_bump(Eigen::VectorXd center, double amplitude,
                                             double width) {
  if (center.size() < 1) throw std::invalid_argument("gaussian_bump: empty center");
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  PotentialField f(Kind::GaussianBump, static_cast<int>(center.size()));
  f.center_ = std::move(center);
  f.scalar_ = amplitude;
  f.width_ = width;
  return f;
}

std::string PotentialField::kind_name() const {
  switch (kind_) {
    case Kind::Constant: return "constant";
    case Kind::QuadraticDiagonal: return "quadratic-diagonal";
    case Kind::RadialQuadratic: return "radial-quadratic";
    case Kind::GaussianBump: return "gaussian-bump";
  }
  return "?";
}

void PotentialField::require_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("PotentialField: point dimension mismatch");
}

double PotentialField::value(const Eigen::VectorXd& x) const {
  require_dim(x);
  switch (kind_) {
    case Kind::Constant:
      return scalar_;
    case Kind::QuadraticDiagonal:
      return 0.5 * params_.cwiseProduct(x).dot(x);
    case Kind::RadialQuadratic:
      return 0.5 * scalar_ * x.squaredNorm();
    case Kind::GaussianBump: {
      const double r2 = (x - center_).squaredNorm();
      return scalar_ * std::exp(-r2 / (2.0 * width_ * width_));
    }
  }
  return 0.0;
}

Eigen::VectorXd PotentialField::gradient(const Eigen::VectorXd& x) const {
  require_dim(x);
  switch (kind_) {
    case Kind::Constant:
      return Eigen::VectorXd::Zero(dim_);
    case Kind::QuadraticDiagonal:
      return params_.cwiseProduct(x);
    case Kind::RadialQuadratic:
      return scalar_ * x;
    case Kind::GaussianBump: {
      const Eigen::VectorXd r = x - center_;
      const double s2 = width_ * width_;
      const double e = scalar_ * std::exp(-r.squaredNorm() / (2.0 * s2));
      return (-e / s2) * r;
    }
  }
  return Eigen::VectorXd::Zero(dim_);
}

Eigen::MatrixXd PotentialField::hessian(const Eigen::VectorXd& x) const {
  require_dim(x);
  switch (kind_) {
    case Kind::Constant:
      return Eigen::MatrixXd::Zero(dim_, dim_);
    case Kind::QuadraticDiagonal:
      return params_.asDiagonal();
    case Kind::RadialQuadratic:
      return scalar_ * Eigen::MatrixXd::Identity(dim_, dim_);
    case Kind::GaussianBump: {
      const Eigen::VectorXd r = x - center_;
      const double s2 = width_ * width_;
      const double e = scalar_ * std::exp(-r.squaredNorm() / (2.0 * s2));
      return e * (r * r.transpose() / (s2 * s2) -
                  Eigen::MatrixXd::Identity(dim_, dim_) / s2);
    }
  }
  return Eigen::MatrixXd::Zero(dim_, dim_);
}

double PotentialField::third_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& c) const {
  require_dim(x);
  require_dim(a);
  require_dim(b);
  require_dim(c);
  if (kind_ != Kind::GaussianBump) return 0.0;
  const Eigen::VectorXd r = x - center_;
  const double s2 = width_ * width_;
  const double e = scalar_ * std::exp(-r.squaredNorm() / (2.0 * s2));
  const double ra = r.dot(a), rb = r.dot(b), rc = r.dot(c);
  return e * ((a.dot(c) * rb + b.dot(c) * ra + a.dot(b) * rc) / (s2 * s2) -
              ra * rb * rc / (s2 * s2 * s2));
}

double PotentialField::third_tensor_frobenius(const Eigen::VectorXd& x) const {
  require_dim(x);
  if (kind_ != Kind::GaussianBump) return 0.0;
  const Eigen::VectorXd r = x - center_;
  const double s2 = width_ * width_;
  const double e = scalar_ * std::exp(-r.squaredNorm() / (2.0 * s2));
  double sum = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        const double t = e * (((i == k ? r[j] : 0.0) + (j == k ? r[i] : 0.0) +
                               (i == j ? r[k] : 0.0)) /
                                  (s2 * s2) -
                              r[i] * r[j] * r[k] / (s2 * s2 * s2));
        sum += t * t;
      }
  return std::sqrt(sum);
}

void for_each_grid_node(const Box& region, int grid,
                        const std::function<void(const Eigen::VectorXd&)>& fn) {
  if (grid < 2) throw std::invalid_argument("for_each_grid_node: grid must be >= 2");
  const int d = region.dimension();
  std::vector<int> idx(d, 0);
  Eigen::VectorXd x(d);
  while (true) {
    for (int i = 0; i < d; ++i)
      x[i] = region.lo[i] + (region.hi[i] - region.lo[i]) * idx[i] / (grid - 1);
    fn(x);
    int i = d - 1;
    while (i >= 0 && ++idx[i] == grid) idx[i--] = 0;
    if (i < 0) break;
  }
}

HessianBounds PotentialField::hessian_eigen_bounds(const Box& region, int grid) const {
  if (region.dimension() != dim_)
    throw std::invalid_argument("hessian_eigen_bounds: region dimension mismatch");
  HessianBounds b;
  b.region = region;
  switch (kind_) {
    case Kind::Constant:
      b.lambda_lo = b.lambda_hi = 0.0;
      b.certified = true;
      return b;
    case Kind::QuadraticDiagonal:
      b.lambda_lo = params_.minCoeff();
      b.lambda_hi = params_.maxCoeff();
      b.certified = true;
      return b;
    case Kind::RadialQuadratic:
      b.lambda_lo = b.lambda_hi = scalar_;
      b.certified = true;
      return b;
    case Kind::GaussianBump: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      for_each_grid_node(region, grid, [&](const Eigen::VectorXd& x) {
        es.compute(hessian(x), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        hi = std::max(hi, es.eigenvalues().maxCoeff());
      });
      b.lambda_lo = lo;
      b.lambda_hi = hi;
      b.certified = false;
      return b;
    }
  }
  return b;
}

double PotentialField::third_derivative_bound(const Box& region, int grid) const {
  if (region.dimension() != dim_)
    throw std::invalid_argument("third_derivative_bound: region dimension mismatch");
  if (kind_ != Kind::GaussianBump) return 0.0;
  double sup = 0.0;
  for_each_grid_node(region, grid, [&](const Eigen::VectorXd& x) {
    sup = std::max(sup, third_tensor_frobenius(x));
  });
  return sup;
}

}  // namespace mcflow
