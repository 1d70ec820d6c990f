#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflow {

// Axis-aligned box in ambient space.
struct Box {
  Eigen::VectorXd lo, hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi);

// Extremal Hessian eigenvalues and a sup bound on the third derivative of a
// scalar potential over `region`. `certified` means the numbers are exact on
// the whole region (polynomial potentials); otherwise they come from a
// deterministic sample grid.
struct HessianBounds {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double c3 = 0.0;
  Box region;
  bool certified = false;
};

// Scalar potential on ambient space. Closed set of kinds; derivatives are
// analytic, never finite-differenced.
class PotentialField {
 public:
  enum class Kind { Constant, QuadraticDiagonal, RadialQuadratic, GaussianBump };

  static PotentialField constant(int dim, double value = 0.0);
  // w(x) = 1/2 * sum_i coeffs[i] * x_i^2
  static PotentialField quadratic_diagonal(Eigen::VectorXd coeffs);
  // w(x) = c/2 * |x|^2
  static PotentialField radial_quadratic(int dim, double coeff);
  // w(x) = amplitude * exp(-|x - center|^2 / (2 width^2))
  static PotentialField gaussian_bump(Eigen::VectorXd center, double amplitude,
                                      double width);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  int dimension() const { return dim_; }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  // Third derivative tensor contracted with three directions.
  double third_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b, const Eigen::VectorXd& c) const;
  // Frobenius norm of the full third-derivative tensor at x.
  double third_tensor_frobenius(const Eigen::VectorXd& x) const;

  // grid is the number of sample nodes per axis for the non-polynomial kinds.
  HessianBounds hessian_eigen_bounds(const Box& region, int grid = 101) const;
  double third_derivative_bound(const Box& region, int grid = 101) const;

  // Parameter access (used for serialization / reports).
  const Eigen::VectorXd& coefficients() const { return params_; }
  double scalar_param() const { return scalar_; }
  const Eigen::VectorXd& center() const { return center_; }

 private:
  PotentialField(Kind k, int dim) : kind_(k), dim_(dim) {}
  void require_dim(const Eigen::VectorXd& x) const;

  Kind kind_;
  int dim_;
  Eigen::VectorXd params_;  // quadratic-diagonal coefficients
  double scalar_ = 0.0;     // constant value / radial coefficient / amplitude
  double width_ = 1.0;      // gaussian width
  Eigen::VectorXd center_;  // gaussian center
};

// Visits the deterministic sample lattice of `region` (grid nodes per axis,
// endpoints included) in row-major order.
void for_each_grid_node(const Box& region, int grid,
                        const std::function<void(const Eigen::VectorXd&)>& fn);

}  // namespace mcflow
