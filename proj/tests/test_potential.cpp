#include <cmath>

#include "doctest.h"
#include "mcflow/potential.hpp"

using namespace mcflow;

namespace {

// Difference quotients of value/gradient/hessian serve as the reference for
// every analytic derivative below.
double fd_grad(const PotentialField& f, const Eigen::VectorXd& x, int i, double s) {
  Eigen::VectorXd p = x, m = x;
  p[i] += s;
  m[i] -= s;
  return (f.value(p) - f.value(m)) / (2 * s);
}

double fd_hess(const PotentialField& f, const Eigen::VectorXd& x, int i, int j, double s) {
  Eigen::VectorXd p = x, m = x;
  p[j] += s;
  m[j] -= s;
  return (f.gradient(p)[i] - f.gradient(m)[i]) / (2 * s);
}

double fd_third(const PotentialField& f, const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                const Eigen::VectorXd& b, const Eigen::VectorXd& c, double s) {
  const Eigen::MatrixXd hp = f.hessian(x + s * c);
  const Eigen::MatrixXd hm = f.hessian(x - s * c);
  return a.dot(((hp - hm) / (2 * s)) * b);
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_SUITE("potential") {

  TEST_CASE("constant field has value but no derivatives") {
    const auto f = PotentialField::constant(3, 2.5);
    const Eigen::VectorXd x = vec3(0.4, -1.2, 0.7);
    CHECK(f.value(x) == 2.5);
    CHECK(f.gradient(x).norm() == 0.0);
    CHECK(f.hessian(x).norm() == 0.0);
    CHECK(f.third_tensor_frobenius(x) == 0.0);
    CHECK(f.kind_name() == "constant");
  }

  TEST_CASE("quadratic diagonal closed forms") {
    const auto f = PotentialField::quadratic_diagonal(vec2(1.0, 1.5));
    const Eigen::VectorXd x = vec2(0.8, -0.6);
    CHECK(f.value(x) == doctest::Approx(0.5 * (1.0 * 0.64 + 1.5 * 0.36)).epsilon(1e-14));
    CHECK(f.gradient(x)[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(f.gradient(x)[1] == doctest::Approx(-0.9).epsilon(1e-14));
    CHECK(f.hessian(x)(0, 0) == 1.0);
    CHECK(f.hessian(x)(1, 1) == 1.5);
    CHECK(f.hessian(x)(0, 1) == 0.0);
    CHECK(f.third_tensor_frobenius(x) == 0.0);
    for (int i = 0; i < 2; ++i)
      CHECK(f.gradient(x)[i] == doctest::Approx(fd_grad(f, x, i, 1e-5)).epsilon(1e-6));
  }

  TEST_CASE("radial quadratic closed forms") {
    const auto f = PotentialField::radial_quadratic(2, 0.5);
    const Eigen::VectorXd x = vec2(1.2, -0.4);
    CHECK(f.value(x) == doctest::Approx(0.25 * x.squaredNorm()).epsilon(1e-14));
    CHECK((f.gradient(x) - 0.5 * x).norm() == doctest::Approx(0.0));
    CHECK((f.hessian(x) - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() ==
          doctest::Approx(0.0));
    for (int i = 0; i < 2; ++i)
      CHECK(f.gradient(x)[i] == doctest::Approx(fd_grad(f, x, i, 1e-5)).epsilon(1e-6));
  }

  TEST_CASE("gaussian bump derivatives match difference quotients") {
    const auto f = PotentialField::gaussian_bump(vec3(0.2, -0.1, 0.3), 1.7, 0.8);
    const Eigen::VectorXd x = vec3(0.5, 0.4, -0.2);
    for (int i = 0; i < 3; ++i)
      CHECK(f.gradient(x)[i] == doctest::Approx(fd_grad(f, x, i, 1e-5)).epsilon(1e-6));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(f.hessian(x)(i, j) == doctest::Approx(fd_hess(f, x, i, j, 1e-5)).epsilon(1e-6));
    const Eigen::VectorXd a = vec3(1, 0.5, -0.25), b = vec3(-0.3, 1, 0.2),
                          c = vec3(0.4, -0.8, 1);
    CHECK(f.third_derivative(x, a, b, c) ==
          doctest::Approx(fd_third(f, x, a, b, c, 1e-4)).epsilon(1e-5));
    // symmetric in all three slots
    CHECK(f.third_derivative(x, a, b, c) == doctest::Approx(f.third_derivative(x, c, a, b)));
    CHECK(f.third_derivative(x, a, b, c) == doctest::Approx(f.third_derivative(x, b, c, a)));
    // Frobenius norm dominates any unit-direction contraction
    CHECK(f.third_tensor_frobenius(x) >=
          std::abs(f.third_derivative(x, a.normalized(), b.normalized(), c.normalized())));
  }

  TEST_CASE("certified bounds for polynomial kinds") {
    const Box region = make_box({-4000.0, -4000.0}, {4000.0, 4000.0});
    const auto f = PotentialField::quadratic_diagonal(vec2(1.0, 1.5));
    const auto hb = f.hessian_eigen_bounds(region);
    CHECK(hb.certified);
    CHECK(hb.lambda_lo == 1.0);
    CHECK(hb.lambda_hi == 1.5);
    CHECK(hb.c3 == 0.0);
    CHECK(f.third_derivative_bound(region) == 0.0);

    const auto g = PotentialField::radial_quadratic(2, 0.7);
    const auto gb = g.hessian_eigen_bounds(region);
    CHECK(gb.certified);
    CHECK(gb.lambda_lo == 0.7);
    CHECK(gb.lambda_hi == 0.7);
  }

  TEST_CASE("sampled gaussian bounds agree with closed-form eigenvalues") {
    // Hessian of A exp(-|r|^2/(2 s^2)) has eigenvalues e (|r|^2/s^4 - 1/s^2)
    // (radial) and -e/s^2 (transverse), e = A exp(-|r|^2/(2 s^2)).
    const double A = 1.3, s = 0.9;
    const auto f = PotentialField::gaussian_bump(vec2(0.0, 0.0), A, s);
    const Box region = make_box({-1.0, -0.5}, {1.0, 1.5});
    const int grid = 41;
    double lo = 1e300, hi = -1e300;
    for_each_grid_node(region, grid, [&](const Eigen::VectorXd& x) {
      const double e = A * std::exp(-x.squaredNorm() / (2 * s * s));
      const double radial = e * (x.squaredNorm() / (s * s * s * s) - 1.0 / (s * s));
      const double transverse = -e / (s * s);
      lo = std::min(lo, std::min(radial, transverse));
      hi = std::max(hi, std::max(radial, transverse));
    });
    const auto hb = f.hessian_eigen_bounds(region, grid);
    CHECK_FALSE(hb.certified);
    CHECK(hb.lambda_lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(hb.lambda_hi == doctest::Approx(hi).epsilon(1e-12));
    CHECK(f.third_derivative_bound(region, grid) > 0.0);
  }

  TEST_CASE("box membership honours slack") {
    const Box b = make_box({-1.0, 0.0}, {1.0, 2.0});
    CHECK(b.contains(vec2(0.0, 1.0)));
    CHECK_FALSE(b.contains(vec2(1.1, 1.0)));
    CHECK(b.contains(vec2(1.1, 1.0), 0.2));
    CHECK_FALSE(b.contains(vec2(0.0, -0.3), 0.2));
  }

  TEST_CASE("grid walker visits the full lattice in row-major order") {
    const Box b = make_box({0.0, 0.0}, {1.0, 2.0});
    int count = 0;
    Eigen::VectorXd first, last;
    for_each_grid_node(b, 3, [&](const Eigen::VectorXd& x) {
      if (count == 0) first = x;
      last = x;
      ++count;
    });
    CHECK(count == 9);
    CHECK(first.isApprox(vec2(0.0, 0.0)));
    CHECK(last.isApprox(vec2(1.0, 2.0)));
  }

  TEST_CASE("constructor and argument validation") {
    CHECK_THROWS_AS(PotentialField::gaussian_bump(vec2(0, 0), 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(PotentialField::radial_quadratic(0, 1.0), std::invalid_argument);
    const auto f = PotentialField::quadratic_diagonal(vec2(1.0, 2.0));
    CHECK_THROWS_AS(f.value(vec3(0, 0, 0)), std::invalid_argument);
  }

}
