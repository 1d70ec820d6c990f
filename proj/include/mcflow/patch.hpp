#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflow/potential.hpp"

namespace mcflow {

// Internal scalar for the stencil engine. Extended precision keeps the
// roundoff floor of nested difference quotients well below the residual
// tolerances we certify.
using XReal = long double;
using XVec = Eigen::Matrix<XReal, Eigen::Dynamic, 1>;
using XMat = Eigen::Matrix<XReal, Eigen::Dynamic, Eigen::Dynamic>;

struct ImmersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smooth immersion F: R^n -> R^(n+k), given by a closed-form evaluator.
// All derived geometry is obtained by finite differences of `eval`.
struct ImmersionPatch {
  std::string shape;
  int n = 1;  // intrinsic dimension
  int k = 1;  // codimension
  double stencil = 1e-2;
  std::function<XVec(const XVec&)> eval;

  // Hypersurface normal orientation: outward from `orient_ref` when
  // `orient_outward`, otherwise aligned with the direction `orient_ref`.
  bool orient_outward = true;
  Eigen::VectorXd orient_ref;

  // Deterministic generic parameter points used by the report drivers.
  std::vector<Eigen::VectorXd> sample_points;

  // Per-parameter closed interval the stencils must stay inside, or nullopt
  // for periodic/unbounded directions.
  std::vector<std::optional<std::array<double, 2>>> clip;

  int ambient() const { return n + k; }
};

ImmersionPatch circle_patch(double radius);
ImmersionPatch ellipse_patch(double a, double b);
ImmersionPatch tilted_circle_patch(double radius, const Eigen::Vector3d& plane_normal);
ImmersionPatch wavy_curve_patch(double radius, double amplitude);
ImmersionPatch sphere_patch(double radius);
ImmersionPatch ellipsoid_patch(double a, double b, double c);
struct GraphMonomial {
  int px = 0, py = 0;
  double coeff = 0.0;
};
ImmersionPatch graph_patch(std::vector<GraphMonomial> monomials);
ImmersionPatch plane_patch();
// Same shape composed with x -> Q x + b.
ImmersionPatch with_rigid_motion(const ImmersionPatch& p, const Eigen::MatrixXd& Q,
                                 const Eigen::VectorXd& b);

// Pointwise geometry of the immersed patch at a parameter point.
struct ShapeTensors {
  Eigen::VectorXd position;
  std::vector<Eigen::VectorXd> tangents;       // dF/du_i
  Eigen::MatrixXd metric, metric_inv;          // g_ij, g^ij
  std::vector<Eigen::VectorXd> frame;          // k unit normals
  std::vector<Eigen::MatrixXd> second_form;    // h_{alpha ij} per normal
  Eigen::VectorXd mean_curvature;              // H_alpha
  double a2 = 0.0;                             // |A|^2
  std::vector<Eigen::MatrixXd> christoffel;    // [l](i,j) = Gamma^l_ij
  std::vector<Eigen::MatrixXd> normal_conn;    // [i](gamma,beta) = C^gamma_{i beta}
  double tr_a3 = 0.0, z_invariant = 0.0;       // hypersurface only (NaN otherwise)
  Eigen::VectorXd laplace_position;            // Delta F (mean curvature vector)
};

ShapeTensors shape_tensors(const ImmersionPatch& p, const Eigen::VectorXd& u);
ShapeTensors shape_tensors(const ImmersionPatch& p, const Eigen::VectorXd& u, double h);

// First covariant derivative of the second fundamental form,
// grad_h[alpha][l](i,j) = (nabla_l h)_{alpha ij}, plus |nabla A|^2.
struct CovariantA {
  std::vector<std::vector<Eigen::MatrixXd>> grad_h;
  double norm2 = 0.0;
};

CovariantA covariant_a(const ImmersionPatch& p, const Eigen::VectorXd& u);
CovariantA covariant_a(const ImmersionPatch& p, const Eigen::VectorXd& u, double h);

// Residuals of the first-order structure equations at one parameter point:
//   gauss               intrinsic curvature vs. quadratic form of h
//   ricci               normal curvature vs. commutator of h (codim >= 2)
//   codazzi             symmetry of nabla h in its covariant slots
//   weingarten          frame derivative vs. shape operator + connection
//   hessian_normal      tangential Hessian of F vs. -h nu   (hypersurface)
//   normal_derivative   d(nu) vs. shape operator             (hypersurface)
std::map<std::string, double> structure_residuals(const ImmersionPatch& p,
                                                  const Eigen::VectorXd& u, double h);

// Residuals of the second-order commutation identities (hypersurface):
//   simons_tensor      Hess H vs. Laplace h - H h^2 + |A|^2 h
//   simons_contracted  2 h^ij Hess_ij H vs. Laplace|A|^2 - 2|nabla A|^2 - 2 Z
std::map<std::string, double> simons_residuals(const ImmersionPatch& p,
                                               const Eigen::VectorXd& u, double h);

// One-sided flow derivative of |A|^2 against the assembled reaction-diffusion
// right side. `terms` carries the individual right-side contributions.
// For hypersurfaces the per-component form is evaluated twice: with the
// tangential Hessian coupling symmetrized over (i,j) and with that term
// doubled on one slot instead; both residuals are reported.
struct EvolutionBreakdown {
  double lhs = 0.0, rhs = 0.0, residual = 0.0;
  std::map<std::string, double> terms;
  double hij_symmetrized = 0.0, hij_literal = 0.0;
};

EvolutionBreakdown evolution_residual_hypersurface(const ImmersionPatch& p,
                                                   const PotentialField& field,
                                                   const Eigen::VectorXd& u,
                                                   double eps = 1e-6);
EvolutionBreakdown evolution_residual_hypersurface(const ImmersionPatch& p,
                                                   const PotentialField& field,
                                                   const Eigen::VectorXd& u, double eps,
                                                   double h);
EvolutionBreakdown evolution_residual_highercodim(const ImmersionPatch& p,
                                                  const PotentialField& field,
                                                  const Eigen::VectorXd& u,
                                                  double eps = 1e-6);
EvolutionBreakdown evolution_residual_highercodim(const ImmersionPatch& p,
                                                  const PotentialField& field,
                                                  const Eigen::VectorXd& u, double eps,
                                                  double h);

struct IdentityEntry {
  std::string name;
  double residual = 0.0;  // at the finer resolution
  double stencil = 0.0;   // resolution the residual was taken at (h or eps)
  double order = 0.0;     // log2(coarse/fine); meaningless when exact
  bool exact = false;     // both residuals below the exactness floor
};

struct IdentityResidualReport {
  std::vector<IdentityEntry> entries;
  const IdentityEntry* find(const std::string& name) const;
};

// log2(residual(h) / residual(h/2)); `exact` when both sit below 1e-13.
IdentityEntry estimate_order(const std::string& name, double r_coarse, double r_fine,
                             double fine_resolution);

// Two-resolution driver over the patch sample points. Structure and Simons
// residuals run at (2h, h); evolution residuals (when `field` is given) run
// at eps = 1e-6 for the reported residual and at (1e-4, 5e-5) for the order.
IdentityResidualReport verify_patch(const ImmersionPatch& p, const PotentialField* field,
                                    double h);

}  // namespace mcflow
