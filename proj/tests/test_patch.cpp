#include <cmath>

#include "doctest.h"
#include "mcflow/patch.hpp"

using namespace mcflow;

namespace {

Eigen::VectorXd par1(double t) {
  Eigen::VectorXd u(1);
  u << t;
  return u;
}

Eigen::VectorXd par2(double a, double b) {
  Eigen::VectorXd u(2);
  u << a, b;
  return u;
}

}  // namespace

TEST_SUITE("patch") {

  TEST_CASE("circle of radius 2: curvature, frame, Laplacian") {
    const auto p = circle_patch(2.0);
    const auto t = shape_tensors(p, par1(0.3));
    CHECK(t.metric(0, 0) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(t.mean_curvature[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(t.a2 == doctest::Approx(0.25).epsilon(1e-8));
    // outward normal
    CHECK(t.frame[0].dot(t.position) > 0);
    CHECK((t.frame[0] - t.position.normalized()).norm() < 1e-9);
    // Laplacian of the position is the curvature vector -H nu
    CHECK((t.laplace_position + 0.5 * t.frame[0]).norm() < 1e-8);
    CHECK(t.tr_a3 == doctest::Approx(0.125).epsilon(1e-7));
  }

  TEST_CASE("ellipse curvature against the closed form") {
    const double a = 2.0, b = 1.0, u = 0.7;
    const auto p = ellipse_patch(a, b);
    const auto t = shape_tensors(p, par1(u));
    const double s = std::sin(u), c = std::cos(u);
    const double kap = a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
    CHECK(t.mean_curvature[0] == doctest::Approx(kap).epsilon(1e-8));
    CHECK(t.a2 == doctest::Approx(kap * kap).epsilon(1e-8));
    CHECK(t.mean_curvature[0] > 0);  // convex, outward frame
  }

  TEST_CASE("unit sphere: h equals g, curvature invariants") {
    const auto p = sphere_patch(1.0);
    const auto t = shape_tensors(p, par2(0.7, 1.1));
    CHECK((t.second_form[0] - t.metric).norm() < 1e-7);
    CHECK(t.mean_curvature[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(t.a2 == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(t.tr_a3 == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(t.z_invariant) < 1e-6);
    CHECK((t.laplace_position + 2.0 * t.position).norm() < 1e-7);
  }

  TEST_CASE("paraboloid graph at the tip") {
    const auto p = graph_patch({{2, 0, 1.0}, {0, 2, 1.0}});
    const auto t = shape_tensors(p, par2(0.0, 0.0));
    CHECK((t.frame[0] - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
    CHECK(t.second_form[0](0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(t.second_form[0](1, 1) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(std::abs(t.second_form[0](0, 1)) < 1e-12);
    CHECK(t.mean_curvature[0] == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(t.a2 == doctest::Approx(8.0).epsilon(1e-12));

    // Both sides of the curvature commutation identities are O(30) here, so a
    // small residual is a genuine cancellation, not 0 == 0.
    const auto sim = simons_residuals(p, par2(0.0, 0.0), 5e-3);
    CHECK(sim.at("simons_tensor") < 1e-5);
    CHECK(sim.at("simons_contracted") < 1e-4);
  }

  TEST_CASE("flat plane is exact") {
    const auto p = plane_patch();
    const auto st = structure_residuals(p, par2(0.1, -0.2), 1e-2);
    for (const auto& [name, r] : st) {
      CAPTURE(name);
      CHECK(r < 1e-13);
    }
    const auto sim = simons_residuals(p, par2(0.1, -0.2), 1e-2);
    CHECK(sim.at("simons_tensor") < 1e-13);
    CHECK(sim.at("simons_contracted") < 1e-13);

    const auto rep = verify_patch(p, nullptr, 1e-2);
    for (const auto& e : rep.entries) {
      CAPTURE(e.name);
      CHECK(e.exact);
    }
  }

  TEST_CASE("space curve in R^3: invariants of the tilted circle") {
    const auto p = tilted_circle_patch(1.5, Eigen::Vector3d(1.0, 1.0, 1.0));
    const auto t = shape_tensors(p, par1(1.1));
    const double want = 1.0 / 2.25;
    CHECK(t.mean_curvature.squaredNorm() == doctest::Approx(want).epsilon(1e-8));
    CHECK(t.a2 == doctest::Approx(want).epsilon(1e-8));
    CHECK((t.laplace_position + t.position / 2.25).norm() < 1e-8);
    // normal connection is antisymmetric
    CHECK(t.normal_conn[0](0, 1) == doctest::Approx(-t.normal_conn[0](1, 0)).epsilon(1e-9));
    const auto st = structure_residuals(p, par1(1.1), 1e-2);
    CHECK(st.at("ricci") < 1e-6);
    CHECK(st.at("gauss") < 1e-6);
    CHECK(st.at("codazzi") < 1e-6);
    CHECK(st.at("weingarten") < 1e-6);
  }

  TEST_CASE("non-planar space curve satisfies the structure equations") {
    const auto p = wavy_curve_patch(1.0, 0.3);
    for (double u : {0.4, 2.1}) {
      const auto st = structure_residuals(p, par1(u), 1e-2);
      for (const auto& [name, r] : st) {
        CAPTURE(name);
        CAPTURE(u);
        CHECK(r < 1e-6);
      }
    }
  }

  TEST_CASE("ellipsoid residuals shrink at fourth order") {
    const auto p = ellipsoid_patch(1.0, 1.0, 1.2);
    const auto u = par2(0.7, 1.1);
    const auto coarse = structure_residuals(p, u, 2e-2);
    const auto fine = structure_residuals(p, u, 1e-2);
    for (const auto& [name, rc] : coarse) {
      CAPTURE(name);
      const double rf = fine.at(name);
      CHECK(rf < 1e-5);
      if (rc > 1e-11) CHECK(rf < rc / 6.0);
    }
    const auto sc = simons_residuals(p, u, 2e-2);
    const auto sf = simons_residuals(p, u, 1e-2);
    for (const auto& [name, rc] : sc) {
      CAPTURE(name);
      const double rf = sf.at(name);
      CHECK(rf < 1e-4);
      if (rc > 1e-11) CHECK(rf < rc / 6.0);
    }
  }

  TEST_CASE("rigid motions leave the invariants unchanged") {
    const auto p = ellipsoid_patch(1.0, 1.0, 1.2);
    const Eigen::Matrix3d Q =
        Eigen::AngleAxisd(0.7, Eigen::Vector3d(1.0, 2.0, 3.0).normalized())
            .toRotationMatrix();
    const Eigen::Vector3d b(0.3, -1.1, 2.2);
    const auto q = with_rigid_motion(p, Q, b);
    const auto u = par2(1.3, 0.9);
    const auto t0 = shape_tensors(p, u);
    const auto t1 = shape_tensors(q, u);
    CHECK(t1.mean_curvature[0] == doctest::Approx(t0.mean_curvature[0]).epsilon(1e-12));
    CHECK(t1.a2 == doctest::Approx(t0.a2).epsilon(1e-12));
    CHECK((t1.metric - t0.metric).norm() < 1e-12);
    CHECK((t1.position - (Q * t0.position + b)).norm() < 1e-12);

    CHECK_THROWS_AS(with_rigid_motion(p, 2.0 * Eigen::Matrix3d::Identity(), b),
                    std::invalid_argument);
  }

  TEST_CASE("covariant derivative of h vanishes on round shapes") {
    const auto ca = covariant_a(sphere_patch(1.3), par2(0.7, 1.1));
    CHECK(ca.norm2 < 1e-10);
    const auto cc = covariant_a(circle_patch(0.8), par1(2.0));
    CHECK(cc.norm2 < 1e-10);
    const auto ce = covariant_a(ellipse_patch(2.0, 1.0), par1(0.7));
    CHECK(ce.norm2 > 1e-2);  // genuinely non-parallel
  }

  TEST_CASE("forced circle: flow derivative of |A|^2 has a closed form") {
    // radius R under speed H - c R: d|A|^2/dt = 2/R^4 - 2c/R^2
    const auto p = circle_patch(1.25);
    const auto w = PotentialField::radial_quadratic(2, 0.5);
    const auto ev = evolution_residual_hypersurface(p, w, par1(0.3), 1e-6);
    const double want = 2.0 / 2.44140625 - 1.0 / 1.5625;
    CHECK(ev.lhs == doctest::Approx(want).epsilon(1e-5));
    CHECK(ev.residual < 1e-5);
    CHECK(ev.terms.size() == 7);
    // for curves the two tangential-Hessian couplings coincide
    CHECK(ev.hij_symmetrized == doctest::Approx(ev.hij_literal).epsilon(1e-12));
    CHECK(ev.hij_symmetrized < 1e-5);
  }

  TEST_CASE("planar space curve reproduces the hypersurface flow derivative") {
    const auto flat = circle_patch(1.25);
    const auto w2 = PotentialField::radial_quadratic(2, 0.5);
    const auto tilted = tilted_circle_patch(1.25, Eigen::Vector3d::UnitZ());
    const auto w3 = PotentialField::radial_quadratic(3, 0.5);
    const auto e1 = evolution_residual_hypersurface(flat, w2, par1(1.1), 1e-6);
    const auto e2 = evolution_residual_highercodim(tilted, w3, par1(1.1), 1e-6);
    CHECK(e2.lhs == doctest::Approx(e1.lhs).epsilon(1e-6));
    CHECK(e2.rhs == doctest::Approx(e1.rhs).epsilon(1e-6));
    CHECK(e2.residual < 1e-5);
    const double want = 2.0 / 2.44140625 - 1.0 / 1.5625;
    CHECK(e2.lhs == doctest::Approx(want).epsilon(1e-5));
  }

  TEST_CASE("anisotropic forcing separates the two h_ij couplings") {
    Eigen::VectorXd cs(3);
    cs << 1.0, 1.5, 2.0;
    const auto w = PotentialField::quadratic_diagonal(cs);

    // on the round sphere h is proportional to g and both couplings agree
    const auto sp = sphere_patch(1.0);
    const auto es = evolution_residual_hypersurface(sp, w, par2(0.7, 1.1), 1e-6);
    CHECK(es.residual < 1e-4);
    CHECK(es.hij_symmetrized < 1e-4);
    CHECK(es.hij_literal < 1e-4);

    // on an ellipsoid only the symmetrized coupling closes the identity
    const auto el = ellipsoid_patch(1.0, 1.0, 1.2);
    const auto ee = evolution_residual_hypersurface(el, w, par2(0.7, 1.1), 1e-6);
    CHECK(ee.residual < 1e-4);
    CHECK(ee.hij_symmetrized < 1e-4);
    CHECK(ee.hij_literal > 100.0 * ee.hij_symmetrized);
  }

  TEST_CASE("order estimation bookkeeping") {
    const auto e = estimate_order("x", 1.6e-5, 1e-6, 1e-2);
    CHECK(e.order == doctest::Approx(4.0));
    CHECK_FALSE(e.exact);
    CHECK(e.residual == 1e-6);
    const auto z = estimate_order("y", 1e-15, 2e-15, 1e-2);
    CHECK(z.exact);
  }

  TEST_CASE("report driver covers every identity") {
    const auto p = sphere_patch(1.0);
    const auto rep = verify_patch(p, nullptr, 1e-2);
    for (const char* name : {"gauss", "codazzi", "weingarten", "hessian_normal",
                             "normal_derivative", "simons_tensor", "simons_contracted"}) {
      const auto* e = rep.find(name);
      REQUIRE(e != nullptr);
      CAPTURE(name);
      CHECK(e->residual < 1e-4);
    }
    CHECK(rep.find("no_such") == nullptr);
  }

  TEST_CASE("degenerate and out-of-range inputs are rejected") {
    ImmersionPatch bad;
    bad.shape = "point";
    bad.n = 1;
    bad.k = 1;
    bad.orient_ref = Eigen::VectorXd::Zero(2);
    bad.clip = {std::nullopt};
    bad.eval = [](const XVec&) {
      XVec f(2);
      f << 1.0, 0.0;
      return f;
    };
    CHECK_THROWS_AS(shape_tensors(bad, par1(0.0)), ImmersionError);

    const auto g = graph_patch({{2, 0, 1.0}});
    CHECK_THROWS_AS(shape_tensors(g, par2(0.99, 0.0)), std::invalid_argument);
    CHECK(shape_tensors(g, par2(0.9, 0.0)).a2 > 0.0);
  }

}
