// Acceptance gate: one self-contained criterion per function, each driven by
// a preset scenario file from scenarios/ and judged against closed-form
// oracles or convergence requirements with the tolerances pinned inline.
// Run as: acceptance --criterion <1..12>. Prints one verdict line per run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mcflow/scenario.hpp"

using namespace mcflow;
namespace fs = std::filesystem;

namespace {

bool expect(bool ok, const std::string& label) {
  std::printf("  %-4s %s\n", ok ? "ok" : "FAIL", label.c_str());
  return ok;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Scenario load(const char* file) {
  return parse_scenario(fs::path(MCFLOW_SCENARIO_DIR) / file);
}

fs::path fresh_out(const char* leaf) {
  const fs::path dir = fs::temp_directory_path() / "mcflow_acceptance" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

HessianBounds bounds_for(const Scenario& s) {
  HessianBounds b;
  if (s.region) {
    b = s.potential.hessian_eigen_bounds(*s.region);
    b.c3 = s.potential.third_derivative_bound(*s.region);
  }
  return b;
}

FlowTrace run_scenario(const Scenario& s) {
  return run_flow(build_curve(*s.curve), s.potential, bounds_for(s), s.flow);
}

double polygon_radius(double length, int n) {
  return length / (2.0 * n * std::sin(M_PI / n));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// 1. Unforced circle reaches extinction at R0^2/2 within 1%, in under 10 s.
bool c01() {
  const Scenario s = load("c01_circle_shrink.json");
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport rep = cmd_simulate(s, fresh_out("c01"));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = expect(rep.outcome == "extinction", "outcome is extinction (got " + rep.outcome + ")");
  ok &= expect(std::abs(rep.terminal_time - 0.5) <= 0.005,
               "extinction time " + num(rep.terminal_time) + " within 1% of 0.5");
  ok &= expect(wall < 10.0, "wall time " + num(wall) + " s under 10 s");
  return ok;
}

// 2. Inward-forced circle tracks R^2(t) = 2 - e^t and dies at ln 2.
bool c02() {
  const Scenario s = load("c02_forced_circle.json");
  const FlowTrace tr = run_scenario(s);
  const Outcome oc = classify(tr, s.flow.blowup_a2);
  bool ok = expect(tr.status == FlowStatus::Extinction, "circle reaches extinction");
  const double want = std::log(2.0);
  ok &= expect(std::abs(oc.time - want) <= 0.01 * want,
               "extinction time " + num(oc.time) + " within 1% of ln 2");
  double worst = 0.0;
  for (const MonitorRecord& r : tr.records) {
    if (r.t > 0.6) break;
    const double exact = std::sqrt(2.0 - std::exp(r.t));
    worst = std::max(worst,
                     std::abs(polygon_radius(r.length, s.curve->n) / exact - 1.0));
  }
  ok &= expect(worst <= 1e-3,
               "radius tracks sqrt(2 - e^t) on [0, 0.6]: worst rel err " + num(worst));
  return ok;
}

// 3. Unit circle under w = |x|^2/2 is stationary to 1e-6 over a unit of time.
bool c03() {
  const Scenario s = load("c03_equilibrium_circle.json");
  const DiscreteCurve start = build_curve(*s.curve);
  const FlowTrace tr = run_flow(start, s.potential, HessianBounds{}, s.flow);
  bool ok = expect(tr.status == FlowStatus::ReachedHorizon, "flow reaches t = 1");
  const double drift =
      (tr.final_curve.pts - start.pts).rowwise().norm().maxCoeff();
  ok &= expect(drift <= 1e-6, "max vertex drift " + num(drift) + " under 1e-6");
  return ok;
}

bool structure_block(const char* fixture) {
  static const std::set<std::string> names = {"gauss",          "ricci",
                                              "codazzi",        "weingarten",
                                              "hessian_normal", "normal_derivative"};
  const Scenario s = load(fixture);
  const IdentityResidualReport rep = verify_patch(build_patch(*s.patch), nullptr, 1e-2);
  bool ok = true;
  int seen = 0;
  for (const IdentityEntry& e : rep.entries) {
    if (!names.count(e.name)) continue;
    ++seen;
    const bool pass = e.exact || (e.residual <= 1e-6 && e.order >= std::log2(3.5));
    ok &= expect(pass, s.name + " " + e.name + ": residual " + num(e.residual) +
                           (e.exact ? " (exact)" : ", order " + num(e.order)));
  }
  ok &= expect(seen >= 3, s.name + " reports " + std::to_string(seen) +
                              " first-order identities");
  return ok;
}

// 4. First-order structure identities: residual <= 1e-6 at h = 1e-2 and a
// ratio of at least 3.5 when the stencil halves, on both sample patches.
bool c04() {
  bool ok = structure_block("c04_identities_ellipsoid.json");
  ok &= structure_block("c04_identities_tilted.json");
  return ok;
}

// 5. Second-order commutation identities: near-exact on the round sphere,
// converging with ratio >= 3.5 on the ellipsoid.
bool c05() {
  const Scenario sph = load("c05_simons_sphere.json");
  const IdentityResidualReport rs = verify_patch(build_patch(*sph.patch), nullptr, 1e-2);
  bool ok = true;
  for (const char* name : {"simons_tensor", "simons_contracted"}) {
    const IdentityEntry* e = rs.find(name);
    ok &= expect(e != nullptr && e->residual <= 1e-5,
                 std::string("sphere ") + name + ": residual " +
                     (e ? num(e->residual) : "missing"));
  }
  const Scenario ell = load("c04_identities_ellipsoid.json");
  const IdentityResidualReport re = verify_patch(build_patch(*ell.patch), nullptr, 1e-2);
  for (const char* name : {"simons_tensor", "simons_contracted"}) {
    const IdentityEntry* e = re.find(name);
    const bool pass = e && (e->exact || e->order >= std::log2(3.5));
    ok &= expect(pass, std::string("ellipsoid ") + name + ": order " +
                           (e ? num(e->order) : "missing"));
  }
  return ok;
}

// 6. Curvature evolution on the circle matches 2/R^4 - 2c/R^2 at eps = 1e-6;
// on the ellipse the residual halves when eps halves.
bool c06() {
  const Scenario sc = load("c06_evolution_circle.json");
  const ImmersionPatch pc = build_patch(*sc.patch);
  const double R = sc.patch->radius;
  const double c = sc.potential.scalar_param();
  const double closed = 2.0 / (R * R * R * R) - 2.0 * c / (R * R);
  double worst_lhs = 0.0, worst_res = 0.0;
  for (const Eigen::VectorXd& u : pc.sample_points) {
    const EvolutionBreakdown br = evolution_residual_hypersurface(pc, sc.potential, u, 1e-6);
    worst_lhs = std::max(worst_lhs, std::abs(br.lhs - closed));
    worst_res = std::max(worst_res, std::abs(br.residual));
  }
  bool ok = expect(worst_lhs <= 1e-3 * std::abs(closed),
                   "time derivative matches closed form: dev " + num(worst_lhs) +
                       " vs " + num(closed));
  ok &= expect(worst_res <= 1e-3 * std::abs(closed),
               "assembled right side matches: residual " + num(worst_res));

  const Scenario se = load("c06_evolution_ellipse.json");
  const ImmersionPatch pe = build_patch(*se.patch);
  double lo_ratio = 1e300, hi_ratio = 0.0;
  for (const Eigen::VectorXd& u : pe.sample_points) {
    const double coarse =
        std::abs(evolution_residual_hypersurface(pe, se.potential, u, 1e-4).residual);
    const double fine =
        std::abs(evolution_residual_hypersurface(pe, se.potential, u, 5e-5).residual);
    const double ratio = coarse / fine;
    lo_ratio = std::min(lo_ratio, ratio);
    hi_ratio = std::max(hi_ratio, ratio);
  }
  ok &= expect(lo_ratio >= 1.5 && hi_ratio <= 2.6,
               "ellipse residual halves with eps: ratios in [" + num(lo_ratio) +
                   ", " + num(hi_ratio) + "]");
  return ok;
}

// 7. Space-curve evolution: small converging residual on the tilted circle;
// a planar embedding reproduces the hypersurface residual.
bool c07() {
  const Scenario s = load("c07_evolution_space.json");
  const ImmersionPatch p = build_patch(*s.patch);
  double worst_rel = 0.0;
  bool shrinking = true;
  for (const Eigen::VectorXd& u : p.sample_points) {
    const EvolutionBreakdown coarse =
        evolution_residual_highercodim(p, s.potential, u, 1e-4);
    const EvolutionBreakdown fine =
        evolution_residual_highercodim(p, s.potential, u, 5e-5);
    const double scale = std::max(std::abs(fine.lhs), std::abs(fine.rhs));
    worst_rel = std::max(worst_rel, std::abs(fine.residual) / scale);
    shrinking = shrinking && std::abs(fine.residual) < std::abs(coarse.residual);
  }
  bool ok = expect(worst_rel <= 1e-2,
                   "tilted-circle relative residual " + num(worst_rel) + " under 1e-2");
  ok &= expect(shrinking, "residual shrinks when eps halves");

  const double R = s.patch->radius, c = s.potential.scalar_param();
  const ImmersionPatch planar2 = circle_patch(R);
  const ImmersionPatch planar3 = tilted_circle_patch(R, Eigen::Vector3d::UnitZ());
  const PotentialField f2 = PotentialField::radial_quadratic(2, c);
  double worst_gap = 0.0;
  for (const Eigen::VectorXd& u : planar2.sample_points) {
    const double r2 = evolution_residual_hypersurface(planar2, f2, u, 1e-6).residual;
    const double r3 = evolution_residual_highercodim(planar3, s.potential, u, 1e-6).residual;
    worst_gap = std::max(worst_gap, std::abs(r2 - r3));
  }
  ok &= expect(worst_gap <= 1e-6,
               "planar embedding matches the hypersurface residual: gap " + num(worst_gap));
  return ok;
}

// 8. Pinched start under c = (1, 1.5): |A|^2 stays below the 0.5 threshold
// for five units of time, and the threshold itself is reproduced to 1e-12.
bool c08() {
  const Scenario s = load("c08_pinch_horizon.json");
  const FlowTrace tr = run_scenario(s);
  bool ok = expect(tr.status == FlowStatus::ReachedHorizon &&
                       std::abs(tr.final_time - 5.0) <= 1e-9,
                   "flow runs to t = 5 without failure");
  double worst = 0.0;
  for (const MonitorRecord& r : tr.records) worst = std::max(worst, r.max_a2);
  ok &= expect(worst < 0.5 * (1.0 + 1e-2),
               "max |A|^2 over the run " + num(worst) + " stays under 0.505");
  const ThresholdResult th = admissible_threshold(0.0, 1.5, 1.0, Variant::Hypersurface);
  ok &= expect(th.exists && std::abs(th.c_star - 0.5) <= 1e-12,
               "admissible threshold " + num(th.c_star) + " equals 0.5 to 1e-12");
  return ok;
}

// 9. Sweep over the initial radius at c = 1 splits extinction from horizon
// exactly at the unit circle, bracketed by one grid step.
bool c09() {
  const Scenario s = load("c09_sweep_boundary.json");
  const auto rows =
      cmd_sweep(s, "curve.radius", {0.8, 0.9, 0.95, 1.05, 1.15, 1.3}, fresh_out("c09"));
  bool ok = expect(rows.size() == 6, "six sweep rows");
  bool below = true, above = true;
  for (const SweepRow& r : rows) {
    if (r.value < 1.0) below = below && r.outcome == "extinction";
    if (r.value > 1.0) above = above && r.outcome == "reached_horizon";
  }
  ok &= expect(below, "every radius below 1 collapses");
  ok &= expect(above, "every radius above 1 survives to the horizon");
  ok &= expect(rows[2].outcome == "extinction" && rows[3].outcome == "reached_horizon",
               "boundary bracketed by the grid pair (0.95, 1.05)");
  return ok;
}

// 10. Convex ellipse under c = (1, 1.5) keeps a nonnegative discrete
// curvature up to t = 2.
bool c10() {
  const Scenario s = load("c10_convex_ellipse.json");
  const FlowTrace tr = run_scenario(s);
  bool ok = expect(tr.status == FlowStatus::ReachedHorizon, "flow reaches t = 2");
  double min_kappa = std::numeric_limits<double>::infinity();
  for (const MonitorRecord& r : tr.records) min_kappa = std::min(min_kappa, r.min_kappa);
  ok &= expect(min_kappa >= -1e-8,
               "min discrete curvature " + num(min_kappa) + " never below -1e-8");
  return ok;
}

// 11. Expanding sphere matches the exact exponential floor to 1e-9 while the
// looser product-form floor fails, and the report records both margins.
bool c11() {
  const Scenario s = load("c11_sphere_growth.json");
  const RadialSpec r = *s.radial;
  const RadialTrajectory tr = radial_flow(r.n, s.potential, r.r0, r.t_end, r.samples);
  const double m = s.potential.scalar_param();
  const double c0 = 2.0 * m * (0.5 * r.r0 * r.r0) - r.n;
  double worst = 0.0;
  for (const auto& [t, sv] : tr.half_norm2_series())
    worst = std::max(worst, std::abs(sv / expansion_floor_ode(r.n, c0, m, t) - 1.0));
  bool ok = expect(worst <= 1e-9,
                   "s(t) matches (n + C0 e^{2mt})/(2m): worst rel dev " + num(worst));

  const fs::path out = fresh_out("c11");
  ok &= expect(cmd_radial(s, out) == kExitOk, "radial subcommand exits clean");
  const nlohmann::json rep = nlohmann::json::parse(slurp(out / "report.json"));
  const auto& sb = rep.at("sphere_bound");
  ok &= expect(sb.at("ok") == true && std::abs(sb.at("margin").get<double>()) <= 1e-9,
               "exact floor certified in the report");
  ok &= expect(sb.at("product_bound_holds") == false &&
                   sb.at("margin_product").get<double>() < -1e-3,
               "product-form floor overshoot recorded: margin " +
                   num(sb.at("margin_product").get<double>()));
  return ok;
}

// 12. Concentric circles stay separated with the gap matching
// sqrt(4 - 2t) - sqrt(1 - 2t) to 1e-3 on a shared snapshot grid.
bool c12() {
  const Scenario inner = load("c12_avoidance_inner.json");
  const Scenario outer = load("c12_avoidance_outer.json");
  const FlowTrace ti = run_scenario(inner);
  const FlowTrace to = run_scenario(outer);
  bool ok = expect(ti.status == FlowStatus::ReachedHorizon &&
                       to.status == FlowStatus::ReachedHorizon,
                   "both circles reach t = 0.48");
  const auto series = avoidance_series(ti, to);
  ok &= expect(series.size() == 13, "13 shared snapshot times");
  double worst = 0.0, min_gap = std::numeric_limits<double>::infinity();
  for (const auto& [t, gap] : series) {
    const double closed = std::sqrt(4.0 - 2.0 * t) - std::sqrt(1.0 - 2.0 * t);
    worst = std::max(worst, std::abs(gap - closed));
    min_gap = std::min(min_gap, gap);
  }
  ok &= expect(min_gap > 0.0, "gap strictly positive throughout");
  ok &= expect(worst <= 1e-3, "gap matches the closed form: worst dev " + num(worst));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  int k = 0;
  for (int i = 1; i < argc; ++i)
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) k = std::atoi(argv[++i]);
  bool (*criteria[])() = {c01, c02, c03, c04, c05, c06, c07, c08, c09, c10, c11, c12};
  if (k < 1 || k > 12) {
    std::fprintf(stderr, "usage: acceptance --criterion <1..12>\n");
    return 2;
  }
  bool ok = false;
  try {
    ok = criteria[k - 1]();
  } catch (const std::exception& e) {
    std::printf("  FAIL unhandled error: %s\n", e.what());
  }
  std::printf("ACCEPTANCE C%02d: %s\n", k, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}
