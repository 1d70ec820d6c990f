#include "mcflow/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mcflow/monitors.hpp"

namespace mcflow {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
  throw ScenarioError(ctx + ": " + msg);
}

// Wraps one JSON object; every key must be consumed before done(), so any
// key the schema does not define is reported back to the author.
class StrictObject {
 public:
  StrictObject(const json& j, std::string ctx) : ctx_(std::move(ctx)) {
    if (!j.is_object()) fail(ctx_, "expected an object");
    obj_ = j;
  }
  json require(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(ctx_, std::string("missing key \"") + key + "\"");
    json v = *it;
    obj_.erase(it);
    return v;
  }
  std::optional<json> take(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return std::nullopt;
    json v = *it;
    obj_.erase(it);
    return v;
  }
  void done() const {
    if (!obj_.empty()) fail(ctx_, "unknown key \"" + obj_.begin().key() + "\"");
  }

 private:
  json obj_;
  std::string ctx_;
};

double as_double(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(ctx, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& ctx) {
  if (!j.is_boolean()) fail(ctx, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) fail(ctx, "expected a non-empty number array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = as_double(j[i], ctx);
  return v;
}

Eigen::Vector3d as_vec3(const json& j, const std::string& ctx) {
  const Eigen::VectorXd v = as_vector(j, ctx);
  if (v.size() != 3) fail(ctx, "expected exactly 3 components");
  return v.head<3>();
}

PotentialField parse_potential(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  const std::string kind = as_string(o.require("kind"), ctx + ".kind");
  if (kind == "constant") {
    const int dim = as_int(o.require("dimension"), ctx + ".dimension");
    double value = 0.0;
    if (auto v = o.take("value")) value = as_double(*v, ctx + ".value");
    o.done();
    return PotentialField::constant(dim, value);
  }
  if (kind == "quadratic_diagonal") {
    const Eigen::VectorXd c = as_vector(o.require("coefficients"), ctx + ".coefficients");
    o.done();
    return PotentialField::quadratic_diagonal(c);
  }
  if (kind == "radial_quadratic") {
    const int dim = as_int(o.require("dimension"), ctx + ".dimension");
    const double c = as_double(o.require("coefficient"), ctx + ".coefficient");
    o.done();
    return PotentialField::radial_quadratic(dim, c);
  }
  if (kind == "gaussian_bump") {
    const Eigen::VectorXd center = as_vector(o.require("center"), ctx + ".center");
    const double amp = as_double(o.require("amplitude"), ctx + ".amplitude");
    const double width = as_double(o.require("width"), ctx + ".width");
    o.done();
    return PotentialField::gaussian_bump(center, amp, width);
  }
  fail(ctx, "unknown potential kind \"" + kind + "\"");
}

int curve_dim(const std::string& shape) {
  return (shape == "tilted_circle" || shape == "wavy") ? 3 : 2;
}

CurveSpec parse_curve(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  CurveSpec s;
  s.shape = as_string(o.require("shape"), ctx + ".shape");
  s.n = as_int(o.require("n"), ctx + ".n");
  if (s.shape == "circle") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
  } else if (s.shape == "ellipse") {
    s.a = as_double(o.require("a"), ctx + ".a");
    s.b = as_double(o.require("b"), ctx + ".b");
  } else if (s.shape == "star") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
    s.amplitude = as_double(o.require("amplitude"), ctx + ".amplitude");
    s.lobes = as_int(o.require("lobes"), ctx + ".lobes");
  } else if (s.shape == "tilted_circle") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
    s.normal = as_vec3(o.require("normal"), ctx + ".normal");
  } else if (s.shape == "wavy") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
    s.amplitude = as_double(o.require("amplitude"), ctx + ".amplitude");
  } else {
    fail(ctx, "unknown curve shape \"" + s.shape + "\"");
  }
  o.done();
  return s;
}

int patch_ambient(const std::string& surface) {
  return (surface == "circle" || surface == "ellipse") ? 2 : 3;
}

PatchSpec parse_patch(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  PatchSpec s;
  s.surface = as_string(o.require("surface"), ctx + ".surface");
  if (s.surface == "circle" || s.surface == "sphere") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
  } else if (s.surface == "ellipse") {
    s.a = as_double(o.require("a"), ctx + ".a");
    s.b = as_double(o.require("b"), ctx + ".b");
  } else if (s.surface == "ellipsoid") {
    s.a = as_double(o.require("a"), ctx + ".a");
    s.b = as_double(o.require("b"), ctx + ".b");
    s.c = as_double(o.require("c"), ctx + ".c");
  } else if (s.surface == "tilted_circle") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
    s.normal = as_vec3(o.require("normal"), ctx + ".normal");
  } else if (s.surface == "wavy") {
    s.radius = as_double(o.require("radius"), ctx + ".radius");
    s.amplitude = as_double(o.require("amplitude"), ctx + ".amplitude");
  } else if (s.surface != "plane") {
    fail(ctx, "unknown patch surface \"" + s.surface + "\"");
  }
  if (auto h = o.take("stencil")) {
    s.stencil = as_double(*h, ctx + ".stencil");
    if (!(s.stencil > 0)) fail(ctx, "stencil must be positive");
  }
  o.done();
  return s;
}

FlowConfig parse_flow(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  FlowConfig cfg;
  if (auto v = o.take("t_end")) cfg.t_end = as_double(*v, ctx + ".t_end");
  if (auto v = o.take("dt_max")) cfg.dt_max = as_double(*v, ctx + ".dt_max");
  if (auto v = o.take("cfl")) cfg.cfl = as_double(*v, ctx + ".cfl");
  if (auto v = o.take("snapshot_every"))
    cfg.snapshot_every = as_double(*v, ctx + ".snapshot_every");
  if (auto v = o.take("remesh_ratio"))
    cfg.remesh_ratio = as_double(*v, ctx + ".remesh_ratio");
  if (auto v = o.take("blowup_a2")) cfg.blowup_a2 = as_double(*v, ctx + ".blowup_a2");
  if (auto v = o.take("extinction_fraction"))
    cfg.extinction_fraction = as_double(*v, ctx + ".extinction_fraction");
  if (auto v = o.take("dt_floor")) cfg.dt_floor = as_double(*v, ctx + ".dt_floor");
  if (auto v = o.take("max_steps")) cfg.max_steps = as_int(*v, ctx + ".max_steps");
  o.done();
  return cfg;
}

Box parse_region(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  Box box;
  box.lo = as_vector(o.require("lo"), ctx + ".lo");
  box.hi = as_vector(o.require("hi"), ctx + ".hi");
  o.done();
  if (box.lo.size() != box.hi.size()) fail(ctx, "lo and hi sizes differ");
  for (int i = 0; i < box.lo.size(); ++i)
    if (!(box.lo[i] < box.hi[i])) fail(ctx, "lo must be strictly below hi");
  return box;
}

ChecksSpec parse_checks(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  ChecksSpec s;
  if (auto v = o.take("convexity")) s.convexity = as_bool(*v, ctx + ".convexity");
  if (auto v = o.take("hypothesis")) s.hypothesis = as_bool(*v, ctx + ".hypothesis");
  if (auto v = o.take("region")) s.region = as_bool(*v, ctx + ".region");
  if (auto v = o.take("sphere_bound"))
    s.sphere_bound = as_bool(*v, ctx + ".sphere_bound");
  o.done();
  return s;
}

RadialSpec parse_radial(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  RadialSpec s;
  s.n = as_int(o.require("n"), ctx + ".n");
  s.r0 = as_double(o.require("r0"), ctx + ".r0");
  s.t_end = as_double(o.require("t_end"), ctx + ".t_end");
  if (auto v = o.take("samples")) s.samples = as_int(*v, ctx + ".samples");
  o.done();
  return s;
}

void check_name(const std::string& name, const std::string& ctx) {
  if (name.empty()) fail(ctx, "name must not be empty");
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' &&
        c != '.')
      fail(ctx, "name may only contain letters, digits, '-', '_' and '.'");
  if (name.front() == '.') fail(ctx, "name must not start with '.'");
}

void cross_validate(const Scenario& s, const std::string& ctx) {
  const int dim = s.potential.dimension();
  if (s.curve && curve_dim(s.curve->shape) != dim)
    fail(ctx, "curve lives in dimension " + std::to_string(curve_dim(s.curve->shape)) +
                  " but the potential has dimension " + std::to_string(dim));
  if (s.patch && patch_ambient(s.patch->surface) != dim)
    fail(ctx, "patch ambient dimension does not match the potential");
  if (s.region && s.region->dimension() != dim)
    fail(ctx, "region dimension does not match the potential");
  if (s.radial) {
    if (s.radial->n < 1) fail(ctx, "radial.n must be at least 1");
    if (s.radial->n + 1 != dim)
      fail(ctx, "radial sphere dimension requires a potential in dimension " +
                    std::to_string(s.radial->n + 1));
    const auto kind = s.potential.kind();
    if (kind != PotentialField::Kind::Constant &&
        kind != PotentialField::Kind::RadialQuadratic)
      fail(ctx, "the radial reducer needs a constant or radial_quadratic potential");
  }
  if (s.checks.convexity) {
    if (!s.curve || curve_dim(s.curve->shape) != 2)
      fail(ctx, "convexity check needs a planar curve");
    if (s.potential.kind() == PotentialField::Kind::GaussianBump)
      fail(ctx, "convexity check needs a polynomial potential");
  }
  if ((s.checks.hypothesis || s.checks.region) && !s.region)
    fail(ctx, "hypothesis and region checks need a region block");
  if (s.checks.sphere_bound && !s.radial)
    fail(ctx, "sphere_bound check needs a radial block");
}

// ---------------------------------------------------------------------------
// artifact writers

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ScenarioError("cannot write " + p.string());
  out << body;
}

std::string trace_csv(const FlowTrace& trace) {
  std::string s = "t,max_a2,min_kappa,s_min,length,min_edge,dt\n";
  for (const MonitorRecord& r : trace.records) {
    s += fmt17(r.t) + ',' + fmt17(r.max_a2) + ',' + fmt17(r.min_kappa) + ',' +
         fmt17(r.s_min) + ',' + fmt17(r.length) + ',' + fmt17(r.min_edge) + ',' +
         fmt17(r.dt) + '\n';
  }
  return s;
}

std::string points_csv(const Eigen::MatrixXd& pts) {
  std::string s;
  for (int i = 0; i < pts.rows(); ++i) {
    for (int j = 0; j < pts.cols(); ++j) {
      if (j) s += ',';
      s += fmt17(pts(i, j));
    }
    s += '\n';
  }
  return s;
}

json scenario_echo(const Scenario& s) {
  return s.text.empty() ? json::object() : json::parse(s.text);
}

json hypothesis_json(const HypothesisReport& h) {
  json j;
  j["variant"] = h.variant == Variant::Hypersurface ? "hypersurface" : "higher_codim";
  j["lambda_lo"] = h.bounds.lambda_lo;
  j["lambda_hi"] = h.bounds.lambda_hi;
  j["c3"] = h.bounds.c3;
  j["certified"] = h.bounds.certified;
  j["a2_initial"] = h.a2_initial;
  j["admissible_C"] = h.admissible_C;
  j["threshold_exists"] = h.threshold_exists;
  j["reference_C"] = h.reference_C;
  j["conditions"] = {{"cond1_hessian_pinch", h.cond1_hessian_pinch},
                     {"cond2_initial_a2", h.cond2_initial_a2},
                     {"cond3_polynomial", h.cond3_polynomial.ok},
                     {"cond4_derivative_bounds", h.cond4_derivative_bounds}};
  j["cond3_delta"] = h.cond3_polynomial.delta;
  j["region_contains_initial"] = h.region_contains_initial;
  j["all_hold"] = h.all_hold();
  return j;
}

double max_a2_over(const FlowTrace& trace) {
  double m = 0.0;
  for (const MonitorRecord& r : trace.records) m = std::max(m, r.max_a2);
  return m;
}

Variant variant_of(const DiscreteCurve& c) {
  return c.dim() == 2 ? Variant::Hypersurface : Variant::HigherCodim;
}

HessianBounds region_bounds(const Scenario& s) {
  HessianBounds bounds;
  if (s.region) {
    bounds = s.potential.hessian_eigen_bounds(*s.region);
    bounds.c3 = s.potential.third_derivative_bound(*s.region);
  }
  return bounds;
}

RunReport summarize(const Scenario& s, const DiscreteCurve& start,
                    const FlowTrace& trace) {
  RunReport rep;
  rep.scenario_name = s.name;
  rep.outcome = to_string(trace.status);
  rep.terminal_time = classify(trace, s.flow.blowup_a2).time;
  rep.steps = trace.steps;
  rep.remesh_count = trace.remesh_count;
  rep.max_max_a2 = max_a2_over(trace);
  double min_kappa = std::numeric_limits<double>::quiet_NaN();
  if (start.dim() == 2) {
    min_kappa = std::numeric_limits<double>::infinity();
    for (const MonitorRecord& r : trace.records)
      min_kappa = std::min(min_kappa, r.min_kappa);
  }
  rep.min_kappa = min_kappa;
  rep.min_pinch_margin = std::numeric_limits<double>::infinity();
  for (const MonitorRecord& r : trace.records)
    rep.min_pinch_margin = std::min(rep.min_pinch_margin, r.pinch_margin);

  if (s.checks.convexity) rep.check_results["convexity"] = rep.min_kappa >= -1e-8;
  if (s.checks.region) {
    bool ok = true;
    for (const MonitorRecord& r : trace.records) ok = ok && r.region_ok;
    rep.check_results["region"] = ok;
  }
  if (s.checks.hypothesis) {
    rep.hypothesis = check_hypotheses(s.potential, start, variant_of(start), *s.region);
    rep.check_results["hypothesis"] = rep.hypothesis->all_hold();
  }
  rep.checks_pass = true;
  for (const auto& [name, ok] : rep.check_results) rep.checks_pass = rep.checks_pass && ok;

  switch (trace.status) {
    case FlowStatus::BlowUp: rep.exit_code = kExitBlowUp; break;
    case FlowStatus::NumericalFailure: rep.exit_code = kExitNumerical; break;
    default: rep.exit_code = rep.checks_pass ? kExitOk : kExitUnmet; break;
  }
  return rep;
}

json report_json(const Scenario& s, const RunReport& rep) {
  json j;
  j["scenario"] = scenario_echo(s);
  j["outcome"] = rep.outcome;
  j["exit_code"] = rep.exit_code;
  j["terminal_time"] = rep.terminal_time;
  j["steps"] = rep.steps;
  j["remesh_count"] = rep.remesh_count;
  j["max_max_a2"] = rep.max_max_a2;
  j["min_kappa"] = rep.min_kappa;
  j["min_pinch_margin"] = rep.min_pinch_margin;
  j["checks_pass"] = rep.checks_pass;
  if (!rep.check_results.empty()) j["checks"] = rep.check_results;
  if (rep.hypothesis) j["hypothesis"] = hypothesis_json(*rep.hypothesis);
  return j;
}

}  // namespace

DiscreteCurve build_curve(const CurveSpec& c) {
  if (c.shape == "circle") return make_circle(c.n, c.radius);
  if (c.shape == "ellipse") return make_ellipse(c.n, c.a, c.b);
  if (c.shape == "star") return make_star(c.n, c.radius, c.amplitude, c.lobes);
  if (c.shape == "tilted_circle") return make_tilted_circle(c.n, c.radius, c.normal);
  if (c.shape == "wavy") return make_wavy_space_curve(c.n, c.radius, c.amplitude);
  throw ScenarioError("unknown curve shape \"" + c.shape + "\"");
}

ImmersionPatch build_patch(const PatchSpec& p) {
  ImmersionPatch out = [&] {
    if (p.surface == "circle") return circle_patch(p.radius);
    if (p.surface == "ellipse") return ellipse_patch(p.a, p.b);
    if (p.surface == "tilted_circle") return tilted_circle_patch(p.radius, p.normal);
    if (p.surface == "wavy") return wavy_curve_patch(p.radius, p.amplitude);
    if (p.surface == "sphere") return sphere_patch(p.radius);
    if (p.surface == "ellipsoid") return ellipsoid_patch(p.a, p.b, p.c);
    if (p.surface == "plane") return plane_patch();
    throw ScenarioError("unknown patch surface \"" + p.surface + "\"");
  }();
  out.stencil = p.stencil;
  return out;
}

Scenario parse_scenario_text(const std::string& text, const std::string& context) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(context + ": " + e.what());
  }
  try {
    StrictObject o(doc, context);
    Scenario s;
    s.text = text;
    s.name = as_string(o.require("name"), context + ".name");
    check_name(s.name, context + ".name");
    s.potential = parse_potential(o.require("potential"), context + ".potential");
    if (auto c = o.take("curve")) s.curve = parse_curve(*c, context + ".curve");
    if (auto p = o.take("patch")) s.patch = parse_patch(*p, context + ".patch");
    if (auto f = o.take("flow")) s.flow = parse_flow(*f, context + ".flow");
    validate(s.flow);
    if (auto r = o.take("region")) s.region = parse_region(*r, context + ".region");
    if (auto c = o.take("checks")) s.checks = parse_checks(*c, context + ".checks");
    if (auto r = o.take("radial")) s.radial = parse_radial(*r, context + ".radial");
    if (auto out = o.take("output")) s.output = as_string(*out, context + ".output");
    o.done();
    cross_validate(s, context);
    return s;
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(context + ": " + e.what());
  }
}

Scenario parse_scenario(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ScenarioError(file.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), file.string());
}

RunReport cmd_simulate(const Scenario& s, const std::filesystem::path& out_dir) {
  if (!s.curve) throw ScenarioError(s.name + ": simulate needs a curve block");
  const DiscreteCurve start = build_curve(*s.curve);
  const FlowTrace trace = run_flow(start, s.potential, region_bounds(s), s.flow);
  const RunReport rep = summarize(s, start, trace);

  std::filesystem::create_directories(out_dir / "snapshots");
  write_text(out_dir / "trace.csv", trace_csv(trace));
  for (size_t i = 0; i < trace.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.csv", i);
    write_text(out_dir / "snapshots" / name, points_csv(trace.snapshots[i].pts));
  }
  write_text(out_dir / "report.json", report_json(s, rep).dump(2) + "\n");
  return rep;
}

int cmd_verify_identities(const Scenario& s, const std::filesystem::path& out_dir) {
  if (!s.patch) throw ScenarioError(s.name + ": verify-identities needs a patch block");
  const ImmersionPatch p = build_patch(*s.patch);
  json j;
  j["scenario"] = scenario_echo(s);
  j["surface"] = s.patch->surface;
  int code = kExitOk;
  try {
    const IdentityResidualReport rep = verify_patch(p, &s.potential, s.patch->stencil);
    json entries = json::array();
    for (const IdentityEntry& e : rep.entries)
      entries.push_back({{"name", e.name},
                         {"residual", e.residual},
                         {"stencil", e.stencil},
                         {"order", e.order},
                         {"exact", e.exact}});
    j["entries"] = entries;
  } catch (const ImmersionError& e) {
    j["error"] = e.what();
    code = kExitNumerical;
  }
  j["exit_code"] = code;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "identity_report.json", j.dump(2) + "\n");
  return code;
}

int cmd_check(const Scenario& s, const std::filesystem::path& out_dir) {
  if (!s.curve) throw ScenarioError(s.name + ": check needs a curve block");
  if (!s.region) throw ScenarioError(s.name + ": check needs a region block");
  const DiscreteCurve start = build_curve(*s.curve);
  const HypothesisReport h =
      check_hypotheses(s.potential, start, variant_of(start), *s.region);
  json j;
  j["scenario"] = scenario_echo(s);
  j["hypothesis"] = hypothesis_json(h);
  if (s.potential.kind() == PotentialField::Kind::QuadraticDiagonal) {
    const DiagonalPinchReport d = check_diagonal_pinch(s.potential.coefficients(), start);
    j["diagonal"] = {{"m", d.m},
                     {"M", d.M},
                     {"M_lt_2m", d.M_lt_2m},
                     {"a2_initial", d.a2_initial},
                     {"a2_lt_threshold", d.a2_lt_threshold}};
  }
  const int code = h.all_hold() ? kExitOk : kExitUnmet;
  j["exit_code"] = code;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "report.json", j.dump(2) + "\n");
  return code;
}

std::vector<SweepRow> cmd_sweep(const Scenario& tmpl, const std::string& axis,
                                std::vector<double> values,
                                const std::filesystem::path& out_dir) {
  if (!tmpl.curve) throw ScenarioError(tmpl.name + ": sweep needs a curve block");
  std::string ptr = "/" + axis;
  std::replace(ptr.begin(), ptr.end(), '.', '/');
  json::json_pointer jp;
  try {
    jp = json::json_pointer(ptr);
  } catch (const json::exception& e) {
    throw ScenarioError(tmpl.name + ": bad sweep axis \"" + axis + "\": " + e.what());
  }
  {
    const json doc = json::parse(tmpl.text);
    if (!doc.contains(jp))
      throw ScenarioError(tmpl.name + ": sweep axis \"" + axis +
                          "\" is not a scenario field");
    if (!doc.at(jp).is_number())
      throw ScenarioError(tmpl.name + ": sweep axis \"" + axis + "\" is not numeric");
  }
  std::sort(values.begin(), values.end());

  const std::string text = tmpl.text;
  const std::string name = tmpl.name;
  auto run_one = [text, name, axis, jp](double v) {
    SweepRow row;
    row.value = v;
    row.terminal_time = std::numeric_limits<double>::quiet_NaN();
    row.max_max_a2 = std::numeric_limits<double>::quiet_NaN();
    try {
      json doc = json::parse(text);
      doc[jp] = v;
      const Scenario s =
          parse_scenario_text(doc.dump(), name + "[" + axis + "=" + fmt17(v) + "]");
      const DiscreteCurve start = build_curve(*s.curve);
      const FlowTrace trace = run_flow(start, s.potential, region_bounds(s), s.flow);
      row.outcome = to_string(trace.status);
      row.terminal_time = classify(trace, s.flow.blowup_a2).time;
      row.max_max_a2 = max_a2_over(trace);
    } catch (const std::exception&) {
      row.outcome = "error";
    }
    return row;
  };

  std::vector<std::future<SweepRow>> futures;
  futures.reserve(values.size());
  for (double v : values)
    futures.push_back(std::async(std::launch::async, run_one, v));
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (auto& f : futures) rows.push_back(f.get());

  std::string csv = "parameter,outcome,terminal_time,max_max_a2\n";
  for (const SweepRow& r : rows)
    csv += fmt17(r.value) + ',' + r.outcome + ',' + fmt17(r.terminal_time) + ',' +
           fmt17(r.max_max_a2) + '\n';
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "sweep.csv", csv);
  return rows;
}

int cmd_radial(const Scenario& s, const std::filesystem::path& out_dir) {
  if (!s.radial) throw ScenarioError(s.name + ": radial needs a radial block");
  const RadialSpec& r = *s.radial;
  const RadialTrajectory tr = radial_flow(r.n, s.potential, r.r0, r.t_end, r.samples);

  std::string csv = "t,R\n";
  for (const RadialState& st : tr.states)
    csv += fmt17(st.t) + ',' + fmt17(st.R) + '\n';

  json j;
  j["scenario"] = scenario_echo(s);
  j["extinction_time"] = tr.extinction_time;
  j["equilibrium_radius"] = tr.equilibrium_radius;
  j["samples"] = tr.states.size();
  j["final_radius"] = tr.states.empty() ? 0.0 : tr.states.back().R;
  int code = kExitOk;
  if (s.checks.sphere_bound) {
    const double m = s.potential.kind() == PotentialField::Kind::RadialQuadratic
                         ? s.potential.scalar_param()
                         : 0.0;
    const SphereBoundReport sb = verify_sphere_bound(tr.half_norm2_series(), m, r.n);
    j["sphere_bound"] = {{"c0", sb.c0},
                        {"c0_positive", sb.c0_positive},
                        {"ok", sb.ok},
                        {"margin", sb.margin},
                        {"margin_product", sb.margin_product},
                        {"product_bound_holds", sb.margin_product >= -1e-9}};
    if (!sb.ok) code = kExitUnmet;
  }
  j["exit_code"] = code;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "trace.csv", csv);
  write_text(out_dir / "report.json", j.dump(2) + "\n");
  return code;
}

}  // namespace mcflow
