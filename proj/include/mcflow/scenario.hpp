#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcflow/flow.hpp"
#include "mcflow/hypothesis.hpp"
#include "mcflow/patch.hpp"

namespace mcflow {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Initial shape block. Which of the numeric fields are meaningful depends on
// `shape`; the parser only accepts the keys that shape defines.
struct CurveSpec {
  std::string shape;  // circle | ellipse | star | tilted_circle | wavy
  int n = 0;
  double radius = 1.0;
  double a = 1.0, b = 1.0;
  double amplitude = 0.0;
  int lobes = 0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

DiscreteCurve build_curve(const CurveSpec& spec);

// Parametrized surface block for the identity checks.
struct PatchSpec {
  std::string surface;  // circle | ellipse | tilted_circle | wavy | sphere |
                        // ellipsoid | plane
  double radius = 1.0;
  double a = 1.0, b = 1.0, c = 1.0;
  double amplitude = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double stencil = 1e-2;
};

ImmersionPatch build_patch(const PatchSpec& spec);

struct ChecksSpec {
  bool convexity = false;
  bool hypothesis = false;
  bool region = false;
  bool sphere_bound = false;
};

struct RadialSpec {
  int n = 1;
  double r0 = 1.0;
  double t_end = 1.0;
  int samples = 201;
};

struct Scenario {
  std::string name;
  PotentialField potential = PotentialField::constant(2);
  std::optional<CurveSpec> curve;
  std::optional<PatchSpec> patch;
  FlowConfig flow;
  std::optional<Box> region;
  ChecksSpec checks;
  std::optional<RadialSpec> radial;
  std::optional<std::string> output;
  std::string text;  // original document, echoed verbatim into reports
};

// Strict parsing: every key at every level must be recognized, referenced
// kinds must exist, and cross-field dimensions must agree.
Scenario parse_scenario(const std::filesystem::path& file);
Scenario parse_scenario_text(const std::string& text, const std::string& context);

struct RunReport {
  std::string scenario_name;
  std::string outcome;
  int exit_code = 0;
  double terminal_time = 0.0;
  double max_max_a2 = 0.0;
  double min_kappa = 0.0;  // NaN for space curves
  double min_pinch_margin = 0.0;
  long steps = 0;
  int remesh_count = 0;
  std::map<std::string, bool> check_results;  // armed checks only
  bool checks_pass = true;
  std::optional<HypothesisReport> hypothesis;
};

// Exit codes shared by every subcommand: 0 clean finish with all armed
// checks passing, 2 an armed check or hypothesis failed, 3 blow-up,
// 4 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnmet = 2;
inline constexpr int kExitBlowUp = 3;
inline constexpr int kExitNumerical = 4;

// Runs the flow and writes trace.csv, snapshots/NNNN.csv and report.json
// under out_dir. Returns the report that was serialized.
RunReport cmd_simulate(const Scenario& s, const std::filesystem::path& out_dir);

// Two-resolution identity residuals on the scenario patch; writes
// identity_report.json. Returns the exit code.
int cmd_verify_identities(const Scenario& s, const std::filesystem::path& out_dir);

// Evaluates the pinching hypotheses on the initial curve without running the
// flow; writes report.json. Returns the exit code.
int cmd_check(const Scenario& s, const std::filesystem::path& out_dir);

struct SweepRow {
  double value = 0.0;
  std::string outcome;
  double terminal_time = 0.0;
  double max_max_a2 = 0.0;
};

// One in-memory simulate per value with `axis` (a dotted key path into the
// scenario document, e.g. "curve.radius") set to that value. Rows come back
// sorted by value; failed runs keep their row with the failure named in the
// outcome column. Writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const Scenario& tmpl, const std::string& axis,
                                std::vector<double> values,
                                const std::filesystem::path& out_dir);

// Closed-form round-sphere reduction; writes trace.csv (t,R) and report.json.
int cmd_radial(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace mcflow
