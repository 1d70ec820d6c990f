#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcflow/scenario.hpp"

using namespace mcflow;

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < csv.size()) {
    const size_t next = csv.find(',', pos);
    const std::string token =
        csv.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ScenarioError("--values: cannot parse \"" + token + "\" as a number");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for curve flow driven by curvature and an "
               "ambient potential"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, values_csv, axis;
  auto* simulate = app.add_subcommand(
      "simulate", "Integrate the flow; writes trace.csv, snapshots/, report.json");
  auto* verify = app.add_subcommand(
      "verify-identities",
      "Residuals of the geometric identities on the scenario patch");
  auto* check = app.add_subcommand(
      "check", "Evaluate the pinching hypotheses on the initial curve");
  auto* sweep = app.add_subcommand(
      "sweep", "Run the scenario once per value of a swept parameter");
  auto* radial =
      app.add_subcommand("radial", "Closed-form round-sphere reduction");
  for (CLI::App* sub : {simulate, verify, check, sweep, radial}) {
    sub->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    sub->add_option("--out", out_dir,
                    "Output directory (default: scenario output, else out/<name>)");
  }
  sweep->add_option("--axis", axis, "Dotted key path of the swept field, e.g. curve.radius")
      ->required();
  sweep->add_option("--values", values_csv, "Comma-separated parameter values")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario s = parse_scenario(scenario_path);
    const std::filesystem::path out =
        !out_dir.empty() ? std::filesystem::path(out_dir)
        : s.output       ? std::filesystem::path(*s.output)
                         : std::filesystem::path("out") / s.name;
    if (simulate->parsed()) {
      const RunReport rep = cmd_simulate(s, out);
      std::printf("%s: %s at t=%.6g (exit %d)\n", s.name.c_str(),
                  rep.outcome.c_str(), rep.terminal_time, rep.exit_code);
      return rep.exit_code;
    }
    if (verify->parsed()) {
      const int code = cmd_verify_identities(s, out);
      std::printf("%s: identity report written (exit %d)\n", s.name.c_str(), code);
      return code;
    }
    if (check->parsed()) {
      const int code = cmd_check(s, out);
      std::printf("%s: hypotheses %s (exit %d)\n", s.name.c_str(),
                  code == kExitOk ? "hold" : "unmet", code);
      return code;
    }
    if (sweep->parsed()) {
      const auto rows = cmd_sweep(s, axis, parse_values(values_csv), out);
      std::printf("%s: swept %zu values of %s (exit %d)\n", s.name.c_str(),
                  rows.size(), axis.c_str(), kExitOk);
      return kExitOk;
    }
    const int code = cmd_radial(s, out);
    std::printf("%s: radial trajectory written (exit %d)\n", s.name.c_str(), code);
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
