#pragma once

#include "visco/energy.hpp"
#include "visco/history.hpp"
#include "visco/model.hpp"
#include "visco/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace visco {

/// Structured configuration/parse diagnostic; carries the offending key and
/// line when known.
class ScenarioError : public std::runtime_error {
public:
  ScenarioError(std::string message, std::string key = {}, int line = 0);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

private:
  std::string key_;
  int line_;
};

/// Parsed scenario: domain, basis size, model specs, past history, stepper
/// settings, and per-experiment parameters. Built from flat key-value text
/// with dotted section keys; the exact key list is documented in the README.
struct ScenarioConfig {
  // domain / basis
  bool rectangle = false;
  double length = 1.0, lx = 1.0, ly = 1.0;
  int modes = 16;

  ModelSpecs specs;
  bool damping_enabled = true;
  SourceMode source_mode = SourceMode::full();

  std::vector<PastHistory::Term> past_terms;

  double dt = 1e-2;
  double horizon = 1.0;
  std::string experiment;    // optional; informational
  bool allow_invalid = false;  // set by the parse entry points

  // dependence experiment
  std::vector<double> depend_deltas;

  // sweep experiment
  std::vector<double> sweep_m, sweep_p, sweep_amplitudes;
  std::vector<std::string> sweep_shapes;  // power / dissipative
  double sweep_horizon = 10.0;

  // convergence study
  int converge_levels = 5;

  AssumptionReport assumption_report;

  /// Dealiased basis: quadrature factor ceil((max(p, m) + 1) / 2), at
  /// least 2.
  BasisPtr make_basis() const;
  PastHistory make_past(const BasisPtr& basis) const;
  StepperConfig make_stepper() const;
};

/// Parse + validate. Validation failures name the failing assumption
/// bullet; `allow_invalid` downgrades them (needed for blow-up sweeps).
ScenarioConfig parse_scenario_file(const std::string& path, bool allow_invalid = false);
ScenarioConfig parse_scenario_text(const std::string& text, bool allow_invalid = false,
                                   const std::string& origin = "<inline>");

}  // namespace visco
