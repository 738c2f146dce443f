#pragma once

#include "visco/scenario.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace visco {

/// key: value lines, emitted in insertion order.
using Summary = std::vector<std::pair<std::string, std::string>>;

std::string format_g17(double v);
void write_summary(const Summary& summary, const std::string& path);
void write_ledger_csv(const std::vector<LedgerRow>& rows, const std::string& path);

/// Full scenario run: ledger CSV plus a summary with the final energies,
/// the maximal identity residual, the blow-up flag, and the local-time
/// certificate (K, T). Exit status 0 on success, 3 on a blow-up signal.
struct ScenarioResult {
  int exit_status = 0;
  RunSummary summary;
  std::vector<LedgerRow> ledger;
  double max_abs_residual = 0.0;
  LocalTimeEstimate local_time;
};
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir,
                            std::uint64_t seed);

/// Continuous-dependence table: base vs perturbed past history (term
/// amplitudes scaled by 1 + delta), difference energy tracked in lockstep.
struct DependenceRow {
  double delta = 0.0;
  double E0_diff = 0.0;
  double sup_E_diff = 0.0;
  double ratio = 0.0;  // sup_t E_diff / E_diff(0); 0 when delta = 0
};
struct DependenceResult {
  std::vector<DependenceRow> rows;
  bool ratios_stable = false;  // last four ratios within a factor 2
  double ratio_spread = 0.0;
};
DependenceResult dependence_experiment(const ScenarioConfig& cfg, const std::string& out_dir);

/// Global-vs-blow-up sweep over (shape, m, p, amplitude) cells. Cells run
/// independently on a worker pool and merge by cell index, so serial and
/// parallel sweeps emit identical tables.
struct SweepCell {
  std::string shape;
  double m = 0.0, p = 0.0, amplitude = 0.0;
  bool assumption_ok = false;
  std::string classification;  // bounded | blow-up-indicator
  double max_mod_energy = 0.0;
  double end_t = 0.0;
  double log_ceiling = 0.0;  // valid for m >= p cells
  bool below_ceiling = false;
};
struct SweepResult {
  std::vector<SweepCell> cells;
  bool all_dominated_bounded = false;   // every m >= p cell bounded
  bool dissipative_bounded = false;     // every dissipative-shape cell bounded
  bool any_blowup_indicator = false;
};
SweepResult sweep_experiment(const ScenarioConfig& cfg, const std::string& out_dir,
                             int n_threads = 0);

/// Joint (dt, ds) refinement study: identity residual, weak-form residual,
/// and the transport-vs-direct-convolution discrepancy per level, with
/// fitted log2 slopes. Values at the round-off floor are flagged instead of
/// fitted.
struct ConvergenceRow {
  double dt = 0.0;
  double max_identity_residual = 0.0;
  double max_weak_residual = 0.0;
  double oracle_discrepancy = 0.0;
};
struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double order_identity = 0.0;
  double order_weak = 0.0;
  double order_oracle = 0.0;
  // Columns whose values never leave round-off are flagged instead of
  // fitted (a conservative linear run keeps the identity exactly).
  bool floor_identity = false;
  bool floor_weak = false;
  bool floor_oracle = false;
  bool monotone_decay = true;
};
ConvergenceResult convergence_study(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace visco
