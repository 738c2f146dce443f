#pragma once

#include "visco/history.hpp"
#include "visco/model.hpp"
#include "visco/spectral.hpp"

#include <functional>
#include <optional>

namespace visco {

/// How the source enters the step.
struct SourceMode {
  enum class Kind { Off, Full, TruncatedK, CutoffN };
  Kind kind = Kind::Full;
  double K = 0.0;  // TruncatedK
  double n = 0.0;  // CutoffN

  static SourceMode off() { return {Kind::Off, 0.0, 0.0}; }
  static SourceMode full() { return {Kind::Full, 0.0, 0.0}; }
  static SourceMode truncated(double K) { return {Kind::TruncatedK, K, 0.0}; }
  static SourceMode cutoff(double n) { return {Kind::CutoffN, 0.0, n}; }
};

struct StepperConfig {
  double dt = 1e-2;
  SourceMode source = SourceMode::full();
  bool damping_enabled = true;   // diagnostic toggle for conservation checks
  double damping_tol = 1e-14;    // resolvent residual target (scaled by 1+|r|)
  int damping_max_iter = 200;
  double blowup_threshold = 1e12;  // on the modified energy
};

/// Phase-space state (u, v, w) plus the stored-u ring that backs the exact
/// near-window history reconstruction.
struct SimState {
  double t = 0.0;
  long step = 0;
  Field u;
  Field v;
  std::optional<HistoryField> w;
  URing ring;

  double h_norm_sq() const;  // ||grad u||^2 + ||v||^2 + ||w||_mu^2
};

/// Pointwise resolvent of the damping: the unique v with v + lam g(v) = r,
/// solved by safeguarded Newton with bisection fallback on [min(0,r),
/// max(0,r)]. An exhausted iteration budget faults with the residual; it
/// cannot happen for monotone g and is treated as a bug trap.
double resolvent_damping(double r, double lam, const DampingSpec& damping, double tol = 1e-14,
                         int max_iter = 200);

enum class StepStatus { Ok, BlowUp };

struct StepOutcome {
  StepStatus status = StepStatus::Ok;
  double t = 0.0;
  double modified_energy = 0.0;  // carried by the blow-up signal
};

/// State at t = 0 from the past history; the ring is preloaded with u(0).
SimState make_initial_state(const PastHistory& past, const ModelSpecs& specs,
                            const StepperConfig& cfg);

/// One IMEX-midpoint step of the coupled system: the damping is applied
/// implicitly through the pointwise resolvent in two half-steps around a
/// midpoint solve of the linear wave + memory part (diagonal per mode), the
/// source is explicit at the midpoint-extrapolated argument, and the
/// history advances by the exact characteristic shift. Nonfinite values or
/// a modified energy above the threshold raise the structured blow-up
/// signal instead of crashing.
StepOutcome step(SimState& state, const StepperConfig& cfg, const ModelSpecs& specs);

struct RunSummary {
  StepStatus status = StepStatus::Ok;
  double final_t = 0.0;
  long steps = 0;
  double blowup_t = 0.0;
  double blowup_mod_energy = 0.0;
};

using StepCallback = std::function<void(const SimState&)>;

/// Steps until the horizon or a blow-up signal; the callback fires on the
/// initial state and after every accepted step.
RunSummary run(SimState& state, const ModelSpecs& specs, const StepperConfig& cfg,
               double horizon, const StepCallback& per_step = {});

/// Sampled Lipschitz constant of the truncated source f_K over random pairs
/// with ||grad u||_2 <= K, measured as ||f_K(u)-f_K(uhat)||_{L^q} /
/// ||grad(u - uhat)||_2.
double sample_lipschitz_fK(const SourceSpec& source, const BasisPtr& basis, double K, double q,
                           int n_pairs, std::uint64_t seed);

/// Local-existence-time certificate: K = 2 sqrt(E0+1) (the smallest
/// admissible), L_K sampled, and T = min(1/C0, log 2 / C(L_K)) with the
/// constants assembled from the energy inequality chain at eps = a.
/// Conservative by construction; every factor is reported.
struct LocalTimeEstimate {
  double K = 0.0;
  double T = 0.0;
  double L_K = 0.0;
  double C0 = 0.0;
  double C_LK = 0.0;
  double eps = 0.0;  // the Young-inequality epsilon used (= a)
  double young_const = 0.0;
};
LocalTimeEstimate estimate_local_time(double E0, const ModelSpecs& specs, const BasisPtr& basis,
                                      int sampling_budget = 10000, std::uint64_t seed = 1);

/// Phase-space triple for the accretivity experiment.
struct PhaseTriple {
  Field u;
  Field v;
  HistoryField w;
};

/// Discrete pairing ((A + alpha I)U - (A + alpha I)Uhat, U - Uhat)_H with
/// every term evaluated independently: the memory-duality terms cancel to
/// round-off, the damping and transport terms are nonnegative, and for
/// alpha >= L/2 (L the sampled Lipschitz constant of the active source) the
/// total is nonnegative up to round-off.
double accretivity_pairing(const PhaseTriple& U, const PhaseTriple& Uhat, double alpha,
                           const ModelSpecs& specs, const SourceMode& source_mode);

/// Source term on the coefficient level under the given mode.
Eigen::VectorXd apply_source(const SourceSpec& source, const SourceMode& mode, const Field& u);

}  // namespace visco
