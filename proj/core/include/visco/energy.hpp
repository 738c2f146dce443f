#pragma once

#include "visco/solver.hpp"

#include <vector>

namespace visco {

/// One audited step: the quadratic and modified energies, the cumulative
/// damping dissipation D_g, kernel dissipation D_mu, source work W_f (all
/// trapezoidal in time), and the energy-identity residual
/// R = [E + D_g + D_mu] - [E(0) + W_f].
struct LedgerRow {
  double t = 0.0;
  double E = 0.0;
  double modE = 0.0;
  double D_g = 0.0;
  double D_mu = 0.0;
  double W_f = 0.0;
  double residual = 0.0;
};

/// E(t) = (||v||_2^2 + ||grad u||_2^2 + ||w||_mu^2) / 2.
double quadratic_energy(const SimState& state);
/// Modified energy: E + ||u||_{p+1}^{p+1} / (p+1).
double modified_energy(const SimState& state, double p);
/// Residual of the energy identity for a populated row.
double identity_residual(const LedgerRow& row, double E0);

/// Accumulates the ledger along a run; push once on the initial state and
/// once after every step. All time integrals are trapezoidal; mu' is
/// analytic for the built-in kernel families.
class LedgerBuilder {
public:
  LedgerBuilder(const ModelSpecs& specs, const StepperConfig& cfg);

  void push(const SimState& state);
  const std::vector<LedgerRow>& rows() const { return rows_; }
  double E0() const { return e0_; }
  double max_abs_residual() const;

  StepCallback callback() {
    return [this](const SimState& s) { push(s); };
  }

private:
  ModelSpecs specs_;
  StepperConfig cfg_;
  std::vector<LedgerRow> rows_;
  double e0_ = 0.0;
  double prev_t_ = 0.0;
  double prev_ig_ = 0.0, prev_imu_ = 0.0, prev_if_ = 0.0;
  bool first_ = true;
};

/// Separable test function phi(x, t) = profile(t) * shape(x) with the
/// regularity of the admissible test class.
struct TestFunction {
  Field shape;
  std::function<double(double)> profile;
  std::function<double(double)> profile_dt;
};

/// Accumulates every term of the variational identity against one test
/// function along a run, including the memory double integral through the
/// history field; residual(t) is the signed sum and decays at the scheme
/// order on smooth runs.
class WeakFormAuditor {
public:
  WeakFormAuditor(TestFunction phi, const ModelSpecs& specs, const StepperConfig& cfg);

  void push(const SimState& state);
  double residual() const;  // at the last pushed time

  StepCallback callback() {
    return [this](const SimState& s) { push(s); };
  }

private:
  struct Instant {
    double ut_phit = 0.0;   // (u_t, phi_t)
    double stiff = 0.0;     // k(0) (grad u, grad phi)
    double memory = 0.0;    // int (grad u(tau - s), grad phi) k'(s) ds
    double damping = 0.0;   // int g(u_t) phi
    double source = 0.0;    // int f(u) phi
  };
  Instant instant(const SimState& state) const;

  TestFunction phi_;
  ModelSpecs specs_;
  StepperConfig cfg_;
  double bdry0_ = 0.0, bdry_t_ = 0.0;
  double acc_ut_phit_ = 0.0, acc_stiff_ = 0.0, acc_memory_ = 0.0;
  double acc_damping_ = 0.0, acc_source_ = 0.0;
  Instant prev_;
  double prev_t_ = 0.0;
  bool first_ = true;
};

/// Certified ceiling (E0 + C0 * horizon) * exp(C * t) from the local
/// Gronwall estimate.
double gronwall_bound(double E0, double C0, double C, double horizon, double t);

/// Constants of the global-existence Gronwall estimate for m >= p,
/// assembled literally from the inequality chain with the damping-absorbing
/// epsilon set to keep the velocity coefficient at a/2. Conservative by
/// construction; every factor is exposed.
struct GlobalBound {
  bool valid = false;   // requires m >= p
  double C_growth = 0.0;
  double C_const = 0.0;
  double eps = 0.0;
  double young_const = 0.0;

  /// log of the ceiling (mod_E0 + C_const * horizon) e^{C_growth t};
  /// computed in log space so huge ceilings stay comparable.
  double log_ceiling(double mod_E0, double horizon, double t) const;
};
GlobalBound assemble_global_bound(const ModelSpecs& specs, double domain_measure);

/// Difference energy of two trajectories at matched times: the quadratic
/// energy evaluated on (u1-u2, v1-v2, w1-w2).
double difference_energy(const SimState& a, const SimState& b);

/// run() + ledger in one call.
struct LedgerRun {
  RunSummary summary;
  std::vector<LedgerRow> rows;
  double max_abs_residual = 0.0;
};
LedgerRun run_with_ledger(SimState& state, const ModelSpecs& specs, const StepperConfig& cfg,
                          double horizon);

}  // namespace visco
