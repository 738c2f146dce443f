#pragma once

#include "visco/model.hpp"
#include "visco/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace visco {

/// Closed-form past history u0(x,t) for t <= 0: a sum of terms, each a time
/// profile times one eigenmode. Profiles are polynomial, trigonometric, or
/// exponential in t, so the history is evaluable (with its t-derivative) at
/// any time, and the admissibility bullets hold by construction.
class PastHistory {
public:
  enum class Kind { Poly, Trig, Exp };

  struct Term {
    Kind kind = Kind::Trig;
    int mode = 1;          // 1-based index into the sorted mode list
    double amp = 1.0;
    double omega = 1.0;    // trig: amp * cos(omega t + phase)
    double phase = 0.0;
    double rate = 0.0;     // exp: amp * exp(rate t)
    std::vector<double> poly;  // poly: amp * sum_r poly[r] t^r
  };

  PastHistory(BasisPtr basis, std::vector<Term> terms);

  const BasisPtr& basis() const { return basis_; }
  const std::vector<Term>& terms() const { return terms_; }

  Eigen::VectorXd eval(double t) const;
  Eigen::VectorXd eval_dt(double t) const;

  /// Past scaled by (1 + delta); used by the dependence experiment.
  PastHistory scaled(double delta) const;

private:
  BasisPtr basis_;
  std::vector<Term> terms_;
};

/// Stored solution trajectory on the uniform step grid t_k = k dt, backed by
/// the past history for t <= 0. Query times must align with the grid.
class Trajectory {
public:
  Trajectory(const PastHistory* past, double dt) : past_(past), dt_(dt) {}

  void push(const Eigen::VectorXd& u) { steps_.push_back(u); }
  std::size_t size() const { return steps_.size(); }
  double dt() const { return dt_; }

  /// u at time t; t <= 0 evaluates the past closed form, t > 0 must land on
  /// a stored step (fault otherwise).
  Eigen::VectorXd at_time(double t) const;

private:
  const PastHistory* past_;
  double dt_;
  std::vector<Eigen::VectorXd> steps_;
};

/// Fixed-capacity ring of the most recent u coefficient vectors, one per
/// step; backs the exact near-window reconstruction in the history advance.
class URing {
public:
  URing() = default;
  URing(int n_modes, int capacity);

  void push(const Eigen::VectorXd& u);
  /// Stored value j steps back from the newest (0 = newest).
  Eigen::VectorXd steps_back(int j) const;
  int stored() const { return stored_; }
  int capacity() const { return static_cast<int>(cols_.cols()); }

private:
  Eigen::MatrixXd cols_;
  int head_ = -1;
  int stored_ = 0;
};

/// The Dafermos history variable w(t, s) = u(t) - u(t-s) sampled on the
/// uniform s-grid s_i = i ds, i = 0..M, with trapezoidal mu-weights at the
/// nodes, normalized so the weights reproduce the truncated kernel mass
/// exactly. w(., s_0) = 0 always.
///
/// The advance is the exact characteristic shift: node i inherits node i-1
/// plus the trapezoidal velocity increment, while nodes inside the computed
/// window s_i <= t are rewritten exactly from the stored u ring.
class HistoryField {
public:
  HistoryField(BasisPtr basis, MemoryKernel kernel, double ds);

  int nodes() const { return static_cast<int>(omega_.size()); }  // M + 1
  int grid_intervals() const { return nodes() - 1; }             // M
  double ds() const { return ds_; }
  double s_max() const { return (nodes() - 1) * ds_; }
  const MemoryKernel& kernel() const { return kernel_; }
  const BasisPtr& basis() const { return basis_; }

  const Eigen::VectorXd& weights() const { return omega_; }
  /// Sum of all weights; equals the truncated kernel mass by construction.
  double weight_sum() const { return omega_.sum(); }
  /// Sum over i >= 1 (the shift-fed region).
  double weight_tail_sum() const { return omega_tail_; }

  /// Row i holds the coefficients of w(., s_i).
  const Eigen::MatrixXd& data() const { return w_; }
  Eigen::MatrixXd& data() { return w_; }
  Eigen::VectorXd node_value(int i) const { return w_.row(i).transpose(); }
  void set_node(int i, const Eigen::VectorXd& coeffs);

  /// A_j = sum_i omega_i w_j(s_i).
  Eigen::VectorXd weighted_sum() const;
  /// B_j = sum_{i>=1} omega_i w_j(s_{i-1}); pairs each weight with the value
  /// about to be shifted into its node.
  Eigen::VectorXd shifted_weighted_sum() const;

  /// Memory operator L(w): mode j carries -lambda_j sum_i omega_i w_j(s_i);
  /// satisfies the discrete duality <L(w), phi> = -(w, phi)_mu exactly.
  Field memory_operator() const;

  /// (w, phi)_mu for a single spatial field phi.
  double mu_inner(const Field& phi) const;
  /// (w, what)_mu between two histories on identical grids.
  double mu_inner(const HistoryField& other) const;
  /// (w_s, other)_mu with backward differences in s; nonnegative for
  /// other = this because the weights are nonincreasing and w(0) = 0.
  double transport_pairing(const HistoryField& other) const;

  /// ||w||_mu^2 = sum_i omega_i ||grad w(s_i)||_2^2.
  double mu_h10_sq() const;
  /// sum_i omega'_i ||grad w(s_i)||_2^2 with trapezoidal mu' weights
  /// (analytic mu' for the built-in families); nonpositive.
  double mu_prime_h10_sq() const;

  /// One step of the transport w_t = v - w_s with dt = ds. v_old/v_new are
  /// the velocity endpoints, u_new the displacement at the new time; `ring`
  /// holds u back to step 0 (capacity >= M). step_new is the index of the
  /// new time level, t_new = step_new * dt.
  void advance(const Eigen::VectorXd& v_old, const Eigen::VectorXd& v_new,
               const Eigen::VectorXd& u_new, const URing& ring, long step_new, double dt);

  /// max_i || grad( w(s_i) - (u(t) - u(t - s_i)) ) ||_2 against a stored
  /// trajectory; O(dt^2) for smooth runs, round-off for linear-in-time u.
  double reconstruct_check(const Trajectory& traj, double t) const;

  /// Binary snapshot: header (M, N_total as u64, ds as f64), then the
  /// s-grid, the weights, and the row-major coefficient matrix, all as
  /// little-endian 64-bit floats.
  void save_snapshot(std::ostream& os) const;
  static HistoryField load_snapshot(std::istream& is, BasisPtr basis, MemoryKernel kernel);

private:
  BasisPtr basis_;
  MemoryKernel kernel_;
  double ds_ = 0.0;
  double omega_tail_ = 0.0;
  Eigen::VectorXd omega_;        // normalized trapezoid mu-weights, omega_[0] included
  Eigen::VectorXd omega_prime_;  // trapezoid mu'-weights (unnormalized)
  Eigen::MatrixXd w_;            // (M+1) x n_modes
};

/// Initial phase-space triple produced from the past history.
struct InitialState {
  Field u;
  Field v;
  HistoryField w;
};

/// w(0, s_i) = u0(0) - u0(-s_i), u(0) = u0(0), v(0) = du0/dt(0).
InitialState init_history(const PastHistory& past, const MemoryKernel& kernel, double ds);

/// Brute-force memory integral from the full trajectory:
/// I = int_0^smax mu(s) (u(t) - u(t-s)) ds by the same trapezoidal rule,
/// with u(t-s) read from the trajectory (past closed form for t-s <= 0).
/// Ground truth for the transport scheme and the memory operator.
struct ConvolutionValue {
  Field integral;    // coefficients of the memory integral
  Field l_operator;  // coefficients of L: mode j is -lambda_j integral_j
};
ConvolutionValue direct_convolution_oracle(const Trajectory& traj, const MemoryKernel& kernel,
                                           const BasisPtr& basis, double t, double ds);

/// Recursive convolution for prony kernels: per decay branch,
/// J_k(t + dt) = e^{-theta_k dt} J_k(t) + (exponential trapezoid of u).
/// Tracks the untruncated convolution, so it matches the s-grid value to
/// O(dt^2) plus the tail tolerance. Provided as an oracle and performance
/// comparison, not as the primary state.
class PronyConvolution {
public:
  PronyConvolution(const MemoryKernel& kernel, const BasisPtr& basis, const PastHistory& past,
                   double ds);

  /// Advance from u(t) to u(t + dt).
  void step(const Eigen::VectorXd& u_old, const Eigen::VectorXd& u_new, double dt);

  /// Memory integral at the current time given u(t).
  ConvolutionValue value(const Eigen::VectorXd& u_now) const;

private:
  const MemoryKernel* kernel_;
  BasisPtr basis_;
  std::vector<Eigen::VectorXd> branches_;  // J_k
};

}  // namespace visco
