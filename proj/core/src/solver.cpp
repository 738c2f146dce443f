#include "visco/solver.hpp"

#include "visco/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace visco {

namespace {

bool finite(const Eigen::VectorXd& x) { return x.allFinite(); }

double modified_energy_of(const SimState& s, const SourceSpec& source) {
  const double e = 0.5 * s.h_norm_sq();
  const double p = source.p;
  if (source.shape == SourceSpec::Shape::Zero) return e;
  const double up = s.u.lp_norm(p + 1.0);
  return e + std::pow(up, p + 1.0) / (p + 1.0);
}

}  // namespace

double SimState::h_norm_sq() const {
  const double gu = u.norm(Norm::H10);
  const double vv = v.norm(Norm::L2);
  const double ww = w ? w->mu_h10_sq() : 0.0;
  return gu * gu + vv * vv + ww;
}

double resolvent_damping(double r, double lam, const DampingSpec& damping, double tol,
                         int max_iter) {
  if (lam <= 0.0) throw std::invalid_argument("resolvent_damping: lam must be positive");
  if (!std::isfinite(r)) throw std::domain_error("resolvent_damping: nonfinite input");
  if (r == 0.0) return 0.0;

  double lo = std::min(0.0, r), hi = std::max(0.0, r);
  double x = r / (1.0 + lam * damping.g_prime(r));
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  const double target = tol * (1.0 + std::abs(r));

  for (int it = 0; it < max_iter; ++it) {
    const double f = x + lam * damping.g(x) - r;
    if (std::abs(f) <= target) return x;
    (f > 0.0 ? hi : lo) = x;
    const double fp = 1.0 + lam * damping.g_prime(x);
    double x_next = x - f / fp;
    if (!std::isfinite(x_next) || x_next <= lo || x_next >= hi) x_next = 0.5 * (lo + hi);
    x = x_next;
  }
  const double res = x + lam * damping.g(x) - r;
  if (std::abs(res) <= 1e4 * target) return x;  // flat tail near round-off
  std::ostringstream os;
  os << "resolvent_damping: iteration cap exceeded, residual " << res;
  throw std::runtime_error(os.str());
}

Eigen::VectorXd apply_source(const SourceSpec& source, const SourceMode& mode, const Field& u) {
  const BasisPtr& basis = u.basis;
  switch (mode.kind) {
    case SourceMode::Kind::Off:
      return Eigen::VectorXd::Zero(basis->modes());
    case SourceMode::Kind::Full: {
      if (source.shape == SourceSpec::Shape::Zero) return Eigen::VectorXd::Zero(basis->modes());
      Eigen::VectorXd nodal = basis->to_nodal(u.coeffs);
      for (Eigen::Index i = 0; i < nodal.size(); ++i) nodal[i] = source.f(nodal[i]);
      return basis->to_coeffs(nodal);
    }
    case SourceMode::Kind::TruncatedK:
      return truncate_source_K(source, u, mode.K).coeffs;
    case SourceMode::Kind::CutoffN: {
      Eigen::VectorXd nodal = basis->to_nodal(u.coeffs);
      for (Eigen::Index i = 0; i < nodal.size(); ++i)
        nodal[i] = cutoff_source_n(source, mode.n, nodal[i]);
      return basis->to_coeffs(nodal);
    }
  }
  return Eigen::VectorXd::Zero(basis->modes());
}

SimState make_initial_state(const PastHistory& past, const ModelSpecs& specs,
                            const StepperConfig& cfg) {
  const BasisPtr& basis = past.basis();
  SimState s;
  s.t = 0.0;
  s.step = 0;
  if (specs.kernel.has_memory()) {
    InitialState init = init_history(past, specs.kernel, cfg.dt);
    s.u = std::move(init.u);
    s.v = std::move(init.v);
    const int capacity = init.w.grid_intervals() + 2;
    s.w.emplace(std::move(init.w));
    s.ring = URing(basis->modes(), capacity);
  } else {
    s.u = Field(basis, past.eval(0.0));
    s.v = Field(basis, past.eval_dt(0.0));
    s.ring = URing(basis->modes(), 2);
  }
  s.ring.push(s.u.coeffs);
  return s;
}

namespace {

// Implicit-midpoint half-step of v_t = -g(v): the stage midpoint solves
// y + (dt/4) g(y) = v at every quadrature node (the damping resolvent), and
// the half-step ends at 2y - v. Second order and unconditionally
// dissipative, so the surrounding Strang composition keeps both properties.
Eigen::VectorXd damping_half_step(const Eigen::VectorXd& v_coeffs, const BasisPtr& basis,
                                  const DampingSpec& damping, const StepperConfig& cfg) {
  Eigen::VectorXd nodal = basis->to_nodal(v_coeffs);
  const double lam = 0.25 * cfg.dt;
  for (Eigen::Index i = 0; i < nodal.size(); ++i) {
    const double y = resolvent_damping(nodal[i], lam, damping, cfg.damping_tol,
                                       cfg.damping_max_iter);
    nodal[i] = 2.0 * y - nodal[i];
  }
  return basis->to_coeffs(nodal);
}

}  // namespace

StepOutcome step(SimState& state, const StepperConfig& cfg, const ModelSpecs& specs) {
  const BasisPtr& basis = state.u.basis;
  const double dt = cfg.dt;
  const auto& lam = basis->eigenvalues();

  if (!finite(state.u.coeffs) || !finite(state.v.coeffs))
    return {StepStatus::BlowUp, state.t, std::numeric_limits<double>::infinity()};

  const Eigen::VectorXd v_begin = state.v.coeffs;

  // Source, explicit at the midpoint-extrapolated argument.
  const Field u_star(basis, state.u.coeffs + 0.5 * dt * v_begin);
  Eigen::VectorXd f_coeffs;
  if (finite(u_star.coeffs)) {
    f_coeffs = apply_source(specs.source, cfg.source, u_star);
  } else {
    return {StepStatus::BlowUp, state.t, std::numeric_limits<double>::infinity()};
  }

  // First damping half-step.
  Eigen::VectorXd v0 = cfg.damping_enabled
                           ? damping_half_step(state.v.coeffs, basis, specs.damping, cfg)
                           : state.v.coeffs;

  // Linear midpoint stage: wave and memory implicit, diagonal per mode.
  Eigen::VectorXd memory_known = Eigen::VectorXd::Zero(basis->modes());
  double w_tail = 0.0;
  if (state.w) {
    memory_known = 0.5 * (state.w->weighted_sum() + state.w->shifted_weighted_sum());
    w_tail = state.w->weight_tail_sum();
  }

  const Eigen::VectorXd numer =
      2.0 * v0 + dt * (-(lam.array() * (state.u.coeffs + memory_known).array()).matrix() +
                       f_coeffs);
  const Eigen::VectorXd denom =
      (2.0 + 0.5 * dt * dt * (1.0 + w_tail) * lam.array()).matrix();
  const Eigen::VectorXd v_mid = (numer.array() / denom.array()).matrix();

  Eigen::VectorXd u_new = state.u.coeffs + dt * v_mid;
  Eigen::VectorXd v1 = 2.0 * v_mid - v0;

  // Second damping half-step.
  if (cfg.damping_enabled) {
    if (!finite(v1)) return {StepStatus::BlowUp, state.t, std::numeric_limits<double>::infinity()};
    v1 = damping_half_step(v1, basis, specs.damping, cfg);
  }

  if (!finite(u_new) || !finite(v1))
    return {StepStatus::BlowUp, state.t, std::numeric_limits<double>::infinity()};

  // History transport and ring rotation.
  if (state.w) {
    state.w->advance(v_begin, v1, u_new, state.ring, state.step + 1, dt);
  }
  state.ring.push(u_new);
  state.u.coeffs = std::move(u_new);
  state.v.coeffs = std::move(v1);
  state.step += 1;
  state.t = static_cast<double>(state.step) * dt;

  const double mod_e = modified_energy_of(state, specs.source);
  if (!std::isfinite(mod_e) || mod_e > cfg.blowup_threshold)
    return {StepStatus::BlowUp, state.t, mod_e};
  return {StepStatus::Ok, state.t, mod_e};
}

RunSummary run(SimState& state, const ModelSpecs& specs, const StepperConfig& cfg, double horizon,
               const StepCallback& per_step) {
  RunSummary summary;
  if (per_step) per_step(state);
  const long n_steps = std::lround(horizon / cfg.dt);
  for (long k = 0; k < n_steps; ++k) {
    const StepOutcome out = step(state, cfg, specs);
    if (out.status == StepStatus::BlowUp) {
      summary.status = StepStatus::BlowUp;
      summary.blowup_t = out.t;
      summary.blowup_mod_energy = out.modified_energy;
      summary.final_t = state.t;
      summary.steps = state.step;
      return summary;
    }
    if (per_step) per_step(state);
  }
  summary.final_t = state.t;
  summary.steps = state.step;
  return summary;
}

double sample_lipschitz_fK(const SourceSpec& source, const BasisPtr& basis, double K, double q,
                           int n_pairs, std::uint64_t seed) {
  Rng rng(seed);
  const int n = basis->modes();
  const auto& lam = basis->eigenvalues();

  double worst = 0.0;
  auto probe = [&](const Field& u, const Field& uhat) {
    const Field fu = truncate_source_K(source, u, K);
    const Field fuh = truncate_source_K(source, uhat, K);
    const Eigen::VectorXd diff_nodal = basis->to_nodal(fu.coeffs - fuh.coeffs);
    const double num = basis->lp_norm_nodal(diff_nodal, q);
    const Field du(basis, u.coeffs - uhat.coeffs);
    const double den = du.norm(Norm::H10);
    if (den > 1e-14) worst = std::max(worst, num / den);
  };

  // Structured boundary candidates: single modes at the truncation radius,
  // probed along every low mode. These carry the extremal difference
  // quotients for power shapes, so the randomized refinement below only
  // polishes the estimate and the budget barely moves it.
  const int probe_modes = std::min(n, 6);
  for (int j = 1; j <= probe_modes; ++j) {
    for (double sign : {1.0, -1.0}) {
      const Field u = Field::mode(basis, j, sign * K / std::sqrt(lam[j - 1]));
      probe(u, Field(basis, u.coeffs * (1.0 - 1e-4)));
      for (int k = 1; k <= probe_modes; ++k) {
        Field uhat = u;
        uhat.coeffs[k - 1] += 1e-4 * K / std::sqrt(lam[k - 1]);
        probe(u, uhat);
      }
    }
  }

  // Smooth random fields: spectrally decaying coefficients keep the
  // amplitude (not just the H^1 budget) near the extremal configurations.
  auto random_in_ball = [&](double radius_frac, double decay) {
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = rng.normal() / std::pow(lam[j], decay);
    Field f(basis, std::move(c));
    const double g = f.norm(Norm::H10);
    if (g > 0.0) f.coeffs *= radius_frac * K / g;
    return f;
  };
  for (int i = 0; i < n_pairs; ++i) {
    const double decay = rng.uniform(0.0, 1.5);
    const Field u = random_in_ball(rng.uniform(0.2, 1.0), decay);
    if (i % 2 == 0) {
      probe(u, random_in_ball(rng.uniform(0.2, 1.0), decay));
    } else {
      Field uhat = u;
      Eigen::VectorXd d(n);
      for (int j = 0; j < n; ++j) d[j] = rng.normal() / std::pow(lam[j], decay);
      Field dir(basis, std::move(d));
      const double g = dir.norm(Norm::H10);
      if (g > 0.0) uhat.coeffs += (1e-4 * K / g) * dir.coeffs;
      probe(u, uhat);
    }
  }
  return worst;
}

LocalTimeEstimate estimate_local_time(double E0, const ModelSpecs& specs, const BasisPtr& basis,
                                      int sampling_budget, std::uint64_t seed) {
  if (E0 < 0.0) throw std::invalid_argument("estimate_local_time: E0 must be >= 0");
  LocalTimeEstimate est;
  const double m = specs.damping.m;
  const double a = specs.damping.a;
  est.K = 2.0 * std::sqrt(E0 + 1.0);
  est.eps = a;
  // Young: x y <= eps x^{m+1} + C_Y y^{(m+1)/m}.
  est.young_const = (m / (m + 1.0)) * std::pow(a * (m + 1.0), -1.0 / m);
  const double q = (m + 1.0) / m;
  est.L_K = sample_lipschitz_fK(specs.source, basis, est.K, q, sampling_budget, seed);

  const double lk_pow = std::pow(est.L_K, q);
  const double f0 = std::abs(specs.source.f(0.0));
  const double omega_measure = basis->measure();
  est.C_LK = 2.0 * est.young_const * lk_pow;
  est.C0 = est.young_const * lk_pow + a * omega_measure +
           est.young_const * std::pow(f0, q) * omega_measure;
  est.T = std::min(1.0 / est.C0, std::log(2.0) / std::max(est.C_LK, 1e-300));
  return est;
}

double accretivity_pairing(const PhaseTriple& U, const PhaseTriple& Uhat, double alpha,
                           const ModelSpecs& specs, const SourceMode& source_mode) {
  const BasisPtr& basis = U.u.basis;
  if (Uhat.u.basis != basis || U.w.nodes() != Uhat.w.nodes())
    throw std::invalid_argument("accretivity_pairing: grid mismatch");

  const Field du(basis, U.u.coeffs - Uhat.u.coeffs);
  const Field dv(basis, U.v.coeffs - Uhat.v.coeffs);
  HistoryField dw = U.w;
  dw.data() -= Uhat.w.data();

  // First slot: (-(v - vhat), u - uhat) in H^1_0.
  const double a1 = -inner_h10(dv, du);
  // Second slot, stiffness: <-Laplacian(u - uhat), v - vhat>.
  const double a2 = inner_h10(du, dv);
  // Damping: quadrature of (g(v) - g(vhat))(v - vhat) >= 0.
  double a3 = 0.0;
  {
    const Eigen::VectorXd nv = basis->to_nodal(U.v.coeffs);
    const Eigen::VectorXd nvh = basis->to_nodal(Uhat.v.coeffs);
    Eigen::VectorXd integrand(nv.size());
    for (Eigen::Index i = 0; i < nv.size(); ++i)
      integrand[i] = (specs.damping.g(nv[i]) - specs.damping.g(nvh[i])) * (nv[i] - nvh[i]);
    a3 = basis->integrate(integrand);
  }
  // Memory duality pair: -<L(dw), dv> and -(dv, dw)_mu cancel to round-off.
  const double a4 = -inner(dw.memory_operator(), dv);
  const double a6 = -dw.mu_inner(dv);
  // Source difference against dv.
  double a5 = 0.0;
  if (source_mode.kind != SourceMode::Kind::Off &&
      specs.source.shape != SourceSpec::Shape::Zero) {
    const Eigen::VectorXd fu = apply_source(specs.source, source_mode, U.u);
    const Eigen::VectorXd fuh = apply_source(specs.source, source_mode, Uhat.u);
    a5 = -(fu - fuh).dot(dv.coeffs);
  }
  // Transport term (dw_s, dw)_mu >= 0 by summation by parts.
  const double a7 = dw.transport_pairing(dw);

  const double du_h = du.norm(Norm::H10);
  const double dv_l2 = dv.norm(Norm::L2);
  const double h_sq = du_h * du_h + dv_l2 * dv_l2 + dw.mu_h10_sq();

  return a1 + a2 + a3 + a4 + a5 + a6 + a7 + alpha * h_sq;
}

}  // namespace visco
