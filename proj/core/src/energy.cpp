#include "visco/energy.hpp"

#include <cmath>

namespace visco {

double quadratic_energy(const SimState& state) { return 0.5 * state.h_norm_sq(); }

double modified_energy(const SimState& state, double p) {
  const double up = state.u.lp_norm(p + 1.0);
  return quadratic_energy(state) + std::pow(up, p + 1.0) / (p + 1.0);
}

double identity_residual(const LedgerRow& row, double E0) {
  return (row.E + row.D_g + row.D_mu) - (E0 + row.W_f);
}

LedgerBuilder::LedgerBuilder(const ModelSpecs& specs, const StepperConfig& cfg)
    : specs_(specs), cfg_(cfg) {}

void LedgerBuilder::push(const SimState& state) {
  LedgerRow row;
  row.t = state.t;
  row.E = quadratic_energy(state);
  row.modE = specs_.source.shape == SourceSpec::Shape::Zero
                 ? row.E
                 : modified_energy(state, specs_.source.p);

  const BasisPtr& basis = state.u.basis;

  // Instantaneous integrands of the three cumulative terms.
  double ig = 0.0;
  if (cfg_.damping_enabled) {
    const Eigen::VectorXd nv = basis->to_nodal(state.v.coeffs);
    Eigen::VectorXd integrand(nv.size());
    for (Eigen::Index i = 0; i < nv.size(); ++i)
      integrand[i] = specs_.damping.g(nv[i]) * nv[i];
    ig = basis->integrate(integrand);
  }
  const double imu = state.w ? -0.5 * state.w->mu_prime_h10_sq() : 0.0;
  double iff = 0.0;
  if (cfg_.source.kind != SourceMode::Kind::Off &&
      specs_.source.shape != SourceSpec::Shape::Zero) {
    const Eigen::VectorXd f = apply_source(specs_.source, cfg_.source, state.u);
    iff = f.dot(state.v.coeffs);
  }

  if (first_) {
    e0_ = row.E;
    first_ = false;
  } else {
    const LedgerRow& last = rows_.back();
    const double h = 0.5 * (state.t - prev_t_);
    row.D_g = last.D_g + h * (prev_ig_ + ig);
    row.D_mu = last.D_mu + h * (prev_imu_ + imu);
    row.W_f = last.W_f + h * (prev_if_ + iff);
  }
  row.residual = identity_residual(row, e0_);
  rows_.push_back(row);
  prev_t_ = state.t;
  prev_ig_ = ig;
  prev_imu_ = imu;
  prev_if_ = iff;
}

double LedgerBuilder::max_abs_residual() const {
  double worst = 0.0;
  for (const auto& r : rows_) worst = std::max(worst, std::abs(r.residual));
  return worst;
}

WeakFormAuditor::WeakFormAuditor(TestFunction phi, const ModelSpecs& specs,
                                 const StepperConfig& cfg)
    : phi_(std::move(phi)), specs_(specs), cfg_(cfg) {}

WeakFormAuditor::Instant WeakFormAuditor::instant(const SimState& state) const {
  const BasisPtr& basis = state.u.basis;
  const double pr = phi_.profile(state.t);
  const double prdt = phi_.profile_dt(state.t);
  Instant inst;
  inst.ut_phit = state.v.coeffs.dot(phi_.shape.coeffs) * prdt;
  inst.stiff = specs_.kernel.k0() * inner_h10(state.u, phi_.shape) * pr;
  if (state.w) {
    const double kappa_w = state.w->weight_sum();
    inst.memory =
        (-kappa_w * inner_h10(state.u, phi_.shape) + state.w->mu_inner(phi_.shape)) * pr;
  }
  if (cfg_.damping_enabled) {
    const Eigen::VectorXd nv = basis->to_nodal(state.v.coeffs);
    const Eigen::VectorXd nphi = basis->to_nodal(phi_.shape.coeffs);
    Eigen::VectorXd integrand(nv.size());
    for (Eigen::Index i = 0; i < nv.size(); ++i)
      integrand[i] = specs_.damping.g(nv[i]) * nphi[i];
    inst.damping = basis->integrate(integrand) * pr;
  }
  if (cfg_.source.kind != SourceMode::Kind::Off &&
      specs_.source.shape != SourceSpec::Shape::Zero) {
    const Eigen::VectorXd f = apply_source(specs_.source, cfg_.source, state.u);
    inst.source = f.dot(phi_.shape.coeffs) * pr;
  }
  return inst;
}

void WeakFormAuditor::push(const SimState& state) {
  const Instant inst = instant(state);
  const double pairing = state.v.coeffs.dot(phi_.shape.coeffs) * phi_.profile(state.t);
  if (first_) {
    bdry0_ = pairing;
    first_ = false;
  } else {
    const double h = 0.5 * (state.t - prev_t_);
    acc_ut_phit_ += h * (prev_.ut_phit + inst.ut_phit);
    acc_stiff_ += h * (prev_.stiff + inst.stiff);
    acc_memory_ += h * (prev_.memory + inst.memory);
    acc_damping_ += h * (prev_.damping + inst.damping);
    acc_source_ += h * (prev_.source + inst.source);
  }
  bdry_t_ = pairing;
  prev_ = inst;
  prev_t_ = state.t;
}

double WeakFormAuditor::residual() const {
  return bdry_t_ - bdry0_ - acc_ut_phit_ + acc_stiff_ + acc_memory_ + acc_damping_ -
         acc_source_;
}

double gronwall_bound(double E0, double C0, double C, double horizon, double t) {
  return (E0 + C0 * horizon) * std::exp(C * t);
}

double GlobalBound::log_ceiling(double mod_E0, double horizon, double t) const {
  return std::log(mod_E0 + C_const * horizon) + C_growth * t;
}

GlobalBound assemble_global_bound(const ModelSpecs& specs, double domain_measure) {
  GlobalBound gb;
  const double m = specs.damping.m;
  const double p = specs.source.p;
  const double a = specs.damping.a;
  if (m < p) return gb;  // the chain needs the damping to dominate
  gb.valid = true;

  // Holder from the (p+1)- to the (m+1)-velocity norm costs
  // |Omega|^{1 - (p+1)/(m+1)}; eps is set so the absorbed velocity term
  // keeps coefficient a/2 < a.
  const double alpha_exp = 1.0 - (p + 1.0) / (m + 1.0);
  const double conv = std::pow(domain_measure, alpha_exp);
  gb.eps = a / (4.0 * conv);
  gb.young_const = (p / (p + 1.0)) * std::pow(gb.eps * (p + 1.0), -1.0 / p);

  const double cf = specs.source.growth_coeff();
  const double cf_pow = std::pow(cf, (p + 1.0) / p);
  const double two_pow = std::pow(2.0, 1.0 / p);
  const double a_term = gb.young_const * cf_pow * two_pow * (p + 1.0);
  const double a_const = gb.young_const * cf_pow * two_pow * domain_measure;
  const double b_term = gb.young_const * (p + 1.0);

  gb.C_growth = a_term + b_term;
  gb.C_const = a_const + 0.5 * a;
  return gb;
}

double difference_energy(const SimState& a, const SimState& b) {
  if (a.u.basis != b.u.basis) throw std::invalid_argument("difference_energy: basis mismatch");
  const Field du(a.u.basis, a.u.coeffs - b.u.coeffs);
  const Field dv(a.u.basis, a.v.coeffs - b.v.coeffs);
  const double gu = du.norm(Norm::H10);
  const double vv = dv.norm(Norm::L2);
  double ww = 0.0;
  if (a.w && b.w) {
    HistoryField dw = *a.w;
    dw.data() -= b.w->data();
    ww = dw.mu_h10_sq();
  } else if (a.w || b.w) {
    throw std::invalid_argument("difference_energy: one state lacks a history field");
  }
  return 0.5 * (gu * gu + vv * vv + ww);
}

LedgerRun run_with_ledger(SimState& state, const ModelSpecs& specs, const StepperConfig& cfg,
                          double horizon) {
  LedgerBuilder builder(specs, cfg);
  LedgerRun out;
  out.summary = run(state, specs, cfg, horizon, builder.callback());
  out.rows = builder.rows();
  out.max_abs_residual = builder.max_abs_residual();
  return out;
}

}  // namespace visco
