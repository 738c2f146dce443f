#include "visco/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace visco {

namespace {

double sign(double s) { return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0); }

// Composite Simpson on a log-graded substitution s = e^y - 1, which keeps
// the panel count modest for slowly decaying kernels over long horizons.
// `panels` must be even.
double integrate_graded(const std::function<double(double)>& f, double s_upper, int panels) {
  const double y1 = std::log1p(s_upper);
  const double h = y1 / panels;
  auto g = [&](double y) {
    const double s = std::expm1(y);
    return f(s) * (s + 1.0);
  };
  double acc = g(0.0) + g(y1);
  for (int i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
  return acc * h / 3.0;
}

// Smallest s with mu(s) <= target, by bisection on the monotone tail.
double solve_horizon(const std::function<double(double)>& mu, double target) {
  double hi = 1.0;
  while (mu(hi) > target) {
    hi *= 2.0;
    if (hi > 1e12) throw std::invalid_argument("MemoryKernel: tail horizon not reachable");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mu(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

MemoryKernel MemoryKernel::prony(Eigen::VectorXd amplitudes, Eigen::VectorXd rates,
                                 double tail_tol, double s_max) {
  if (amplitudes.size() == 0 || amplitudes.size() != rates.size())
    throw std::invalid_argument("MemoryKernel::prony: amplitude/rate size mismatch");
  if ((amplitudes.array() <= 0.0).any() || (rates.array() <= 0.0).any())
    throw std::invalid_argument("MemoryKernel::prony: amplitudes and rates must be positive");
  if (tail_tol <= 0.0 || tail_tol >= 1.0)
    throw std::invalid_argument("MemoryKernel: tail_tol must be in (0,1)");

  MemoryKernel k;
  k.family_ = Family::PronySum;
  k.amplitudes_ = std::move(amplitudes);
  k.rates_ = std::move(rates);
  k.tail_tol_ = tail_tol;
  k.kappa_ = (k.amplitudes_.array() / k.rates_.array()).sum();

  auto mu = [&k](double s) { return k.mu(s); };
  const double mu0 = mu(0.0);
  if (s_max <= 0.0) {
    k.s_max_ = solve_horizon(mu, 0.5 * tail_tol * mu0);
  } else {
    if (mu(s_max) > tail_tol * mu0)
      throw std::invalid_argument("MemoryKernel: s_max violates the tail tolerance");
    k.s_max_ = s_max;
  }
  return k;
}

MemoryKernel MemoryKernel::power(double coeff, double exponent, double tail_tol, double s_max) {
  if (coeff <= 0.0) throw std::invalid_argument("MemoryKernel::power: coeff must be positive");
  if (exponent <= 1.0)
    throw std::invalid_argument("MemoryKernel::power: exponent <= 1 gives divergent mass");
  if (tail_tol <= 0.0 || tail_tol >= 1.0)
    throw std::invalid_argument("MemoryKernel: tail_tol must be in (0,1)");

  MemoryKernel k;
  k.family_ = Family::PowerDecay;
  k.coeff_ = coeff;
  k.exponent_ = exponent;
  k.tail_tol_ = tail_tol;

  auto mu = [&k](double s) { return k.mu(s); };
  const double mu0 = mu(0.0);
  if (s_max <= 0.0) {
    k.s_max_ = solve_horizon(mu, 0.5 * tail_tol * mu0);
  } else {
    if (mu(s_max) > tail_tol * mu0)
      throw std::invalid_argument("MemoryKernel: s_max violates the tail tolerance");
    k.s_max_ = s_max;
  }
  k.kappa_ = k.truncated_mass(k.s_max_);
  return k;
}

MemoryKernel MemoryKernel::none() {
  MemoryKernel k;
  k.family_ = Family::None;
  return k;
}

double MemoryKernel::mu(double s) const {
  switch (family_) {
    case Family::PronySum:
      return (amplitudes_.array() * (-rates_.array() * s).exp()).sum();
    case Family::PowerDecay:
      return coeff_ * std::pow(1.0 + s, -exponent_);
    case Family::None:
      return 0.0;
  }
  return 0.0;
}

double MemoryKernel::mu_prime(double s) const {
  switch (family_) {
    case Family::PronySum:
      return -(amplitudes_.array() * rates_.array() * (-rates_.array() * s).exp()).sum();
    case Family::PowerDecay:
      return -coeff_ * exponent_ * std::pow(1.0 + s, -exponent_ - 1.0);
    case Family::None:
      return 0.0;
  }
  return 0.0;
}

double MemoryKernel::truncated_mass(double s_upper) const {
  switch (family_) {
    case Family::PronySum:
      return (amplitudes_.array() / rates_.array() *
              (1.0 - (-rates_.array() * s_upper).exp()))
          .sum();
    case Family::PowerDecay: {
      auto f = [this](double s) { return mu(s); };
      return integrate_graded(f, s_upper, 4096);
    }
    case Family::None:
      return 0.0;
  }
  return 0.0;
}

DampingSpec DampingSpec::power(double m, double a, double b) {
  if (m < 1.0) throw std::invalid_argument("DampingSpec: m must be >= 1");
  if (a <= 0.0 || b < a) throw std::invalid_argument("DampingSpec: need 0 < a <= b");
  DampingSpec d;
  d.m = m;
  d.a = a;
  d.b = b;
  return d;
}

DampingSpec DampingSpec::custom(double m, double a, double b, std::function<double(double)> g,
                                std::function<double(double)> g_prime) {
  DampingSpec d = power(m, a, b);
  d.g_custom_ = std::move(g);
  d.gp_custom_ = std::move(g_prime);
  return d;
}

double DampingSpec::g(double s) const {
  if (g_custom_) return g_custom_(s);
  return sign(s) * std::pow(std::abs(s), m);
}

double DampingSpec::g_prime(double s) const {
  if (gp_custom_) return gp_custom_(s);
  if (g_custom_) {
    const double h = 1e-6 * (1.0 + std::abs(s));
    return (g_custom_(s + h) - g_custom_(s - h)) / (2.0 * h);
  }
  if (m == 1.0) return 1.0;
  return m * std::pow(std::abs(s), m - 1.0);
}

SourceSpec SourceSpec::power(double p, double C) {
  if (p < 1.0 || p >= 6.0) throw std::domain_error("SourceSpec: p must lie in [1, 6)");
  SourceSpec s;
  s.p = p;
  s.C = (C > 0.0) ? C : p;
  s.shape = Shape::Power;
  return s;
}

SourceSpec SourceSpec::dissipative(double p, double C) {
  SourceSpec s = power(p, C);
  s.shape = Shape::DissipativePower;
  return s;
}

SourceSpec SourceSpec::zero() {
  SourceSpec s;
  s.p = 1.0;
  s.C = 1.0;
  s.shape = Shape::Zero;
  return s;
}

double SourceSpec::f(double s) const {
  switch (shape) {
    case Shape::Power:
      return sign(s) * std::pow(std::abs(s), p);
    case Shape::DissipativePower:
      return -sign(s) * std::pow(std::abs(s), p);
    case Shape::Zero:
      return 0.0;
  }
  return 0.0;
}

double SourceSpec::f_prime(double s) const {
  double d;
  if (p == 1.0)
    d = 1.0;
  else
    d = p * std::pow(std::abs(s), p - 1.0);
  switch (shape) {
    case Shape::Power:
      return d;
    case Shape::DissipativePower:
      return -d;
    case Shape::Zero:
      return 0.0;
  }
  return 0.0;
}

double SourceSpec::f_second(double s) const {
  if (shape == Shape::Zero) return 0.0;
  double d;
  if (s == 0.0)
    d = 0.0;
  else
    d = p * (p - 1.0) * std::pow(std::abs(s), p - 2.0) * sign(s);
  return shape == Shape::DissipativePower ? -d : d;
}

Criticality SourceSpec::criticality() const { return classify_source(p); }

Criticality classify_source(double p) {
  if (p < 1.0 || p >= 6.0) throw std::domain_error("classify_source: p must lie in [1, 6)");
  if (p < 3.0) return Criticality::Subcritical;
  if (p == 3.0) return Criticality::Critical;
  if (p <= 5.0) return Criticality::Supercritical;
  return Criticality::SuperSupercritical;
}

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical:
      return "subcritical";
    case Criticality::Critical:
      return "critical";
    case Criticality::Supercritical:
      return "supercritical";
    case Criticality::SuperSupercritical:
      return "super-supercritical";
  }
  return "?";
}

bool AssumptionReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string AssumptionReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks)
    os << (c.pass ? "pass" : "FAIL") << "  " << c.id << ": " << c.detail << "\n";
  return os.str();
}

AssumptionReport validate_assumptions(const MemoryKernel& kernel, const DampingSpec& damping,
                                      const SourceSpec& source) {
  AssumptionReport rep;

  // Damping: g(0)=0, monotone increasing (sampled), growth envelope for |s|>=1.
  {
    bool ok = std::abs(damping.g(0.0)) == 0.0 && damping.m >= 1.0;
    std::ostringstream detail;
    if (std::abs(damping.g(0.0)) != 0.0) detail << "g(0) = " << damping.g(0.0) << " != 0; ";
    double prev = damping.g(-50.0);
    for (int i = 1; i <= 2000 && ok; ++i) {
      const double s = -50.0 + i * 0.05;
      const double cur = damping.g(s);
      if (cur < prev - 1e-12) {
        ok = false;
        detail << "not monotone near s = " << s << "; ";
      }
      prev = cur;
    }
    for (int i = 0; i <= 400 && ok; ++i) {
      for (double s : {1.0 + i * 0.25, -(1.0 + i * 0.25)}) {
        const double gs = damping.g(s) * s;
        const double env = std::pow(std::abs(s), damping.m + 1.0);
        if (gs < damping.a * env * (1.0 - 1e-12) || gs > damping.b * env * (1.0 + 1e-12)) {
          ok = false;
          detail << "growth envelope fails at s = " << s << " (g(s)s = " << gs << "); ";
          break;
        }
      }
    }
    if (ok) detail << "monotone, g(0)=0, a|s|^{m+1} <= g(s)s <= b|s|^{m+1} on samples";
    rep.checks.push_back({"damping", ok, detail.str()});
  }

  // Source: 1 <= p < 6 and |f'(s)| <= C(|s|^{p-1}+1) sampled. The constant
  // is never pinned upstream, so the smallest sampled constant is reported.
  {
    bool ok = source.p >= 1.0 && source.p < 6.0;
    std::ostringstream detail;
    double c_needed = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double s = -100.0 + i * 0.05;
      const double ratio =
          std::abs(source.f_prime(s)) / (std::pow(std::abs(s), source.p - 1.0) + 1.0);
      c_needed = std::max(c_needed, ratio);
    }
    if (c_needed > source.C * (1.0 + 1e-12)) {
      ok = false;
      detail << "sampled |f'|/(|s|^{p-1}+1) needs C >= " << c_needed << " but C = " << source.C;
    } else {
      detail << "smallest sampled C = " << c_needed << " (declared C = " << source.C << ")";
    }
    rep.checks.push_back({"source-growth", ok, detail.str()});
  }

  // Strict exponent inequality p(m+1)/m < 6.
  {
    const double v = source.p * (damping.m + 1.0) / damping.m;
    const bool ok = v < 6.0;
    std::ostringstream detail;
    detail << "p(m+1)/m = " << v << (ok ? " < 6" : " >= 6 (strict bound violated)");
    rep.checks.push_back({"exponents", ok, detail.str()});
  }

  // Kernel: mu > 0, mu' <= 0, mu(inf) = 0 via the tail tolerance, kappa
  // finite and positive. Exact for prony sums (all c_k, theta_k > 0 by
  // construction), sampled otherwise.
  {
    bool ok = kernel.has_memory();
    std::ostringstream detail;
    if (!ok) {
      detail << "no memory kernel (kappa = 0, k(0) = 1); requires mu > 0";
    } else {
      const double mu0 = kernel.mu(0.0);
      if (kernel.family() == MemoryKernel::Family::PronySum) {
        detail << "prony sum: mu > 0 and mu' < 0 exactly; ";
      } else {
        for (int i = 0; i <= 1000 && ok; ++i) {
          const double s = kernel.s_max() * i / 1000.0;
          if (kernel.mu(s) <= 0.0 || kernel.mu_prime(s) > 0.0) {
            ok = false;
            detail << "kernel sign fails at s = " << s << "; ";
          }
        }
      }
      if (!(kernel.mass() > 0.0) || !std::isfinite(kernel.mass())) {
        ok = false;
        detail << "kappa = " << kernel.mass() << " not finite positive; ";
      }
      if (kernel.mu(kernel.s_max()) > kernel.tail_tol() * mu0 * (1.0 + 1e-12)) {
        ok = false;
        detail << "mu(s_max) exceeds tail tolerance; ";
      }
      if (ok)
        detail << "kappa = " << kernel.mass() << ", k(0) = " << kernel.k0()
               << ", mu(s_max)/mu(0) <= " << kernel.tail_tol();
    }
    rep.checks.push_back({"kernel", ok, detail.str()});
  }

  // Past-history bullet: the built-in closed-form library expands in the
  // Dirichlet basis, so membership, weak continuity at t = 0, and the
  // boundary condition hold by construction.
  rep.checks.push_back(
      {"past-history", true, "holds by construction for the closed-form past library"});

  return rep;
}

Field truncate_source_K(const SourceSpec& source, const Field& u, double K) {
  if (K <= 0.0) throw std::invalid_argument("truncate_source_K: K must be positive");
  const double gn = u.norm(Norm::H10);
  const double scale = (gn <= K) ? 1.0 : K / gn;
  Eigen::VectorXd nodal = u.basis->to_nodal(u.coeffs);
  for (Eigen::Index i = 0; i < nodal.size(); ++i) nodal[i] = source.f(scale * nodal[i]);
  return Field(u.basis, u.basis->to_coeffs(nodal));
}

double cutoff_eta(double n, double s) {
  const double a = std::abs(s);
  if (a <= n) return 1.0;
  if (a >= 2.0 * n) return 0.0;
  const double x = (a - n) / n;
  const double smooth = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
  return 1.0 - smooth;
}

double cutoff_eta_prime(double n, double s) {
  const double a = std::abs(s);
  if (a <= n || a >= 2.0 * n) return 0.0;
  const double x = (a - n) / n;
  const double ds = 30.0 * x * x * (x - 1.0) * (x - 1.0) / n;
  return -ds * sign(s);
}

double cutoff_source_n(const SourceSpec& source, double n, double s) {
  if (n <= 0.0) throw std::invalid_argument("cutoff_source_n: n must be positive");
  if (std::abs(s) >= 2.0 * n) return 0.0;
  return source.f(s) * cutoff_eta(n, s);
}

}  // namespace visco
