#pragma once

#include "visco/spectral.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace visco {

/// Relaxation kernel mu(s) = -k'(s) with k(inf) = 1, so k(0) = 1 + kappa
/// where kappa = integral of mu. Two concrete families:
///   prony-sum:   mu(s) = sum_k c_k exp(-theta_k s),  c_k, theta_k > 0
///   power-decay: mu(s) = c (1+s)^{-q}, q > 1, truncated at s_max
/// plus a `none` sentinel (kappa = 0) for memory-free runs.
class MemoryKernel {
public:
  enum class Family { PronySum, PowerDecay, None };

  /// s_max <= 0 requests automatic truncation: the smallest horizon with
  /// mu(s_max) <= 0.5 * tail_tol * mu(0+), which keeps both the stated tail
  /// bound and the quadrature-mass bracket satisfiable.
  static MemoryKernel prony(Eigen::VectorXd amplitudes, Eigen::VectorXd rates,
                            double tail_tol = 1e-10, double s_max = 0.0);
  static MemoryKernel power(double coeff, double exponent, double tail_tol = 1e-10,
                            double s_max = 0.0);
  static MemoryKernel none();

  Family family() const { return family_; }
  bool has_memory() const { return family_ != Family::None; }

  double mu(double s) const;
  double mu_prime(double s) const;

  /// kappa = integral_0^inf mu ds; exact for prony sums, quadrature for
  /// power decay (over [0, s_max], the truncated mass).
  double mass() const { return kappa_; }
  double k0() const { return 1.0 + kappa_; }

  /// integral_0^{s_upper} mu ds, closed form for prony, quadrature otherwise.
  double truncated_mass(double s_upper) const;

  double s_max() const { return s_max_; }
  double tail_tol() const { return tail_tol_; }

  const Eigen::VectorXd& prony_amplitudes() const { return amplitudes_; }
  const Eigen::VectorXd& prony_rates() const { return rates_; }

private:
  MemoryKernel() = default;

  Family family_ = Family::None;
  Eigen::VectorXd amplitudes_, rates_;
  double coeff_ = 0.0, exponent_ = 0.0;
  double s_max_ = 0.0, tail_tol_ = 1e-10;
  double kappa_ = 0.0;
};

/// Monotone damping feedback g with g(0) = 0 and the growth envelope
/// a|s|^{m+1} <= g(s)s <= b|s|^{m+1} for |s| >= 1. The reference shape
/// g(s) = s|s|^{m-1} attains the envelope with a = b = 1; user-supplied
/// monotone alternatives are accepted through `custom`.
struct DampingSpec {
  double m = 1.0;
  double a = 1.0;
  double b = 1.0;

  static DampingSpec power(double m, double a = 1.0, double b = 1.0);
  static DampingSpec custom(double m, double a, double b, std::function<double(double)> g,
                            std::function<double(double)> g_prime = {});

  double g(double s) const;
  /// Derivative where the shape is differentiable; for the reference shape
  /// this is m|s|^{m-1}.
  double g_prime(double s) const;

  bool is_custom() const { return static_cast<bool>(g_custom_); }

private:
  std::function<double(double)> g_custom_, gp_custom_;
};

enum class Criticality { Subcritical, Critical, Supercritical, SuperSupercritical };

/// Source nonlinearity f with |f'(s)| <= C(|s|^{p-1} + 1), 1 <= p < 6.
/// Shapes: the reference f(s) = |s|^{p-1}s, its dissipative-sign mirror
/// f(s) = -|s|^{p-1}s, and an identically-zero source.
struct SourceSpec {
  enum class Shape { Power, DissipativePower, Zero };

  double p = 1.0;
  double C = 1.0;
  Shape shape = Shape::Power;

  static SourceSpec power(double p, double C = 0.0);        // C = 0 -> default C = p
  static SourceSpec dissipative(double p, double C = 0.0);  // f(s)s <= 0
  static SourceSpec zero();

  double f(double s) const;
  double f_prime(double s) const;
  double f_second(double s) const;

  /// |f(s)| <= growth_coeff * (|s|^p + 1) for the built-in shapes.
  double growth_coeff() const { return shape == Shape::Zero ? 0.0 : 1.0; }

  Criticality criticality() const;
};

/// Criticality of the exponent p against the 3-D embedding H^1 -> L^6:
/// p < 3 subcritical, p = 3 critical, 3 < p <= 5 supercritical,
/// 5 < p < 6 super-supercritical. Out-of-range p faults.
Criticality classify_source(double p);
std::string to_string(Criticality c);

/// One checked bullet of the standing assumptions.
struct AssumptionCheck {
  std::string id;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool pass() const;
  std::string to_text() const;
};

/// Validates every bullet of the standing assumptions: damping shape and
/// growth envelope, source derivative growth (reporting the smallest
/// sampled constant), the strict exponent inequality p(m+1)/m < 6, and the
/// kernel bullets (positivity, monotone decay, finite positive mass, tail
/// tolerance). The past-history bullet holds by construction for the
/// built-in closed-form library and is recorded as such.
AssumptionReport validate_assumptions(const MemoryKernel& kernel, const DampingSpec& damping,
                                      const SourceSpec& source);

/// kappa accessor matching the report vocabulary.
inline double kernel_mass(const MemoryKernel& k) { return k.mass(); }

/// Truncated source f_K(u): equals f(u) while ||grad u||_2 <= K, otherwise
/// f applied pointwise to the radially rescaled argument K u / ||grad u||_2.
/// Returns the spectral projection of the nodal evaluation.
Field truncate_source_K(const SourceSpec& source, const Field& u, double K);

/// Smooth cutoff f_n(s) = f(s) eta_n(s) with a quintic-smoothstep bump:
/// eta_n = 1 on |s| <= n, 0 on |s| >= 2n, |eta_n'| <= (15/8)/n.
double cutoff_source_n(const SourceSpec& source, double n, double s);
double cutoff_eta(double n, double s);
double cutoff_eta_prime(double n, double s);

/// The model triple a solver run works against.
struct ModelSpecs {
  MemoryKernel kernel = MemoryKernel::none();
  DampingSpec damping;
  SourceSpec source;
};

}  // namespace visco
