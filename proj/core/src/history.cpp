#include "visco/history.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace visco {

namespace {

// Trapezoidal node weights for a kernel-weighted quadrature on [0, M ds],
// scaled so they sum to `target_mass` exactly.
Eigen::VectorXd trapezoid_weights(const std::function<double(double)>& density, int m_nodes,
                                  double ds, double target_mass, bool normalize) {
  Eigen::VectorXd w(m_nodes + 1);
  for (int i = 0; i <= m_nodes; ++i) {
    const double factor = (i == 0 || i == m_nodes) ? 0.5 : 1.0;
    w[i] = factor * ds * density(i * ds);
  }
  if (normalize) {
    const double raw = w.sum();
    if (raw != 0.0) w *= target_mass / raw;
  }
  return w;
}

}  // namespace

PastHistory::PastHistory(BasisPtr basis, std::vector<Term> terms)
    : basis_(std::move(basis)), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.mode < 1 || t.mode > basis_->modes())
      throw std::invalid_argument("PastHistory: term mode out of basis range");
    if (t.kind == Kind::Poly && t.poly.empty())
      throw std::invalid_argument("PastHistory: polynomial term needs coefficients");
  }
}

Eigen::VectorXd PastHistory::eval(double t) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_->modes());
  for (const auto& term : terms_) {
    double profile = 0.0;
    switch (term.kind) {
      case Kind::Trig:
        profile = std::cos(term.omega * t + term.phase);
        break;
      case Kind::Exp:
        profile = std::exp(term.rate * t);
        break;
      case Kind::Poly: {
        double tp = 1.0;
        for (double cr : term.poly) {
          profile += cr * tp;
          tp *= t;
        }
        break;
      }
    }
    c[term.mode - 1] += term.amp * profile;
  }
  return c;
}

Eigen::VectorXd PastHistory::eval_dt(double t) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_->modes());
  for (const auto& term : terms_) {
    double dprofile = 0.0;
    switch (term.kind) {
      case Kind::Trig:
        dprofile = -term.omega * std::sin(term.omega * t + term.phase);
        break;
      case Kind::Exp:
        dprofile = term.rate * std::exp(term.rate * t);
        break;
      case Kind::Poly: {
        double tp = 1.0;
        for (std::size_t r = 1; r < term.poly.size(); ++r) {
          dprofile += static_cast<double>(r) * term.poly[r] * tp;
          tp *= t;
        }
        break;
      }
    }
    c[term.mode - 1] += term.amp * dprofile;
  }
  return c;
}

PastHistory PastHistory::scaled(double delta) const {
  std::vector<Term> t = terms_;
  for (auto& term : t) term.amp *= (1.0 + delta);
  return PastHistory(basis_, std::move(t));
}

Eigen::VectorXd Trajectory::at_time(double t) const {
  if (t <= 1e-12 * dt_) {
    if (t > 0.0) t = 0.0;
    if (past_) return past_->eval(t);
    if (!steps_.empty() && std::abs(t) <= 1e-9 * dt_) return steps_.front();
    throw std::invalid_argument("Trajectory: no past history attached");
  }
  const double kf = t / dt_;
  const long k = std::lround(kf);
  if (std::abs(kf - static_cast<double>(k)) > 1e-6)
    throw std::invalid_argument("Trajectory: query time off the step grid");
  if (k < 0 || static_cast<std::size_t>(k) >= steps_.size())
    throw std::invalid_argument("Trajectory: gap in stored steps");
  return steps_[static_cast<std::size_t>(k)];
}

URing::URing(int n_modes, int capacity) : cols_(n_modes, capacity) {
  if (capacity < 1) throw std::invalid_argument("URing: capacity must be >= 1");
}

void URing::push(const Eigen::VectorXd& u) {
  head_ = (head_ + 1) % cols_.cols();
  cols_.col(head_) = u;
  stored_ = std::min<int>(stored_ + 1, static_cast<int>(cols_.cols()));
}

Eigen::VectorXd URing::steps_back(int j) const {
  if (j < 0 || j >= stored_) throw std::out_of_range("URing: step out of stored window");
  const int cap = static_cast<int>(cols_.cols());
  const int idx = ((head_ - j) % cap + cap) % cap;
  return cols_.col(idx);
}

HistoryField::HistoryField(BasisPtr basis, MemoryKernel kernel, double ds)
    : basis_(std::move(basis)), kernel_(std::move(kernel)), ds_(ds) {
  if (ds <= 0.0) throw std::invalid_argument("HistoryField: ds must be positive");
  if (!kernel_.has_memory()) throw std::invalid_argument("HistoryField: kernel has no memory");

  const int m = static_cast<int>(std::ceil(kernel_.s_max() / ds - 1e-12));
  const double s_top = m * ds;
  // The grid rounds s_max up, so clamp the mass target to kappa.
  const double target = std::min(kernel_.truncated_mass(s_top), kernel_.mass());
  omega_ = trapezoid_weights([this](double s) { return kernel_.mu(s); }, m, ds, target, true);
  omega_prime_ = trapezoid_weights([this](double s) { return kernel_.mu_prime(s); }, m, ds,
                                   0.0, false);
  omega_tail_ = omega_.sum() - omega_[0];
  w_ = Eigen::MatrixXd::Zero(m + 1, basis_->modes());
}

void HistoryField::set_node(int i, const Eigen::VectorXd& coeffs) {
  if (i < 0 || i >= nodes()) throw std::out_of_range("HistoryField: node index");
  if (coeffs.size() != w_.cols()) throw std::invalid_argument("HistoryField: size mismatch");
  w_.row(i) = coeffs.transpose();
}

Eigen::VectorXd HistoryField::weighted_sum() const { return w_.transpose() * omega_; }

Eigen::VectorXd HistoryField::shifted_weighted_sum() const {
  const int m = grid_intervals();
  return w_.topRows(m).transpose() * omega_.tail(m);
}

Field HistoryField::memory_operator() const {
  Eigen::VectorXd a = weighted_sum();
  a.array() *= -basis_->eigenvalues().array();
  return Field(basis_, std::move(a));
}

double HistoryField::mu_inner(const Field& phi) const {
  if (phi.basis != basis_) throw std::invalid_argument("mu_inner: basis mismatch");
  const Eigen::VectorXd weighted =
      (basis_->eigenvalues().array() * phi.coeffs.array()).matrix();
  return omega_.dot(w_ * weighted);
}

double HistoryField::mu_inner(const HistoryField& other) const {
  if (other.nodes() != nodes() || other.w_.cols() != w_.cols())
    throw std::invalid_argument("mu_inner: grid mismatch");
  const Eigen::VectorXd per_node =
      (w_.array() * other.w_.array()).matrix() * basis_->eigenvalues();
  return omega_.dot(per_node);
}

double HistoryField::transport_pairing(const HistoryField& other) const {
  if (other.nodes() != nodes() || other.w_.cols() != w_.cols())
    throw std::invalid_argument("transport_pairing: grid mismatch");
  const int m = grid_intervals();
  const Eigen::MatrixXd diff = w_.bottomRows(m) - w_.topRows(m);
  const Eigen::VectorXd per_node =
      (diff.array() * other.w_.bottomRows(m).array()).matrix() * basis_->eigenvalues();
  return omega_.tail(m).dot(per_node) / ds_;
}

double HistoryField::mu_h10_sq() const {
  const auto& lam = basis_->eigenvalues();
  const Eigen::VectorXd per_node = (w_.array().square().matrix() * lam).eval();
  return omega_.dot(per_node);
}

double HistoryField::mu_prime_h10_sq() const {
  const auto& lam = basis_->eigenvalues();
  const Eigen::VectorXd per_node = (w_.array().square().matrix() * lam).eval();
  return omega_prime_.dot(per_node);
}

void HistoryField::advance(const Eigen::VectorXd& v_old, const Eigen::VectorXd& v_new,
                           const Eigen::VectorXd& u_new, const URing& ring, long step_new,
                           double dt) {
  if (std::abs(dt - ds_) > 1e-12 * ds_)
    throw std::invalid_argument("HistoryField::advance: scheme contract requires dt = ds");
  const int m = grid_intervals();
  const int n_modes = static_cast<int>(w_.cols());

  // Exact characteristic shift: node i inherits node i-1.
  for (int j = 0; j < n_modes; ++j) {
    double* col = w_.col(j).data();
    std::memmove(col + 1, col, static_cast<std::size_t>(m) * sizeof(double));
    col[0] = 0.0;
  }

  // Exact rewrite on the window covered by stored u values.
  const int near_top = static_cast<int>(std::min<long>(step_new, m));
  for (int i = 1; i <= near_top; ++i) {
    w_.row(i) = (u_new - ring.steps_back(i - 1)).transpose();
  }

  // Trapezoidal velocity increment on the remaining (shift-fed) region.
  if (near_top < m) {
    const Eigen::VectorXd incr = 0.5 * dt * (v_old + v_new);
    w_.bottomRows(m - near_top).rowwise() += incr.transpose();
  }
}

double HistoryField::reconstruct_check(const Trajectory& traj, double t) const {
  const auto& lam = basis_->eigenvalues();
  const Eigen::VectorXd u_now = traj.at_time(t);
  double worst = 0.0;
  for (int i = 0; i < nodes(); ++i) {
    const Eigen::VectorXd exact = u_now - traj.at_time(t - i * ds_);
    const Eigen::VectorXd diff = w_.row(i).transpose() - exact;
    const double h10 = std::sqrt((lam.array() * diff.array().square()).sum());
    worst = std::max(worst, h10);
  }
  return worst;
}

void HistoryField::save_snapshot(std::ostream& os) const {
  const std::uint64_t m = static_cast<std::uint64_t>(grid_intervals());
  const std::uint64_t n = static_cast<std::uint64_t>(w_.cols());
  os.write(reinterpret_cast<const char*>(&m), sizeof(m));
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&ds_), sizeof(ds_));
  for (int i = 0; i < nodes(); ++i) {
    const double s = i * ds_;
    os.write(reinterpret_cast<const char*>(&s), sizeof(s));
  }
  os.write(reinterpret_cast<const char*>(omega_.data()),
           static_cast<std::streamsize>(sizeof(double)) * omega_.size());
  for (int i = 0; i < nodes(); ++i) {
    for (int j = 0; j < w_.cols(); ++j) {
      const double v = w_(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

HistoryField HistoryField::load_snapshot(std::istream& is, BasisPtr basis, MemoryKernel kernel) {
  std::uint64_t m = 0, n = 0;
  double ds = 0.0;
  is.read(reinterpret_cast<char*>(&m), sizeof(m));
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&ds), sizeof(ds));
  if (!is) throw std::runtime_error("HistoryField: truncated snapshot header");
  if (static_cast<int>(n) != basis->modes())
    throw std::invalid_argument("HistoryField: snapshot mode count does not match basis");

  HistoryField h(std::move(basis), std::move(kernel), ds);
  if (h.grid_intervals() != static_cast<int>(m))
    throw std::invalid_argument("HistoryField: snapshot grid does not match kernel horizon");

  std::vector<double> skip(m + 1);
  is.read(reinterpret_cast<char*>(skip.data()),
          static_cast<std::streamsize>(sizeof(double)) * static_cast<std::streamsize>(m + 1));
  is.read(reinterpret_cast<char*>(skip.data()),
          static_cast<std::streamsize>(sizeof(double)) * static_cast<std::streamsize>(m + 1));
  for (std::uint64_t i = 0; i <= m; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      double v = 0.0;
      is.read(reinterpret_cast<char*>(&v), sizeof(v));
      h.w_(static_cast<int>(i), static_cast<int>(j)) = v;
    }
  }
  if (!is) throw std::runtime_error("HistoryField: truncated snapshot payload");
  return h;
}

InitialState init_history(const PastHistory& past, const MemoryKernel& kernel, double ds) {
  const BasisPtr& basis = past.basis();
  HistoryField w(basis, kernel, ds);
  const Eigen::VectorXd u0 = past.eval(0.0);
  for (int i = 0; i < w.nodes(); ++i) {
    w.set_node(i, u0 - past.eval(-i * w.ds()));
  }
  return InitialState{Field(basis, u0), Field(basis, past.eval_dt(0.0)), std::move(w)};
}

ConvolutionValue direct_convolution_oracle(const Trajectory& traj, const MemoryKernel& kernel,
                                           const BasisPtr& basis, double t, double ds) {
  if (!kernel.has_memory()) {
    return {Field::zero(basis), Field::zero(basis)};
  }
  const int m = static_cast<int>(std::ceil(kernel.s_max() / ds - 1e-12));
  const Eigen::VectorXd omega =
      trapezoid_weights([&kernel](double s) { return kernel.mu(s); }, m, ds,
                        std::min(kernel.truncated_mass(m * ds), kernel.mass()), true);
  const Eigen::VectorXd u_now = traj.at_time(t);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(basis->modes());
  for (int i = 0; i <= m; ++i) {
    acc += omega[i] * (u_now - traj.at_time(t - i * ds));
  }
  Eigen::VectorXd lw = acc;
  lw.array() *= -basis->eigenvalues().array();
  return {Field(basis, std::move(acc)), Field(basis, std::move(lw))};
}

PronyConvolution::PronyConvolution(const MemoryKernel& kernel, const BasisPtr& basis,
                                   const PastHistory& past, double ds)
    : kernel_(&kernel), basis_(basis) {
  if (kernel.family() != MemoryKernel::Family::PronySum)
    throw std::invalid_argument("PronyConvolution: prony kernels only");
  const int m = static_cast<int>(std::ceil(kernel.s_max() / ds - 1e-12));
  const auto& theta = kernel.prony_rates();
  branches_.resize(static_cast<std::size_t>(theta.size()));
  // J_k(0) = int_0^inf e^{-theta_k s} u0(-s) ds, trapezoid over [0, M ds].
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(basis_->modes());
    for (int i = 0; i <= m; ++i) {
      const double s = i * ds;
      const double wq = ((i == 0 || i == m) ? 0.5 : 1.0) * ds;
      acc += wq * std::exp(-theta[k] * s) * past.eval(-s);
    }
    branches_[static_cast<std::size_t>(k)] = std::move(acc);
  }
}

void PronyConvolution::step(const Eigen::VectorXd& u_old, const Eigen::VectorXd& u_new,
                            double dt) {
  const auto& theta = kernel_->prony_rates();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double th = theta[k];
    const double decay = std::exp(-th * dt);
    // Exponential trapezoid: exact for u linear on the step.
    const double beta = 1.0 / th - (1.0 - decay) / (th * th * dt);
    const double alpha = (1.0 - decay) / th - beta;
    auto& J = branches_[static_cast<std::size_t>(k)];
    J = decay * J + alpha * u_old + beta * u_new;
  }
}

ConvolutionValue PronyConvolution::value(const Eigen::VectorXd& u_now) const {
  const auto& c = kernel_->prony_amplitudes();
  const auto& theta = kernel_->prony_rates();
  Eigen::VectorXd acc = kernel_->mass() * u_now;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    acc -= c[k] * branches_[static_cast<std::size_t>(k)];
  }
  Eigen::VectorXd lw = acc;
  lw.array() *= -basis_->eigenvalues().array();
  return {Field(basis_, std::move(acc)), Field(basis_, std::move(lw))};
}

}  // namespace visco
