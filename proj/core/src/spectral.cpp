#include "visco/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace visco {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::shared_ptr<const SpectralBasis> SpectralBasis::interval(double length, int modes,
                                                             int quad_factor) {
  if (modes < 1) throw std::invalid_argument("SpectralBasis: modes must be >= 1");
  if (length <= 0.0) throw std::invalid_argument("SpectralBasis: nonpositive extent");
  if (quad_factor < 2) throw std::invalid_argument("SpectralBasis: quad_factor must be >= 2");

  auto basis = std::shared_ptr<SpectralBasis>(new SpectralBasis());
  basis->dim_ = 1;
  basis->measure_ = length;

  const int nq = quad_factor * modes;  // interior points
  const double h = length / (nq + 1);

  basis->lambda_.resize(modes);
  for (int j = 1; j <= modes; ++j) {
    const double k = j * kPi / length;
    basis->lambda_[j - 1] = k * k;
  }

  basis->quad_w_ = Eigen::VectorXd::Constant(nq, h);
  basis->eval_.resize(nq, modes);
  const double amp = std::sqrt(2.0 / length);
  for (int q = 0; q < nq; ++q) {
    const double x = (q + 1) * h;
    for (int j = 1; j <= modes; ++j) {
      basis->eval_(q, j - 1) = amp * std::sin(j * kPi * x / length);
    }
  }
  basis->eval_w_ = basis->quad_w_.asDiagonal() * basis->eval_;
  return basis;
}

std::shared_ptr<const SpectralBasis> SpectralBasis::rectangle(double lx, double ly,
                                                              int modes_per_axis,
                                                              int quad_factor) {
  if (modes_per_axis < 1) throw std::invalid_argument("SpectralBasis: modes must be >= 1");
  if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("SpectralBasis: nonpositive extent");
  if (quad_factor < 2) throw std::invalid_argument("SpectralBasis: quad_factor must be >= 2");

  auto basis = std::shared_ptr<SpectralBasis>(new SpectralBasis());
  basis->dim_ = 2;
  basis->measure_ = lx * ly;

  const int n = modes_per_axis;
  struct ModePair {
    int jx, jy;
    double lambda;
  };
  std::vector<ModePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  for (int jx = 1; jx <= n; ++jx) {
    for (int jy = 1; jy <= n; ++jy) {
      const double kx = jx * kPi / lx, ky = jy * kPi / ly;
      pairs.push_back({jx, jy, kx * kx + ky * ky});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const ModePair& a, const ModePair& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.jx != b.jx) return a.jx < b.jx;
    return a.jy < b.jy;
  });

  const int nqa = quad_factor * n;  // interior points per axis
  const double hx = lx / (nqa + 1), hy = ly / (nqa + 1);
  const int nq = nqa * nqa;
  const int nm = n * n;

  basis->lambda_.resize(nm);
  for (int m = 0; m < nm; ++m) basis->lambda_[m] = pairs[m].lambda;

  basis->quad_w_ = Eigen::VectorXd::Constant(nq, hx * hy);
  basis->eval_.resize(nq, nm);
  const double amp = 2.0 / std::sqrt(lx * ly);
  for (int qy = 0; qy < nqa; ++qy) {
    const double y = (qy + 1) * hy;
    for (int qx = 0; qx < nqa; ++qx) {
      const double x = (qx + 1) * hx;
      const int q = qy * nqa + qx;
      for (int m = 0; m < nm; ++m) {
        basis->eval_(q, m) = amp * std::sin(pairs[m].jx * kPi * x / lx) *
                             std::sin(pairs[m].jy * kPi * y / ly);
      }
    }
  }
  basis->eval_w_ = basis->quad_w_.asDiagonal() * basis->eval_;
  return basis;
}

Eigen::VectorXd SpectralBasis::to_nodal(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != lambda_.size())
    throw std::invalid_argument("to_nodal: coefficient/basis size mismatch");
  return eval_ * coeffs;
}

Eigen::VectorXd SpectralBasis::to_coeffs(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != quad_w_.size())
    throw std::invalid_argument("to_coeffs: nodal/grid size mismatch");
  return eval_w_.transpose() * nodal;
}

double SpectralBasis::integrate(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != quad_w_.size())
    throw std::invalid_argument("integrate: nodal/grid size mismatch");
  return quad_w_.dot(nodal);
}

double SpectralBasis::lp_norm_nodal(const Eigen::VectorXd& nodal, double q) const {
  if (q < 1.0) throw std::invalid_argument("lp_norm: q must be >= 1");
  if (nodal.size() != quad_w_.size())
    throw std::invalid_argument("lp_norm: nodal/grid size mismatch");
  const double s = quad_w_.dot(nodal.array().abs().pow(q).matrix());
  return std::pow(s, 1.0 / q);
}

Field::Field(BasisPtr b, Eigen::VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {
  if (!basis) throw std::invalid_argument("Field: null basis");
  if (coeffs.size() != basis->modes())
    throw std::invalid_argument("Field: coefficient length does not match basis");
}

Field Field::zero(BasisPtr b) {
  const int n = b->modes();
  return Field(std::move(b), Eigen::VectorXd::Zero(n));
}

Field Field::mode(BasisPtr b, int j, double amplitude) {
  if (j < 1 || j > b->modes()) throw std::invalid_argument("Field::mode: index out of range");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b->modes());
  c[j - 1] = amplitude;
  return Field(std::move(b), std::move(c));
}

double Field::norm(Norm which) const {
  const auto& lam = basis->eigenvalues();
  switch (which) {
    case Norm::L2:
      return coeffs.norm();
    case Norm::H10:
      return std::sqrt((lam.array() * coeffs.array().square()).sum());
    case Norm::Hneg1:
      return std::sqrt((coeffs.array().square() / lam.array()).sum());
  }
  throw std::logic_error("unreachable");
}

double Field::lp_norm(double q) const { return basis->lp_norm_nodal(nodal(), q); }

double inner(const Field& a, const Field& b) {
  if (a.basis != b.basis) throw std::invalid_argument("inner: basis mismatch");
  return a.coeffs.dot(b.coeffs);
}

double inner_h10(const Field& a, const Field& b) {
  if (a.basis != b.basis) throw std::invalid_argument("inner_h10: basis mismatch");
  return (a.basis->eigenvalues().array() * a.coeffs.array() * b.coeffs.array()).sum();
}

Field regularize(const Field& u, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("regularize: epsilon must be >= 0");
  Field out = u;
  out.coeffs.array() /= (1.0 + epsilon * u.basis->eigenvalues().array());
  return out;
}

}  // namespace visco
