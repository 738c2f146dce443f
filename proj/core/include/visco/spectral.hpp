#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <vector>

namespace visco {

/// Norms evaluable spectrally on a Field.
enum class Norm { L2, H10, Hneg1 };

/// Dirichlet-Laplacian eigenbasis on an interval (0,L) or a rectangle
/// (0,L1)x(0,L2), together with a uniform interior quadrature grid used
/// for nodal evaluation of nonlinear terms.
///
/// Eigenpairs are exact sine modes. The quadrature rule is the interior
/// rectangle rule, which integrates products of any two retained modes
/// exactly (discrete sine-transform orthogonality), so the basis is
/// discretely orthonormal to round-off.
class SpectralBasis {
public:
  /// Interval (0, length) with `modes` sine modes. The quadrature grid has
  /// quad_factor * modes interior points; quad_factor >= 2 keeps mode
  /// products exactly integrable, larger values de-alias power
  /// nonlinearities.
  static std::shared_ptr<const SpectralBasis> interval(double length, int modes,
                                                       int quad_factor = 2);

  /// Rectangle (0,lx)x(0,ly) with modes_per_axis modes per axis; modes are
  /// sorted by eigenvalue (ties broken lexicographically in (jx, jy)).
  static std::shared_ptr<const SpectralBasis> rectangle(double lx, double ly,
                                                        int modes_per_axis,
                                                        int quad_factor = 2);

  int modes() const { return static_cast<int>(lambda_.size()); }
  int nodes() const { return static_cast<int>(quad_w_.size()); }
  int dimension() const { return dim_; }
  double measure() const { return measure_; }

  /// Eigenvalues of -Laplacian, strictly positive, sorted ascending.
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::VectorXd& quad_weights() const { return quad_w_; }

  /// Nodal values of the expansion with the given coefficients.
  Eigen::VectorXd to_nodal(const Eigen::VectorXd& coeffs) const;
  /// Quadrature projection of nodal values onto the retained modes.
  /// Exact inverse of to_nodal for band-limited data.
  Eigen::VectorXd to_coeffs(const Eigen::VectorXd& nodal) const;

  /// Integral of a nodal function over the domain.
  double integrate(const Eigen::VectorXd& nodal) const;

  /// Quadrature L^q norm of a nodal function, 1 <= q < infinity.
  double lp_norm_nodal(const Eigen::VectorXd& nodal, double q) const;

private:
  SpectralBasis() = default;

  int dim_ = 1;
  double measure_ = 0.0;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd eval_;    // nodes x modes
  Eigen::MatrixXd eval_w_;  // quad_w.asDiagonal() * eval_
  Eigen::VectorXd quad_w_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

/// A function on the domain stored as coefficients over the eigenbasis.
struct Field {
  BasisPtr basis;
  Eigen::VectorXd coeffs;

  Field() = default;
  Field(BasisPtr b, Eigen::VectorXd c);

  static Field zero(BasisPtr b);
  /// Single eigenmode e_j (1-based index into the sorted mode list).
  static Field mode(BasisPtr b, int j, double amplitude = 1.0);

  double norm(Norm which) const;
  /// L^q norm by nodal quadrature.
  double lp_norm(double q) const;

  Eigen::VectorXd nodal() const { return basis->to_nodal(coeffs); }
};

/// L^2 inner product of two fields on the same basis.
double inner(const Field& a, const Field& b);
/// H^1_0 inner product (gradients).
double inner_h10(const Field& a, const Field& b);

/// Regularizing operator T_eps = (I - eps*Laplacian)^{-1}: coefficient j is
/// scaled by 1/(1 + eps*lambda_j). Contracts every L^q norm and converges to
/// the identity as eps -> 0. eps < 0 is rejected.
Field regularize(const Field& u, double epsilon);

}  // namespace visco
