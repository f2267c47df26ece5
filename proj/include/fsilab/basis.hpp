#pragma once

/// @file basis.hpp
/// @brief Divergence-free Galerkin fields on the flat box Gamma x (-H, 0), interface_dim 1.
///
/// Every field is w = (d_z psi, -d_y psi) for a stream function psi(y, z) = T(y) P(zeta),
/// zeta = (z + H) / H, so div w = 0 holds identically.
///   lifts:     P = 3 zeta^2 - 2 zeta^3, trace w_z(y, 0) = cos(k y) or sin(k y), k >= 1
///   interior:  P = zeta^2 (1 - zeta)^2 Leg_m(2 zeta - 1), T in {1, cos(k y), sin(k y)}
/// Both vanish with their first derivative at the rigid bottom, and interior fields also
/// vanish on the moving top face.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "fsilab/geometry.hpp"
#include "fsilab/spectral.hpp"

namespace fsilab {

struct FieldSample {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  Eigen::Matrix2d Dw = Eigen::Matrix2d::Zero();  ///< Dw(r, c) = d w_r / d x_c, x = (y, z)
};

class StreamMode {
 public:
  enum class Kind { Lift, Interior };
  enum class Phase { Const, Cos, Sin };

  StreamMode(Kind kind, int k, Phase phase, int m, double box_height);

  Kind kind() const { return kind_; }
  bool is_lift() const { return kind_ == Kind::Lift; }
  int wavenumber() const { return k_; }
  Phase phase() const { return phase_; }
  int degree() const { return m_; }
  std::string label() const;

  /// Stream function and its derivatives: d^a/dy^a d^b/dz^b psi.
  double psi(double y, double z, int a = 0, int b = 0) const;
  FieldSample sample(double y, double z) const;
  geometry::Vec value(const geometry::Vec& X) const;
  /// Scalar trace w(y) = w_z(y, 0); zero for interior fields.
  double trace(double y) const;
  Displacement trace_field(int band) const;

 private:
  double T(double y, int order) const;
  double P(double zeta, int order) const;

  Kind kind_;
  int k_;
  Phase phase_;
  int m_;
  double H_;
  std::vector<double> poly_;  ///< monomial coefficients of P in zeta
};

class GalerkinBasis {
 public:
  GalerkinBasis(ReferenceGeometry geom, std::vector<StreamMode> modes);

  int size() const { return int(modes_.size()); }
  const StreamMode& mode(int i) const { return modes_[i]; }
  const std::vector<StreamMode>& modes() const { return modes_; }
  const ReferenceGeometry& geometry() const { return geom_; }
  /// Traces w_i as fields of the geometry's band.
  const std::vector<Displacement>& traces() const { return traces_; }
  /// sum_i c_i w_i on Gamma.
  Displacement trace_of(const Eigen::VectorXd& c) const;
  /// Coefficients c with trace_of(c) equal to the Fourier truncation of f onto the lift traces.
  Eigen::VectorXd lift_coefficients(const Displacement& f) const;
  /// sum_i c_i w_i at a reference point.
  geometry::Vec field(const Eigen::VectorXd& c, const geometry::Vec& X) const;

 private:
  ReferenceGeometry geom_;
  std::vector<StreamMode> modes_;
  std::vector<Displacement> traces_;
};

/// First N fields in the interleaved order: 0-based even slots are lifts
/// (cos 1, sin 1, cos 2, ...), odd slots interior fields ordered by k + m, then k, cos before sin.
std::vector<StreamMode> enumerate_modes(double box_height, int N);

/// Requires the flat box with interface_dim 1, N >= 2 even, and lift wavenumbers within the band.
GalerkinBasis build_basis(const ReferenceGeometry& geom, int N);

}  // namespace fsilab
