#pragma once

/// @file geometry.hpp
/// @brief Reference domain, deformed boundary, Hanzawa and Piola transforms, quadrature.
///
/// Points near the boundary are written in collar coordinates x = phi(y) + s n(y)
/// with s < 0 inside the fluid.  The Hanzawa map moves such points along the
/// normal line by eta(y) * cutoff(s) and leaves everything with |s| >= L fixed.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fsilab/spectral.hpp"

namespace fsilab {

namespace geometry {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using VectorField = std::function<Vec(const Vec&)>;
using ScalarField = std::function<double(const Vec&)>;

Vec make_vec(std::initializer_list<double> values);

struct CollarCoords {
  Vec y;
  double s = 0.0;
};

/// Parametrization of the reference boundary by the periodic interface.
class BoundaryChart {
 public:
  virtual ~BoundaryChart() = default;
  virtual int interface_dim() const = 0;
  int fluid_dim() const { return interface_dim() + 1; }
  virtual Vec point(const Vec& y) const = 0;
  /// fluid_dim x interface_dim, columns d phi / d y_i.
  virtual Mat tangents(const Vec& y) const = 0;
  virtual Vec normal(const Vec& y) const = 0;
  /// fluid_dim x interface_dim, columns d n / d y_i.
  virtual Mat normal_derivatives(const Vec& y) const = 0;
  /// (y, s) with x = point(y) + s normal(y); empty where the chart has no collar.
  virtual std::optional<CollarCoords> collar(const Vec& x) const = 0;
  /// Largest |s| for which collar coordinates are unique.
  virtual double reach() const = 0;
  virtual bool is_flat() const { return false; }
};

/// phi(y) = (y, 0), n = e_last.
class FlatChart final : public BoundaryChart {
 public:
  explicit FlatChart(int interface_dim) : dim_(interface_dim) {}
  int interface_dim() const override { return dim_; }
  Vec point(const Vec& y) const override;
  Mat tangents(const Vec& y) const override;
  Vec normal(const Vec& y) const override;
  Mat normal_derivatives(const Vec& y) const override;
  std::optional<CollarCoords> collar(const Vec& x) const override;
  double reach() const override;
  bool is_flat() const override { return true; }

 private:
  int dim_;
};

/// Circle of radius R bounding a disk (interface_dim 1).
class CircleChart final : public BoundaryChart {
 public:
  explicit CircleChart(double radius) : radius_(radius) {}
  int interface_dim() const override { return 1; }
  Vec point(const Vec& y) const override;
  Mat tangents(const Vec& y) const override;
  Vec normal(const Vec& y) const override;
  Mat normal_derivatives(const Vec& y) const override;
  std::optional<CollarCoords> collar(const Vec& x) const override;
  double reach() const override { return radius_; }

 private:
  double radius_;
};

/// Torus of revolution, major radius R, tube radius r (interface_dim 2).
class TorusChart final : public BoundaryChart {
 public:
  TorusChart(double major, double minor) : major_(major), minor_(minor) {}
  int interface_dim() const override { return 2; }
  Vec point(const Vec& y) const override;
  Mat tangents(const Vec& y) const override;
  Vec normal(const Vec& y) const override;
  Mat normal_derivatives(const Vec& y) const override;
  std::optional<CollarCoords> collar(const Vec& x) const override;
  double reach() const override { return minor_; }

 private:
  double major_;
  double minor_;
};

/// Quintic smoothstep: 1 for s >= -L/4, 0 for s <= -3L/4.
class Cutoff {
 public:
  explicit Cutoff(double L = 1.0) : L_(L) {}
  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;
  double L() const { return L_; }
  /// Breakpoints -3L/4 and -L/4 where the polynomial pieces meet.
  double lower() const { return -0.75 * L_; }
  double upper() const { return -0.25 * L_; }

 private:
  double L_;
};

struct QuadratureOptions {
  int gauss_order = 8;        ///< Gauss-Legendre points per panel in the normal direction
  int trapezoid_points = 0;   ///< points per interface direction; 0 means 4 * band
};

class ReferenceGeometry {
 public:
  /// Plate over a box: Gamma x (-H, 0), top face moves, sides periodic, bottom rigid.
  static ReferenceGeometry flat_box(int interface_dim, double box_height, double L, int band,
                                    QuadratureOptions quad = {});
  static ReferenceGeometry curved(std::shared_ptr<const BoundaryChart> chart, double L, int band,
                                  QuadratureOptions quad = {});

  const BoundaryChart& chart() const { return *chart_; }
  int interface_dim() const { return chart_->interface_dim(); }
  int fluid_dim() const { return chart_->fluid_dim(); }
  bool flat_box() const { return chart_->is_flat(); }
  double L() const { return L_; }
  double margin_factor() const { return margin_factor_; }
  void set_margin_factor(double f);
  /// L_margin = margin_factor * L (0.95 by default).
  double margin() const { return margin_factor_ * L_; }
  double box_height() const { return box_height_; }
  const Cutoff& cutoff() const { return cutoff_; }
  int band() const { return band_; }
  const QuadratureOptions& quadrature() const { return quad_; }
  int trapezoid_points() const;

 private:
  std::shared_ptr<const BoundaryChart> chart_;
  double L_ = 1.0;
  double margin_factor_ = 0.95;
  double box_height_ = 0.0;
  int band_ = 0;
  Cutoff cutoff_;
  QuadratureOptions quad_;
};

struct Jacobian {
  Mat F;
  double det = 1.0;
};

/// A reference geometry with a fixed displacement, validated once on construction.
class Deformation {
 public:
  /// Throws DisplacementTooLarge when |eta|_inf >= L_margin.
  Deformation(const ReferenceGeometry& geom, Displacement eta);

  const ReferenceGeometry& geometry() const { return geom_; }
  const Displacement& eta() const { return eta_; }
  double sup_norm() const { return sup_; }

  Vec boundary_point(const Vec& y) const;               ///< phi_eta(y)
  Mat boundary_tangents(const Vec& y) const;
  Vec normal(const Vec& y) const;                       ///< unit outward normal of the deformed surface
  double surface_element(const Vec& y) const;           ///< |det grad phi_eta|
  Vec map(const Vec& x) const;                          ///< Psi_eta(x)
  Jacobian gradient(const Vec& x) const;                ///< grad Psi_eta(x)
  Vec inverse(const Vec& x) const;                      ///< Psi_eta^{-1}(x)
  double iota(const Vec& y) const;                      ///< 1 / det grad Psi_eta at phi(y)
  VectorField piola(VectorField v) const;               ///< field on O_eta
  VectorField piola_inverse(VectorField v) const;       ///< field on O
  double integrate(const ScalarField& f) const;         ///< int over O_eta, flat box only

 private:
  double eta_at(const Vec& y, WaveVector order = {0, 0}) const;

  ReferenceGeometry geom_;
  Displacement eta_;
  double sup_ = 0.0;
};

// Free-function forms of the Deformation methods.
Vec deformed_boundary_point(const ReferenceGeometry& g, const Displacement& eta, const Vec& y);
Vec deformed_normal(const ReferenceGeometry& g, const Displacement& eta, const Vec& y);
Vec hanzawa_map(const ReferenceGeometry& g, const Displacement& eta, const Vec& x);
Jacobian hanzawa_gradient(const ReferenceGeometry& g, const Displacement& eta, const Vec& x);
Vec hanzawa_inverse(const ReferenceGeometry& g, const Displacement& eta, const Vec& x);
double iota_factor(const ReferenceGeometry& g, const Displacement& zeta, const Vec& y);
VectorField piola_transform(const ReferenceGeometry& g, const Displacement& zeta, VectorField v);
VectorField piola_inverse(const ReferenceGeometry& g, const Displacement& zeta, VectorField v);
double moving_domain_integral(const ReferenceGeometry& g, const Displacement& zeta, const ScalarField& f);

/// Nodes and weights of n-point Gauss-Legendre on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

struct QuadratureNode {
  Vec X;
  double weight = 0.0;
};

/// Normal-direction nodes for the flat box: composite Gauss-Legendre on panels whose
/// ends are the cutoff breakpoints, so every panel integrand is smooth.
void box_depth_rule(const ReferenceGeometry& g, std::vector<double>& z, std::vector<double>& w);
/// Tensor rule on the reference box: trapezoid along Gamma x box_depth_rule.
std::vector<QuadratureNode> box_quadrature(const ReferenceGeometry& g);
/// Trapezoid nodes on Gamma (weight (2pi/n)^d each).
std::vector<QuadratureNode> interface_quadrature(const ReferenceGeometry& g);

}  // namespace geometry

using geometry::Deformation;
using geometry::ReferenceGeometry;

}  // namespace fsilab
