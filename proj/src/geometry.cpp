#include "fsilab/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fsilab/errors.hpp"

namespace fsilab::geometry {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNewtonTol = 1e-12;
constexpr int kNewtonMaxIter = 50;

Mat identity(int n) { return Mat::Identity(n, n); }

// d(point + s normal)/d(y, s)
Mat collar_frame(const BoundaryChart& chart, const Vec& y, double s) {
  const int d = chart.interface_dim();
  Mat M(d + 1, d + 1);
  M.leftCols(d) = chart.tangents(y) + s * chart.normal_derivatives(y);
  M.col(d) = chart.normal(y);
  return M;
}

}  // namespace

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// ---- charts ----------------------------------------------------------------

Vec FlatChart::point(const Vec& y) const {
  Vec p = Vec::Zero(dim_ + 1);
  p.head(dim_) = y.head(dim_);
  return p;
}

Mat FlatChart::tangents(const Vec&) const {
  Mat T = Mat::Zero(dim_ + 1, dim_);
  T.topRows(dim_) = Mat::Identity(dim_, dim_);
  return T;
}

Vec FlatChart::normal(const Vec&) const {
  Vec n = Vec::Zero(dim_ + 1);
  n(dim_) = 1.0;
  return n;
}

Mat FlatChart::normal_derivatives(const Vec&) const { return Mat::Zero(dim_ + 1, dim_); }

std::optional<CollarCoords> FlatChart::collar(const Vec& x) const {
  CollarCoords c;
  c.y = x.head(dim_);
  c.s = x(dim_);
  return c;
}

double FlatChart::reach() const { return std::numeric_limits<double>::infinity(); }

Vec CircleChart::point(const Vec& y) const { return make_vec({radius_ * std::cos(y(0)), radius_ * std::sin(y(0))}); }

Mat CircleChart::tangents(const Vec& y) const {
  Mat T(2, 1);
  T << -radius_ * std::sin(y(0)), radius_ * std::cos(y(0));
  return T;
}

Vec CircleChart::normal(const Vec& y) const { return make_vec({std::cos(y(0)), std::sin(y(0))}); }

Mat CircleChart::normal_derivatives(const Vec& y) const {
  Mat D(2, 1);
  D << -std::sin(y(0)), std::cos(y(0));
  return D;
}

std::optional<CollarCoords> CircleChart::collar(const Vec& x) const {
  double r = std::hypot(x(0), x(1));
  if (r == 0.0) return std::nullopt;
  CollarCoords c;
  c.y = make_vec({std::atan2(x(1), x(0))});
  c.s = r - radius_;
  return c;
}

Vec TorusChart::point(const Vec& y) const {
  double rho = major_ + minor_ * std::cos(y(1));
  return make_vec({rho * std::cos(y(0)), rho * std::sin(y(0)), minor_ * std::sin(y(1))});
}

Mat TorusChart::tangents(const Vec& y) const {
  double rho = major_ + minor_ * std::cos(y(1));
  Mat T(3, 2);
  T << -rho * std::sin(y(0)), -minor_ * std::sin(y(1)) * std::cos(y(0)),
       rho * std::cos(y(0)), -minor_ * std::sin(y(1)) * std::sin(y(0)),
       0.0, minor_ * std::cos(y(1));
  return T;
}

Vec TorusChart::normal(const Vec& y) const {
  return make_vec({std::cos(y(1)) * std::cos(y(0)), std::cos(y(1)) * std::sin(y(0)), std::sin(y(1))});
}

Mat TorusChart::normal_derivatives(const Vec& y) const {
  Mat D(3, 2);
  D << -std::cos(y(1)) * std::sin(y(0)), -std::sin(y(1)) * std::cos(y(0)),
       std::cos(y(1)) * std::cos(y(0)), -std::sin(y(1)) * std::sin(y(0)),
       0.0, std::cos(y(1));
  return D;
}

std::optional<CollarCoords> TorusChart::collar(const Vec& x) const {
  double planar = std::hypot(x(0), x(1));
  if (planar == 0.0) return std::nullopt;
  double rho = planar - major_;
  double dist = std::hypot(rho, x(2));
  if (dist == 0.0) return std::nullopt;
  CollarCoords c;
  c.y = make_vec({std::atan2(x(1), x(0)), std::atan2(x(2), rho)});
  c.s = dist - minor_;
  return c;
}

// ---- cutoff ----------------------------------------------------------------

double Cutoff::value(double s) const {
  if (s >= upper()) return 1.0;
  if (s <= lower()) return 0.0;
  double t = (s - lower()) / (upper() - lower());
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double Cutoff::d1(double s) const {
  if (s >= upper() || s <= lower()) return 0.0;
  double w = upper() - lower();
  double t = (s - lower()) / w;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
}

double Cutoff::d2(double s) const {
  if (s >= upper() || s <= lower()) return 0.0;
  double w = upper() - lower();
  double t = (s - lower()) / w;
  return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
}

// ---- reference geometry ----------------------------------------------------

ReferenceGeometry ReferenceGeometry::flat_box(int interface_dim, double box_height, double L, int band,
                                              QuadratureOptions quad) {
  if (interface_dim != 1 && interface_dim != 2) throw ValidationError("interface_dim must be 1 or 2");
  if (!(L > 0.0)) throw ValidationError("tubular half width L must be positive");
  if (!(box_height >= L)) throw ValidationError("box height must be at least L so the bottom stays rigid");
  if (band < 0) throw ValidationError("band limit must be non-negative");
  if (quad.gauss_order < 1) throw ValidationError("gauss order must be positive");
  ReferenceGeometry g;
  g.chart_ = std::make_shared<FlatChart>(interface_dim);
  g.L_ = L;
  g.box_height_ = box_height;
  g.band_ = band;
  g.cutoff_ = Cutoff(L);
  g.quad_ = quad;
  return g;
}

ReferenceGeometry ReferenceGeometry::curved(std::shared_ptr<const BoundaryChart> chart, double L, int band,
                                            QuadratureOptions quad) {
  if (!chart) throw ValidationError("missing boundary chart");
  if (!(L > 0.0) || !(L < chart->reach())) throw ValidationError("L must lie in (0, reach of the chart)");
  ReferenceGeometry g;
  g.chart_ = std::move(chart);
  g.L_ = L;
  g.band_ = band;
  g.cutoff_ = Cutoff(L);
  g.quad_ = quad;
  return g;
}

void ReferenceGeometry::set_margin_factor(double f) {
  if (!(f > 0.0 && f <= 1.0)) throw ValidationError("margin factor must lie in (0, 1]");
  margin_factor_ = f;
}

int ReferenceGeometry::trapezoid_points() const {
  if (quad_.trapezoid_points > 0) return quad_.trapezoid_points;
  return std::max(8, 4 * band_);
}

// ---- deformation -----------------------------------------------------------

Deformation::Deformation(const ReferenceGeometry& geom, Displacement eta) : geom_(geom), eta_(std::move(eta)) {
  if (eta_.empty()) eta_ = Displacement(geom_.interface_dim(), 0);
  if (eta_.dim() != geom_.interface_dim()) throw std::invalid_argument("displacement dimension mismatch");
  sup_ = eta_.sup_norm();
  if (sup_ >= geom_.margin())
    throw DisplacementTooLarge("|eta|_inf = " + std::to_string(sup_) + " >= L_margin = " +
                               std::to_string(geom_.margin()));
}

double Deformation::eta_at(const Vec& y, WaveVector order) const { return eta_.evaluate(y.data(), order); }

Vec Deformation::boundary_point(const Vec& y) const {
  const auto& chart = geom_.chart();
  return chart.point(y) + eta_at(y) * chart.normal(y);
}

Mat Deformation::boundary_tangents(const Vec& y) const {
  const auto& chart = geom_.chart();
  const int d = chart.interface_dim();
  Mat T = chart.tangents(y) + eta_at(y) * chart.normal_derivatives(y);
  Vec n = chart.normal(y);
  for (int i = 0; i < d; ++i) {
    WaveVector order{0, 0};
    order[i] = 1;
    T.col(i) += eta_at(y, order) * n;
  }
  return T;
}

Vec Deformation::normal(const Vec& y) const {
  Mat T = boundary_tangents(y);
  Vec cand;
  double scale;
  if (geom_.interface_dim() == 1) {
    cand = make_vec({T(1, 0), -T(0, 0)});
    scale = T.col(0).norm();
  } else {
    Eigen::Vector3d a = T.col(0), b = T.col(1);
    Eigen::Vector3d c = a.cross(b);
    cand = make_vec({c(0), c(1), c(2)});
    scale = a.norm() * b.norm();
  }
  double len = cand.norm();
  if (!(len > 1e-12 * std::max(scale, 1e-300))) throw DegenerateTangent("tangent vectors of phi_eta are degenerate");
  cand /= len;
  if (cand.dot(geom_.chart().normal(y)) < 0.0) cand = -cand;
  return cand;
}

double Deformation::surface_element(const Vec& y) const {
  Mat T = boundary_tangents(y);
  if (geom_.interface_dim() == 1) return T.col(0).norm();
  Eigen::Vector3d a = T.col(0), b = T.col(1);
  return a.cross(b).norm();
}

Vec Deformation::map(const Vec& x) const {
  const auto& chart = geom_.chart();
  auto c = chart.collar(x);
  if (!c || std::abs(c->s) >= geom_.L()) return x;
  double shifted = c->s + eta_at(c->y) * geom_.cutoff().value(c->s);
  if (chart.is_flat()) {
    Vec out = x;
    out(chart.interface_dim()) = shifted;
    return out;
  }
  return chart.point(c->y) + shifted * chart.normal(c->y);
}

Jacobian Deformation::gradient(const Vec& x) const {
  const auto& chart = geom_.chart();
  const int d = chart.interface_dim();
  Jacobian J;
  auto c = chart.collar(x);
  if (!c || std::abs(c->s) >= geom_.L()) {
    J.F = identity(d + 1);
    J.det = 1.0;
    return J;
  }
  const auto& cut = geom_.cutoff();
  double eta = eta_at(c->y);
  Mat A = identity(d + 1);
  for (int i = 0; i < d; ++i) {
    WaveVector order{0, 0};
    order[i] = 1;
    A(d, i) = eta_at(c->y, order) * cut.value(c->s);
  }
  A(d, d) = 1.0 + eta * cut.d1(c->s);
  if (chart.is_flat()) {
    J.F = A;
    J.det = A(d, d);
  } else {
    double shifted = c->s + eta * cut.value(c->s);
    Mat M0 = collar_frame(chart, c->y, c->s);
    Mat M1 = collar_frame(chart, c->y, shifted);
    J.F = M1 * A * M0.inverse();
    J.det = J.F.determinant();
  }
  if (!(J.det > 0.0)) throw OrientationLost("det grad Psi = " + std::to_string(J.det) + " <= 0");
  return J;
}

Vec Deformation::inverse(const Vec& x) const {
  const auto& chart = geom_.chart();
  auto c = chart.collar(x);
  if (!c || std::abs(c->s) >= geom_.L()) return x;
  const auto& cut = geom_.cutoff();
  const double target = c->s;
  const double eta = eta_at(c->y);
  double s = target - eta * cut.value(target);  // Psi_{-eta}
  bool exact = cut.value(target) == 1.0 && cut.value(s) == 1.0;
  if (!exact) {
    int it = 0;
    for (;; ++it) {
      double g = s + eta * cut.value(s) - target;
      if (std::abs(g) <= kNewtonTol) break;
      if (it >= kNewtonMaxIter) throw InverseMapFailure("Newton inversion of the Hanzawa map did not converge");
      double dg = 1.0 + eta * cut.d1(s);
      if (!(dg > 0.0)) throw OrientationLost("Hanzawa map folds along the normal line");
      s -= g / dg;
    }
  }
  if (chart.is_flat()) {
    Vec out = x;
    out(chart.interface_dim()) = s;
    return out;
  }
  return chart.point(c->y) + s * chart.normal(c->y);
}

double Deformation::iota(const Vec& y) const { return 1.0 / gradient(geom_.chart().point(y)).det; }

VectorField Deformation::piola(VectorField v) const {
  return [self = *this, v = std::move(v)](const Vec& x) -> Vec {
    Vec X = self.inverse(x);
    Jacobian J = self.gradient(X);
    return J.F * v(X) / J.det;
  };
}

VectorField Deformation::piola_inverse(VectorField v) const {
  return [self = *this, v = std::move(v)](const Vec& X) -> Vec {
    Jacobian J = self.gradient(X);
    return J.det * J.F.partialPivLu().solve(v(self.map(X)));
  };
}

double Deformation::integrate(const ScalarField& f) const {
  if (!geom_.flat_box()) throw std::logic_error("moving-domain quadrature is implemented for the flat box only");
  double total = 0.0;
  for (const auto& node : box_quadrature(geom_)) total += f(map(node.X)) * gradient(node.X).det * node.weight;
  return total;
}

// ---- free functions --------------------------------------------------------

Vec deformed_boundary_point(const ReferenceGeometry& g, const Displacement& eta, const Vec& y) {
  return Deformation(g, eta).boundary_point(y);
}
Vec deformed_normal(const ReferenceGeometry& g, const Displacement& eta, const Vec& y) {
  return Deformation(g, eta).normal(y);
}
Vec hanzawa_map(const ReferenceGeometry& g, const Displacement& eta, const Vec& x) {
  return Deformation(g, eta).map(x);
}
Jacobian hanzawa_gradient(const ReferenceGeometry& g, const Displacement& eta, const Vec& x) {
  return Deformation(g, eta).gradient(x);
}
Vec hanzawa_inverse(const ReferenceGeometry& g, const Displacement& eta, const Vec& x) {
  return Deformation(g, eta).inverse(x);
}
double iota_factor(const ReferenceGeometry& g, const Displacement& zeta, const Vec& y) {
  return Deformation(g, zeta).iota(y);
}
VectorField piola_transform(const ReferenceGeometry& g, const Displacement& zeta, VectorField v) {
  return Deformation(g, zeta).piola(std::move(v));
}
VectorField piola_inverse(const ReferenceGeometry& g, const Displacement& zeta, VectorField v) {
  return Deformation(g, zeta).piola_inverse(std::move(v));
}
double moving_domain_integral(const ReferenceGeometry& g, const Displacement& zeta, const ScalarField& f) {
  return Deformation(g, zeta).integrate(f);
}

// ---- quadrature ------------------------------------------------------------

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[n - 1 - i] = 0.5 * (b - a) * x + 0.5 * (a + b);
    weights[n - 1 - i] = (b - a) / ((1.0 - x * x) * dp * dp);
  }
}

void box_depth_rule(const ReferenceGeometry& g, std::vector<double>& z, std::vector<double>& w) {
  const auto& cut = g.cutoff();
  std::vector<double> edges{-g.box_height()};
  if (cut.lower() > -g.box_height()) edges.push_back(cut.lower());
  edges.push_back(cut.upper());
  edges.push_back(0.0);
  z.clear();
  w.clear();
  std::vector<double> pn, pw;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    gauss_legendre(g.quadrature().gauss_order, edges[p], edges[p + 1], pn, pw);
    z.insert(z.end(), pn.begin(), pn.end());
    w.insert(w.end(), pw.begin(), pw.end());
  }
}

std::vector<QuadratureNode> interface_quadrature(const ReferenceGeometry& g) {
  const int d = g.interface_dim();
  const int n = g.trapezoid_points();
  const double h = 2.0 * kPi / n;
  std::vector<QuadratureNode> out;
  if (d == 1) {
    for (int a = 0; a < n; ++a) out.push_back({make_vec({a * h}), h});
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) out.push_back({make_vec({a * h, b * h}), h * h});
  }
  return out;
}

std::vector<QuadratureNode> box_quadrature(const ReferenceGeometry& g) {
  if (!g.flat_box()) throw std::logic_error("box quadrature requires the flat box");
  std::vector<double> z, w;
  box_depth_rule(g, z, w);
  const int d = g.interface_dim();
  std::vector<QuadratureNode> out;
  for (const auto& yn : interface_quadrature(g)) {
    for (std::size_t b = 0; b < z.size(); ++b) {
      Vec X(d + 1);
      X.head(d) = yn.X;
      X(d) = z[b];
      out.push_back({X, yn.weight * w[b]});
    }
  }
  return out;
}

}  // namespace fsilab::geometry
