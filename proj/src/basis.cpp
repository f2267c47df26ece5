#include "fsilab/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace fsilab {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// monomial coefficients of the depth profile in zeta
std::vector<double> profile_poly(StreamMode::Kind kind, int m) {
  if (kind == StreamMode::Kind::Lift) return {0.0, 0.0, 3.0, -2.0};
  // shifted Legendre, times zeta^2 (1 - zeta)^2 = zeta^2 - 2 zeta^3 + zeta^4
  std::vector<double> leg(m + 1);
  for (int j = 0; j <= m; ++j) leg[j] = ((m + j) % 2 ? -1.0 : 1.0) * binom(m, j) * binom(m + j, j);
  std::vector<double> out(m + 5, 0.0);
  const double bubble[3] = {1.0, -2.0, 1.0};
  for (int j = 0; j <= m; ++j)
    for (int b = 0; b < 3; ++b) out[j + 2 + b] += leg[j] * bubble[b];
  return out;
}

double poly_eval(const std::vector<double>& c, double x, int order) {
  double acc = 0.0;
  for (int j = int(c.size()) - 1; j >= order; --j) {
    double f = 1.0;
    for (int q = 0; q < order; ++q) f *= (j - q);
    acc = acc * x + f * c[j];
  }
  return acc;
}

}  // namespace

StreamMode::StreamMode(Kind kind, int k, Phase phase, int m, double box_height)
    : kind_(kind), k_(k), phase_(phase), m_(m), H_(box_height), poly_(profile_poly(kind, m)) {
  if (!(box_height > 0.0)) throw std::invalid_argument("StreamMode: box height must be positive");
  if (kind == Kind::Lift && (k < 1 || phase == Phase::Const))
    throw std::invalid_argument("StreamMode: lifts need k >= 1 and a cos/sin phase");
  if ((phase == Phase::Const) != (k == 0)) throw std::invalid_argument("StreamMode: constant phase iff k = 0");
}

std::string StreamMode::label() const {
  std::string ph = phase_ == Phase::Const ? "const" : (phase_ == Phase::Cos ? "cos" : "sin");
  if (is_lift()) return "lift_" + ph + std::to_string(k_);
  return "interior_" + ph + std::to_string(k_) + "_m" + std::to_string(m_);
}

double StreamMode::T(double y, int order) const {
  if (phase_ == Phase::Const) return order == 0 ? 1.0 : 0.0;
  // lifts: T = -sin(ky)/k for a cos trace, cos(ky)/k for a sin trace
  double amp = 1.0, shift = 0.0;
  if (is_lift()) {
    amp = (phase_ == Phase::Cos ? -1.0 : 1.0) / k_;
    shift = phase_ == Phase::Cos ? 0.0 : 0.5 * M_PI;
  } else {
    shift = phase_ == Phase::Cos ? 0.5 * M_PI : 0.0;
  }
  return amp * std::pow(double(k_), order) * std::sin(k_ * y + shift + 0.5 * M_PI * order);
}

double StreamMode::P(double zeta, int order) const {
  return poly_eval(poly_, zeta, order);
}

double StreamMode::psi(double y, double z, int a, int b) const {
  double zeta = (z + H_) / H_;
  return T(y, a) * P(zeta, b) * std::pow(H_, -b);
}

FieldSample StreamMode::sample(double y, double z) const {
  double zeta = (z + H_) / H_;
  double p0 = P(zeta, 0), p1 = P(zeta, 1) / H_, p2 = P(zeta, 2) / (H_ * H_);
  double t0 = T(y, 0), t1 = T(y, 1), t2 = T(y, 2);
  FieldSample s;
  s.w << t0 * p1, -t1 * p0;
  s.Dw << t1 * p1, t0 * p2, -t2 * p0, -t1 * p1;
  return s;
}

geometry::Vec StreamMode::value(const geometry::Vec& X) const {
  FieldSample s = sample(X(0), X(1));
  return geometry::make_vec({s.w(0), s.w(1)});
}

double StreamMode::trace(double y) const {
  if (!is_lift()) return 0.0;
  return -T(y, 1);
}

Displacement StreamMode::trace_field(int band) const {
  if (!is_lift()) return Displacement(1, band);
  if (k_ > band) throw std::invalid_argument("StreamMode: trace wavenumber exceeds the band limit");
  return phase_ == Phase::Cos ? Displacement::cosine(1, band, {k_, 0}, 1.0) : Displacement::sine(1, band, {k_, 0}, 1.0);
}

std::vector<StreamMode> enumerate_modes(double H, int N) {
  using K = StreamMode::Kind;
  using Ph = StreamMode::Phase;
  std::vector<StreamMode> lifts, interior;
  int n_lift = (N + 1) / 2, n_int = N / 2;
  for (int j = 0; int(lifts.size()) < n_lift; ++j) lifts.emplace_back(K::Lift, j / 2 + 1, j % 2 ? Ph::Sin : Ph::Cos, 0, H);
  for (int d = 0; int(interior.size()) < n_int; ++d) {
    for (int k = 0; k <= d && int(interior.size()) < n_int; ++k) {
      int m = d - k;
      if (k == 0) {
        interior.emplace_back(K::Interior, 0, Ph::Const, m, H);
      } else {
        interior.emplace_back(K::Interior, k, Ph::Cos, m, H);
        if (int(interior.size()) < n_int) interior.emplace_back(K::Interior, k, Ph::Sin, m, H);
      }
    }
  }
  std::vector<StreamMode> out;
  for (int i = 0; i < N; ++i) out.push_back(i % 2 == 0 ? lifts[i / 2] : interior[i / 2]);
  return out;
}

GalerkinBasis build_basis(const ReferenceGeometry& geom, int N) {
  if (!geom.flat_box() || geom.interface_dim() != 1)
    throw std::invalid_argument("build_basis: only the flat box with interface_dim 1 is supported");
  if (N < 2 || N % 2) throw std::invalid_argument("build_basis: N must be even and >= 2");
  return GalerkinBasis(geom, enumerate_modes(geom.box_height(), N));
}

GalerkinBasis::GalerkinBasis(ReferenceGeometry geom, std::vector<StreamMode> modes)
    : geom_(std::move(geom)), modes_(std::move(modes)) {
  for (const auto& m : modes_) traces_.push_back(m.trace_field(geom_.band()));
}

Displacement GalerkinBasis::trace_of(const Eigen::VectorXd& c) const {
  if (c.size() != size()) throw std::invalid_argument("trace_of: coefficient size");
  Displacement out(1, geom_.band());
  for (int i = 0; i < size(); ++i)
    if (modes_[i].is_lift() && c(i) != 0.0) out += c(i) * traces_[i];
  return out;
}

Eigen::VectorXd GalerkinBasis::lift_coefficients(const Displacement& f) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(size());
  for (int i = 0; i < size(); ++i) {
    const auto& m = modes_[i];
    if (!m.is_lift() || m.wavenumber() > f.band()) continue;
    cplx ck = f.coeff({m.wavenumber(), 0});
    c(i) = m.phase() == StreamMode::Phase::Cos ? 2.0 * ck.real() : -2.0 * ck.imag();
  }
  return c;
}

geometry::Vec GalerkinBasis::field(const Eigen::VectorXd& c, const geometry::Vec& X) const {
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int i = 0; i < size(); ++i)
    if (c(i) != 0.0) acc += c(i) * modes_[i].sample(X(0), X(1)).w;
  return geometry::make_vec({acc(0), acc(1)});
}

}  // namespace fsilab
