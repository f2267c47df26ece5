#include "fsilab/analysis.hpp"

#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "fsilab/errors.hpp"

namespace fsilab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- energy ledger ---------------------------------------------------------

double EnergyLedger::max_residual() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.residual);
  return m;
}

double EnergyLedger::max_inequality_violation() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.inequality_violation);
  return m;
}

EnergyLedger energy_ledger(const CoupledTrajectory& traj, const AssemblyContext& ctx, const GeometryTrack& track,
                           const PhysicsParams& phys, const AssemblyOptions& opt) {
  EnergyLedger led;
  const std::size_t n_rows = traj.alpha.size();
  if (n_rows == 0) return led;
  std::vector<CoefficientSystem> sys;
  sys.reserve(n_rows);
  for (std::size_t n = 0; n < n_rows; ++n) {
    if (track.is_static() && n > 0) {
      sys.push_back(sys.front());
    } else {
      sys.push_back(ctx.assemble(track.at(traj.t[n]), phys, opt));
    }
  }
  double Dv = 0.0, De = 0.0, Dn = 0.0, M = 0.0, W = 0.0, E0 = 0.0;
  for (std::size_t n = 0; n < n_rows; ++n) {
    const VectorXd& al = traj.alpha[n];
    const auto& S = sys[n];
    if (n > 0) {
      const double dt = traj.t[n] - traj.t[n - 1];
      Dv += dt * al.dot(-S.b_visc * al);
      De += dt * al.dot(-S.b_eps * al);
      W += dt * al.dot(S.g);
      const VectorXd& ap = traj.alpha[n - 1];
      const auto& P = sys[n - 1];
      if (!P.e.empty()) {
        Eigen::LLT<MatrixXd> llt(P.a);
        double rate = -ap.dot(P.b_ito * ap);
        for (std::size_t m = 0; m < P.e.size(); ++m) {
          VectorXd g = P.e[m].transpose() * ap;
          rate -= 0.5 * g.dot(llt.solve(g));
          M += traj.dB[n - 1][m] * ap.dot(P.e[m] * ap);
        }
        Dn += dt * rate;
      }
    }
    LedgerRow r;
    r.t = traj.t[n];
    r.fluid_kinetic = 0.5 * al.dot(S.a_fluid * al);
    r.interface_kinetic = 0.5 * traj.xi[n].l2_norm_sq();
    r.elastic = 0.5 * elastic_pairing(traj.eta[n], traj.eta[n], 0.0);
    r.regularizer = 0.5 * phys.eps_reg * traj.eta[n].seminorm_sq(3.0);
    r.viscous = Dv;
    r.eps_dissipation = De;
    r.noise_defect = Dn;
    r.martingale = M;
    r.forcing_work = W;
    double energy = r.fluid_kinetic + r.interface_kinetic + r.elastic + r.regularizer;
    if (n == 0) E0 = energy;
    r.lhs = energy + Dv + De + Dn;
    r.rhs = E0 + M + W;
    r.residual = std::abs(r.lhs - r.rhs);
    double ineq = r.fluid_kinetic + r.interface_kinetic + r.elastic + Dv;
    r.inequality_violation = std::max(0.0, ineq - r.rhs);
    led.rows.push_back(r);
  }
  return led;
}

// ---- corrector and extension ------------------------------------------------

double corrector(const ReferenceGeometry& geom, const Displacement& eta, const Displacement& xi,
                 CorrectorWeight weight) {
  if (!geom.flat_box()) throw std::invalid_argument("corrector: flat box only");
  const double L = geom.L();
  Deformation def(geom, eta.empty() ? Displacement(geom.interface_dim(), geom.band()) : eta);
  std::vector<double> sn, sw;
  geometry::gauss_legendre(geom.quadrature().gauss_order, -0.5 * L, -0.25 * L, sn, sw);
  double num = 0.0, den = 0.0;
  for (const auto& node : geometry::interface_quadrature(geom)) {
    double xv = xi.evaluate(node.X.data());
    double e = def.eta().evaluate(node.X.data());
    for (std::size_t b = 0; b < sn.size(); ++b) {
      double lam = weight == CorrectorWeight::Unit ? 1.0 : 1.0 + e * geom.cutoff().d1(sn[b]);
      num += node.weight * sw[b] * lam * xv;
      den += node.weight * sw[b] * lam;
    }
  }
  if (!(std::abs(den) > 1e-300)) throw ZeroWeight("corrector: the weight integrates to zero");
  return num / den;
}

namespace {

struct Step5 {
  double beta;
  double v(double r) const { return r >= 0.0 ? 1.0 : (r <= -beta ? 0.0 : p((r + beta) / beta)); }
  double d1(double r) const {
    if (r >= 0.0 || r <= -beta) return 0.0;
    double t = (r + beta) / beta;
    return 30.0 * t * t * (1 - t) * (1 - t) / beta;
  }
  double d2(double r) const {
    if (r >= 0.0 || r <= -beta) return 0.0;
    double t = (r + beta) / beta;
    return 60.0 * t * (1 - t) * (1 - 2 * t) / (beta * beta);
  }
  static double p(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
};

}  // namespace

SolenoidalExtension solenoidal_extension(const ReferenceGeometry& geom, const Displacement& eta,
                                         const Displacement& xi) {
  if (!geom.flat_box() || geom.interface_dim() != 1) throw std::invalid_argument("extension: flat box, interface_dim 1");
  Displacement e = eta.empty() ? Displacement(1, geom.band()) : eta;
  Deformation def(geom, e);  // DisplacementTooLarge
  double scale = 1.0 + std::sqrt(xi.l2_norm_sq());
  if (std::abs(xi.mean()) > 1e-12 * scale)
    throw IncompatibleDatum("extension: datum has nonzero mean; subtract the corrector first");
  Step5 chi{geom.margin() - def.sup_norm()};
  Displacement f = xi;
  Displacement F = xi.apply_multiplier([](WaveVector k) { return k[0] == 0 ? cplx(0.0, 0.0) : 1.0 / cplx(0.0, k[0]); });
  SolenoidalExtension out;
  out.support_depth = chi.beta;
  out.field = [=](const geometry::Vec& x) {
    double y = x(0), r = x(1) - e(y);
    double Fy = F(y), fy = f(y), ep = e.evaluate(&y, {1, 0});
    return geometry::make_vec({-Fy * chi.d1(r), fy * chi.v(r) - Fy * ep * chi.d1(r)});
  };
  out.gradient = [=](const geometry::Vec& x) {
    double y = x(0), r = x(1) - e(y);
    double Fy = F(y), fy = f(y), fp = f.evaluate(&y, {1, 0});
    double ep = e.evaluate(&y, {1, 0}), epp = e.evaluate(&y, {2, 0});
    double c0 = chi.v(r), c1 = chi.d1(r), c2 = chi.d2(r);
    geometry::Mat G(2, 2);
    G(0, 0) = -fy * c1 + Fy * ep * c2;
    G(0, 1) = -Fy * c2;
    G(1, 0) = fp * c0 - 2.0 * fy * ep * c1 - Fy * epp * c1 + Fy * ep * ep * c2;
    G(1, 1) = fy * c1 - Fy * ep * c2;
    return G;
  };
  return out;
}

ExtensionReport check_extension(const ReferenceGeometry& geom, const Displacement& eta, const Displacement& xi,
                                const SolenoidalExtension& ext) {
  Displacement e = eta.empty() ? Displacement(1, geom.band()) : eta;
  ExtensionReport rep;
  std::vector<double> zn, zw;
  geometry::gauss_legendre(16, 0.0, 1.0, zn, zw);
  double num = 0.0;
  for (const auto& node : geometry::interface_quadrature(geom)) {
    double y = node.X(0), top = e(y), depth = ext.support_depth;
    // boundary trace
    geometry::Vec u = ext.field(geometry::make_vec({y, top}));
    rep.max_trace_error = std::max({rep.max_trace_error, std::abs(u(0)), std::abs(u(1) - xi(y))});
    // support band
    for (std::size_t b = 0; b < zn.size(); ++b) {
      double z = top - depth + depth * zn[b];
      geometry::Vec X = geometry::make_vec({y, z});
      geometry::Mat G = ext.gradient(X);
      rep.max_divergence = std::max(rep.max_divergence, std::abs(G(0, 0) + G(1, 1)));
      geometry::Vec v = ext.field(X);
      num += node.weight * zw[b] * depth * (v.squaredNorm() + G.squaredNorm());
    }
    // below the support, down to the rigid bottom
    for (int b = 0; b <= 8; ++b) {
      double z = -geom.box_height() + (top - depth - 1e-9 + geom.box_height()) * b / 8.0;
      rep.max_outside_collar = std::max(rep.max_outside_collar, ext.field(geometry::make_vec({y, z})).cwiseAbs().maxCoeff());
    }
  }
  int n = geom.trapezoid_points();
  auto xs = xi.samples(n), eps = e.samples(n, {1, 0});
  double cross = 0.0;
  for (int a = 0; a < n; ++a) cross += xs[a] * xs[a] * eps[a] * eps[a] * 2.0 * M_PI / n;
  double den = std::sqrt(xi.sobolev_norm_sq(1.0)) + std::sqrt(cross);
  rep.norm_ratio = den > 0.0 ? std::sqrt(num) / den : 0.0;
  return rep;
}

// ---- fractional regularity ---------------------------------------------------

Displacement frac_diff_quotient(const Displacement& eta, double h, double s, int direction) {
  if (!(h > 0.0)) throw std::invalid_argument("frac_diff_quotient: h must be positive");
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("frac_diff_quotient: s must lie in (0, 1/2)");
  return std::pow(h, -s) * (eta.shifted(h, direction) - eta);
}

double FracNormReport::relative_gap() const {
  if (spectral_seminorm == 0.0) return quotient_seminorm == 0.0 ? 0.0 : INFINITY;
  return std::abs(quotient_seminorm - spectral_seminorm) / spectral_seminorm;
}

double gagliardo_seminorm_sq(const Displacement& f, double s, int quad_points) {
  if (f.dim() != 1) throw std::invalid_argument("gagliardo_seminorm_sq: interface_dim 1");
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("gagliardo_seminorm_sq: s in (0, 1)");
  Displacement g = f.derivative(0, 2);
  const double two_pi = 2.0 * M_PI;
  // periodized kernel sum_n |h + 2 pi n|^{-1-2s}
  auto kernel = [&](double h) {
    double q = h / two_pi;
    return std::pow(two_pi, -1.0 - 2.0 * s) * (gsl_sf_hzeta(1.0 + 2.0 * s, q) + gsl_sf_hzeta(1.0 + 2.0 * s, 1.0 - q));
  };
  auto shift_norm = [&](double h) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.coefficients().size(); ++i) {
      double k = g.wave_vector(i)[0];
      double sn = std::sin(0.5 * k * h);
      acc += std::norm(g.coefficients()[i]) * 4.0 * sn * sn;
    }
    return acc * two_pi;
  };
  // integrand symmetric about pi; h = pi v^q flattens the h^{1-2s} endpoint behaviour
  const double q = 1.0 / (1.0 - s);
  std::vector<double> v, w;
  geometry::gauss_legendre(quad_points, 0.0, 1.0, v, w);
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double h = M_PI * std::pow(v[i], q);
    double jac = M_PI * q * std::pow(v[i], q - 1.0);
    total += 2.0 * w[i] * jac * shift_norm(h) * kernel(h);
  }
  const double Cs = M_PI / (std::tgamma(1.0 + 2.0 * s) * std::sin(M_PI * s));
  return total / (2.0 * Cs);
}

FracNormReport frac_sobolev_report(const std::vector<Displacement>& series, double dt, double s,
                                   const std::vector<double>& h_ladder) {
  FracNormReport rep;
  rep.s = s;
  rep.h = h_ladder;
  auto integrate = [&](const std::function<double(const Displacement&)>& f) {
    if (series.empty()) return 0.0;
    if (series.size() == 1) return f(series[0]);
    double acc = 0.0;
    for (std::size_t n = 0; n < series.size(); ++n) {
      double wt = (n == 0 || n + 1 == series.size()) ? 0.5 : 1.0;
      acc += wt * dt * f(series[n]);
    }
    return acc;
  };
  for (double h : h_ladder)
    rep.ladder.push_back(integrate([&](const Displacement& e) { return frac_diff_quotient(e, h, s).sobolev_norm_sq(2.0); }));
  double mx = 0.0, mn = INFINITY;
  for (double v : rep.ladder) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  rep.ladder_ratio = mx == 0.0 ? 1.0 : mx / mn;
  for (std::size_t i = 0; i + 1 < rep.ladder.size(); ++i)
    rep.dyadic_ratio.push_back(rep.ladder[i + 1] == 0.0 ? 1.0 : rep.ladder[i] / rep.ladder[i + 1]);
  rep.spectral_norm = integrate([&](const Displacement& e) { return e.sobolev_norm_sq(2.0 + s); });
  rep.spectral_seminorm = integrate([&](const Displacement& e) { return e.seminorm_sq(2.0 + s); });
  rep.quotient_seminorm = integrate([&](const Displacement& e) { return gagliardo_seminorm_sq(e, s); });
  return rep;
}

// ---- projection --------------------------------------------------------------

ProjectionReport projection_check(const GalerkinBasis& basis, const Displacement& b, const std::vector<double>& s) {
  ProjectionReport rep;
  Displacement bb = b.resized(basis.geometry().band());
  rep.projected = basis.trace_of(basis.lift_coefficients(bb));
  rep.s = s;
  for (double si : s) {
    double nb = bb.sobolev_norm_sq(si);
    double np = rep.projected.sobolev_norm_sq(si);
    double r = nb == 0.0 ? 0.0 : std::sqrt(np / nb);
    rep.ratio.push_back(r);
    if (si == 3.0 && r > 1.0 + 1e-12) rep.contraction_w3 = false;
  }
  rep.residual_l2 = std::sqrt((bb - rep.projected).l2_norm_sq());
  return rep;
}

// ---- weak form ---------------------------------------------------------------

void check_test_field(const ReferenceGeometry& geom, const TestField& f, double tol) {
  for (const auto& node : geometry::box_quadrature(geom)) {
    FieldSample s = f.sample(node.X(0), node.X(1));
    if (std::abs(s.Dw(0, 0) + s.Dw(1, 1)) > tol)
      throw InadmissibleTest("test field '" + f.label + "' is not divergence free");
  }
  for (const auto& node : geometry::interface_quadrature(geom)) {
    double y = node.X(0);
    FieldSample top = f.sample(y, 0.0);
    double tr = f.trace.empty() ? 0.0 : f.trace(y);
    if (std::abs(top.w(0)) > tol || std::abs(top.w(1) - tr) > tol)
      throw InadmissibleTest("test field '" + f.label + "' violates the trace law on the moving face");
    FieldSample bot = f.sample(y, -geom.box_height());
    if (bot.w.cwiseAbs().maxCoeff() > tol)
      throw InadmissibleTest("test field '" + f.label + "' does not vanish on the rigid bottom");
  }
}

WeakFormResult weakform_residual(const CoupledTrajectory& traj, const AssemblyContext& trial_ctx,
                                 const std::vector<TestField>& test, const GeometryTrack& track,
                                 const PhysicsParams& phys, const AssemblyOptions& opt, bool milstein) {
  const auto& geom = trial_ctx.basis().geometry();
  for (const auto& f : test) check_test_field(geom, f);
  AssemblyContext test_ctx(trial_ctx.basis(), test);
  const std::size_t n_rows = traj.alpha.size();
  WeakFormResult out;
  out.per_test = VectorXd::Zero(int(test.size()));
  if (n_rows < 2) return out;

  std::optional<CoefficientSystem> rect_static, sq_static;
  auto rect = [&](std::size_t n) {
    if (track.is_static()) {
      if (!rect_static) rect_static = test_ctx.assemble(track.at(0.0), phys, opt);
      return *rect_static;
    }
    return test_ctx.assemble(track.at(traj.t[n]), phys, opt);
  };
  auto square = [&](std::size_t n) {
    if (track.is_static()) {
      if (!sq_static) sq_static = trial_ctx.assemble(track.at(0.0), phys, opt);
      return *sq_static;
    }
    return trial_ctx.assemble(track.at(traj.t[n]), phys, opt);
  };
  auto drift = [&](const CoefficientSystem& R, std::size_t n) {
    VectorXd v = R.b.transpose() * traj.alpha[n] + R.g;
    for (std::size_t j = 0; j < R.test_traces.size(); ++j)
      v(int(j)) -= elastic_pairing(traj.eta[n], R.test_traces[j], phys.eps_reg);
    return v;
  };

  CoefficientSystem R0 = rect(0);
  VectorXd res = -(R0.a.transpose() * traj.alpha[0]);
  VectorXd f_prev = drift(R0, 0);
  for (std::size_t n = 0; n + 1 < n_rows; ++n) {
    const double dt = traj.t[n + 1] - traj.t[n];
    CoefficientSystem R1 = rect(n + 1);
    VectorXd f_next = drift(R1, n + 1);
    res -= 0.5 * dt * (f_prev + f_next);
    if (!phys.noise.empty()) {
      CoefficientSystem Rn = rect(n);
      const auto& dB = traj.dB[n];
      for (std::size_t m = 0; m < dB.size(); ++m) res -= dB[m] * (Rn.e[m].transpose() * traj.alpha[n]);
      if (milstein) {
        CoefficientSystem Sn = square(n);
        Eigen::LLT<MatrixXd> llt(Sn.a);
        for (std::size_t l = 0; l < dB.size(); ++l) {
          VectorXd y = llt.solve(Sn.e[l].transpose() * traj.alpha[n]);
          for (std::size_t m = 0; m < dB.size(); ++m) {
            double q = dB[m] * dB[l] - (m == l ? dt : 0.0);
            if (q != 0.0) res -= 0.5 * q * (Rn.e[m].transpose() * y);
          }
        }
      }
    }
    f_prev = f_next;
    if (n + 2 == n_rows) res += R1.a.transpose() * traj.alpha[n + 1];
  }
  out.per_test = res;
  out.max_abs = res.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace fsilab
