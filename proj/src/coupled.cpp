#include "fsilab/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsilab/errors.hpp"

namespace fsilab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- geometry tracks -------------------------------------------------------

GeometryTrack GeometryTrack::frozen(Displacement zeta) {
  Displacement zero(zeta.dim(), zeta.band());
  return GeometryTrack(
      [zeta, zero](double t) {
        return Snapshot{t, zeta, zero, {}};
      },
      true);
}

GeometryTrack GeometryTrack::prescribed(std::function<Displacement(double)> zeta,
                                        std::function<Displacement(double)> zeta_t) {
  return GeometryTrack(
      [zeta, zeta_t](double t) {
        return Snapshot{t, zeta(t), zeta_t(t), {}};
      },
      false);
}

GeometryTrack GeometryTrack::sampled(double dt, std::vector<Displacement> zeta, std::vector<Displacement> zeta_t,
                                     std::vector<VectorXd> beta) {
  if (zeta.empty() || zeta.size() != zeta_t.size() || (!beta.empty() && beta.size() != zeta.size()))
    throw std::invalid_argument("GeometryTrack::sampled: series lengths differ");
  auto fn = [dt, zeta = std::move(zeta), zeta_t = std::move(zeta_t), beta = std::move(beta)](double t) {
    const int last = int(zeta.size()) - 1;
    double x = std::clamp(t / dt, 0.0, double(last));
    int n = std::min(int(std::floor(x)), std::max(last - 1, 0));
    double th = last == 0 ? 0.0 : x - n;
    int n1 = std::min(n + 1, last);
    Snapshot s;
    s.t = t;
    s.zeta = (1.0 - th) * zeta[n] + th * zeta[n1];
    s.zeta_t = (1.0 - th) * zeta_t[n] + th * zeta_t[n1];
    if (!beta.empty()) s.beta = (1.0 - th) * beta[n] + th * beta[n1];
    return s;
  };
  return GeometryTrack(std::move(fn), false);
}

Snapshot GeometryTrack::at(double t) const {
  if (!fn_) throw std::logic_error("GeometryTrack: empty track");
  return fn_(t);
}

// ---- assembly --------------------------------------------------------------

TestField TestField::from_mode(const StreamMode& m, int band) {
  return TestField{m.label(), [m](double y, double z) { return m.sample(y, z); }, m.trace_field(band)};
}

namespace {
std::vector<TestField> as_test_fields(const GalerkinBasis& basis) {
  std::vector<TestField> out;
  for (const auto& m : basis.modes()) out.push_back(TestField::from_mode(m, basis.geometry().band()));
  return out;
}
}  // namespace

AssemblyContext::AssemblyContext(const GalerkinBasis& basis) : AssemblyContext(basis, as_test_fields(basis)) {
  same_ = true;
  test_nodes_ = trial_nodes_;
}

AssemblyContext::AssemblyContext(const GalerkinBasis& basis, std::vector<TestField> test)
    : basis_(basis), test_(std::move(test)) {
  const auto& g = basis_.geometry();
  if (!g.flat_box() || g.interface_dim() != 1) throw std::invalid_argument("AssemblyContext: flat box, interface_dim 1");
  nodes_ = geometry::box_quadrature(g);
  ny_ = g.trapezoid_points();
  nz_ = int(nodes_.size()) / ny_;
  trial_nodes_ = sample_fields(as_test_fields(basis_));
  same_ = false;
  test_nodes_ = sample_fields(test_);
}

AssemblyContext::NodeFields AssemblyContext::sample_fields(const std::vector<TestField>& fields) const {
  NodeFields nf;
  nf.count = int(fields.size());
  nf.samples.resize(nodes_.size() * fields.size());
  for (std::size_t q = 0; q < nodes_.size(); ++q)
    for (std::size_t i = 0; i < fields.size(); ++i)
      nf.samples[q * fields.size() + i] = fields[i].sample(nodes_[q].X(0), nodes_[q].X(1));
  for (const auto& f : fields) nf.traces.push_back(f.trace.empty() ? Displacement(1, basis_.geometry().band()) : f.trace.resized(basis_.geometry().band()));
  return nf;
}

namespace {

// Pushed-forward quantities of a field list on the node set, one row per node.
struct PushedFields {
  MatrixXd v[2];     // components of J w at Psi(X)
  MatrixXd T[2];     // d_t (J w) at fixed physical point
  MatrixXd G[2][2];  // physical gradient
  void resize(int Q, int N) {
    for (int r = 0; r < 2; ++r) {
      v[r].resize(Q, N);
      T[r].resize(Q, N);
      for (int c = 0; c < 2; ++c) G[r][c].resize(Q, N);
    }
  }
};

struct NodeGeometry {
  Eigen::Matrix2d F, Finv, dF[3];  // dF: d/dy, d/dz, d/dt
  double det, ddet[3];
  Eigen::Vector2d psi_t;
};

}  // namespace

CoefficientSystem AssemblyContext::assemble(const Snapshot& snap, const PhysicsParams& phys,
                                            const AssemblyOptions& opt, const Displacement* eta0) const {
  const auto& geom = basis_.geometry();
  const int band = geom.band();
  const int Q = int(nodes_.size());
  const int Nt = trial_nodes_.count, Ns = test_nodes_.count;
  const auto& cut = geom.cutoff();

  Displacement zeta = snap.zeta.empty() ? Displacement(1, band) : snap.zeta;
  Displacement zeta_t = snap.zeta_t.empty() ? Displacement(1, band) : snap.zeta_t;
  Deformation def(geom, zeta);  // validates the margin

  auto z0 = zeta.samples(ny_), z1 = zeta.samples(ny_, {1, 0}), z2 = zeta.samples(ny_, {2, 0});
  auto t0 = zeta_t.samples(ny_), t1 = zeta_t.samples(ny_, {1, 0});

  std::vector<NodeGeometry> ng(Q);
  VectorXd omega(Q);
  for (int q = 0; q < Q; ++q) {
    int a = q / nz_;
    double s = nodes_[q].X(1);
    double p0 = cut.value(s), p1 = cut.d1(s), p2 = cut.d2(s);
    NodeGeometry& G = ng[q];
    G.det = 1.0 + z0[a] * p1;
    if (!(G.det > 0.0)) throw OrientationLost("assembly: det grad Psi <= 0 at a quadrature node");
    G.F << 1.0, 0.0, z1[a] * p0, G.det;
    G.Finv << 1.0, 0.0, -z1[a] * p0 / G.det, 1.0 / G.det;
    G.dF[0] << 0.0, 0.0, z2[a] * p0, z1[a] * p1;
    G.dF[1] << 0.0, 0.0, z1[a] * p1, z0[a] * p2;
    G.dF[2] << 0.0, 0.0, t1[a] * p0, t0[a] * p1;
    G.ddet[0] = z1[a] * p1;
    G.ddet[1] = z0[a] * p2;
    G.ddet[2] = t0[a] * p1;
    G.psi_t << 0.0, t0[a] * p0;
    omega(q) = nodes_[q].weight * G.det;
  }

  auto push = [&](const NodeFields& nf) {
    PushedFields pf;
    pf.resize(Q, nf.count);
    for (int q = 0; q < Q; ++q) {
      const NodeGeometry& G = ng[q];
      const int row = opt.reverse_node_order ? Q - 1 - q : q;
      for (int i = 0; i < nf.count; ++i) {
        const FieldSample& fs = nf.samples[std::size_t(q) * nf.count + i];
        Eigen::Vector2d v = G.F * fs.w / G.det;
        Eigen::Matrix2d Dv;
        for (int k = 0; k < 2; ++k) Dv.col(k) = (G.dF[k] * fs.w + G.F * fs.Dw.col(k)) / G.det - v * (G.ddet[k] / G.det);
        Eigen::Matrix2d grad = Dv * G.Finv;
        Eigen::Vector2d vt = G.dF[2] * fs.w / G.det - v * (G.ddet[2] / G.det) - grad * G.psi_t;
        for (int r = 0; r < 2; ++r) {
          pf.v[r](row, i) = v(r);
          pf.T[r](row, i) = vt(r);
          for (int c = 0; c < 2; ++c) pf.G[r][c](row, i) = grad(r, c);
        }
      }
    }
    return pf;
  };

  PushedFields trial = push(trial_nodes_);
  PushedFields test = same_ ? trial : push(test_nodes_);
  VectorXd w = omega;
  if (opt.reverse_node_order) w = omega.reverse().eval();

  CoefficientSystem sys;
  sys.t = snap.t;
  sys.eps_reg = phys.eps_reg;
  sys.a_fluid = MatrixXd::Zero(Nt, Ns);
  sys.b_time = MatrixXd::Zero(Nt, Ns);
  sys.b_conv = MatrixXd::Zero(Nt, Ns);
  sys.b_visc = MatrixXd::Zero(Nt, Ns);
  for (int r = 0; r < 2; ++r) {
    MatrixXd wv = w.asDiagonal() * test.v[r];
    sys.a_fluid.noalias() += trial.v[r].transpose() * wv;
    if (opt.time_derivative) sys.b_time.noalias() += trial.v[r].transpose() * (w.asDiagonal() * test.T[r]);
    if (opt.viscous)
      for (int c = 0; c < 2; ++c) sys.b_visc.noalias() -= trial.G[r][c].transpose() * (w.asDiagonal() * test.G[r][c]);
  }

  if (opt.convection && snap.beta.size() > 0) {
    if (snap.beta.size() != Nt) throw std::invalid_argument("assembly: beta size must match the basis");
    VectorXd V[2] = {trial.v[0] * snap.beta, trial.v[1] * snap.beta};
    auto conv = [&](const PushedFields& pf, int r) {
      return MatrixXd(V[0].asDiagonal() * pf.G[r][0] + V[1].asDiagonal() * pf.G[r][1]);
    };
    for (int r = 0; r < 2; ++r) {
      MatrixXd ci = conv(trial, r), cj = same_ ? ci : conv(test, r);
      sys.b_conv.noalias() -= 0.5 * ci.transpose() * (w.asDiagonal() * test.v[r]);
      sys.b_conv.noalias() += 0.5 * trial.v[r].transpose() * (w.asDiagonal() * cj);
    }
  }

  // interface blocks
  std::vector<double> iota(ny_), iota_t(ny_);
  bool unit_iota = true;
  for (int a = 0; a < ny_; ++a) {
    double det0 = 1.0 + z0[a] * cut.d1(0.0);
    iota[a] = 1.0 / det0;
    iota_t[a] = -iota[a] * iota[a] * t0[a] * cut.d1(0.0);
    unit_iota = unit_iota && iota[a] == 1.0 && iota_t[a] == 0.0;
  }
  auto weighted = [&](const std::vector<Displacement>& tr, const std::vector<double>& f) {
    std::vector<Displacement> out;
    for (const auto& d : tr) {
      auto vals = d.samples(ny_);
      for (int a = 0; a < ny_; ++a) vals[a] *= f[a];
      out.push_back(Displacement::from_samples(1, band, ny_, vals));
    }
    return out;
  };
  std::vector<Displacement> itrial = unit_iota ? trial_nodes_.traces : weighted(trial_nodes_.traces, iota);
  std::vector<Displacement> itest = unit_iota ? test_nodes_.traces : weighted(test_nodes_.traces, iota);
  sys.test_traces = itest;

  const double h = 2.0 * M_PI / ny_;
  std::vector<std::vector<double>> ti(Nt), tj(Ns);
  for (int i = 0; i < Nt; ++i) ti[i] = itrial[i].samples(ny_);
  std::vector<std::vector<double>> raw_tj(Ns);
  for (int j = 0; j < Ns; ++j) {
    tj[j] = itest[j].samples(ny_);
    raw_tj[j] = unit_iota ? tj[j] : test_nodes_.traces[j].samples(ny_);
  }
  std::vector<double> motion(ny_);
  for (int a = 0; a < ny_; ++a) {
    // n_zeta . n |det grad phi_zeta| for the flat chart, written out
    double sq = std::sqrt(1.0 + z1[a] * z1[a]);
    motion[a] = 0.5 * t0[a] * (1.0 / sq) * sq;
  }

  sys.a_interface = MatrixXd::Zero(Nt, Ns);
  sys.b_boundary = MatrixXd::Zero(Nt, Ns);
  sys.b_iota = MatrixXd::Zero(Nt, Ns);
  sys.b_eps = MatrixXd::Zero(Nt, Ns);
  sys.b_ito = MatrixXd::Zero(Nt, Ns);
  sys.S = MatrixXd::Zero(Nt, Ns);
  sys.e.assign(phys.noise.size(), MatrixXd::Zero(Nt, Ns));
  std::vector<std::vector<Displacement>> transported(phys.noise.size()), strato(phys.noise.size());
  for (std::size_t m = 0; m < phys.noise.size(); ++m)
    for (int i = 0; i < Nt; ++i) {
      transported[m].push_back(transport_apply(phys.noise[m], itrial[i]));
      strato[m].push_back(strato_correction(phys.noise[m], itrial[i]));
    }
  for (int i = 0; i < Nt; ++i) {
    for (int j = 0; j < Ns; ++j) {
      sys.a_interface(i, j) = inner_product(itrial[i], itest[j]);
      sys.S(i, j) = elastic_pairing(itrial[i], itest[j], phys.eps_reg);
      if (opt.eps_dissipation) sys.b_eps(i, j) = -phys.eps_visc * elastic_pairing(itrial[i], itest[j], 0.0);
      double bb = 0.0, bi = 0.0;
      for (int a = 0; a < ny_; ++a) {
        bb += motion[a] * ti[i][a] * tj[j][a];
        if (!unit_iota) bi += ti[i][a] * iota_t[a] * raw_tj[j][a];
      }
      if (opt.boundary_motion) sys.b_boundary(i, j) = h * bb;
      if (opt.time_derivative) sys.b_iota(i, j) = h * bi;
      for (std::size_t m = 0; m < phys.noise.size(); ++m) {
        sys.e[m](i, j) = inner_product(transported[m][i], itest[j]);
        if (opt.ito_correction && !phys.galerkin_ito) sys.b_ito(i, j) += inner_product(strato[m][i], itest[j]);
      }
    }
  }
  sys.a = sys.a_fluid + sys.a_interface;
  if (opt.ito_correction && phys.galerkin_ito && !phys.noise.empty()) {
    if (Nt != Ns) throw std::invalid_argument("galerkin_ito needs square systems");
    Eigen::LDLT<MatrixXd> ldlt(sys.a);
    for (const auto& e : sys.e) sys.b_ito += 0.5 * e * ldlt.solve(e);
  }
  sys.c = -sys.S;
  sys.b = sys.b_time + sys.b_conv + sys.b_boundary + sys.b_visc + sys.b_eps + sys.b_ito + sys.b_iota;

  sys.g = VectorXd::Zero(Ns);
  if (!phys.forcing.empty())
    for (int j = 0; j < Ns; ++j) sys.g(j) = inner_product(phys.forcing, itest[j]);
  sys.d = VectorXd::Zero(Ns);
  if (eta0)
    for (int j = 0; j < Ns; ++j) sys.d(j) = -elastic_pairing(*eta0, itest[j], phys.eps_reg);
  return sys;
}

Eigen::MatrixXd assemble_mass(const GalerkinBasis& basis, const Displacement& zeta) {
  AssemblyContext ctx(basis);
  return ctx.assemble(Snapshot{0.0, zeta, {}, {}}, {}).a;
}

Eigen::MatrixXd assemble_drift(const GalerkinBasis& basis, const Snapshot& snap, const PhysicsParams& phys,
                               const AssemblyOptions& opt) {
  AssemblyContext ctx(basis);
  return ctx.assemble(snap, phys, opt).b;
}

Eigen::MatrixXd assemble_memory(const GalerkinBasis& basis, const Displacement& zeta_t, const Displacement& zeta_s,
                                double eps_reg) {
  // c(t, s)_{ij} = -<iota_s w_i, iota_t w_j>_el; iota is a function of the geometry at each time
  AssemblyContext ctx(basis);
  PhysicsParams p;
  p.eps_reg = eps_reg;
  auto st = ctx.assemble(Snapshot{0.0, zeta_t, {}, {}}, p);
  auto ss = ctx.assemble(Snapshot{0.0, zeta_s, {}, {}}, p);
  MatrixXd c(basis.size(), basis.size());
  for (int i = 0; i < basis.size(); ++i)
    for (int j = 0; j < basis.size(); ++j)
      c(i, j) = -elastic_pairing(ss.test_traces[i], st.test_traces[j], eps_reg);
  return c;
}

Eigen::VectorXd assemble_load(const GalerkinBasis& basis, const Displacement& zeta, const Displacement& eta0,
                              double eps_reg) {
  AssemblyContext ctx(basis);
  PhysicsParams p;
  p.eps_reg = eps_reg;
  return ctx.assemble(Snapshot{0.0, zeta, {}, {}}, p, {}, &eta0).d;
}

Eigen::MatrixXd assemble_noise(const GalerkinBasis& basis, const Displacement& zeta, const TransportField& kappa) {
  AssemblyContext ctx(basis);
  PhysicsParams p;
  p.noise = {kappa};
  return ctx.assemble(Snapshot{0.0, zeta, {}, {}}, p).e[0];
}

// ---- time stepping ---------------------------------------------------------

namespace {

Displacement combine(const std::vector<Displacement>& traces, const VectorXd& c, int band) {
  Displacement out(1, band);
  for (int i = 0; i < c.size(); ++i)
    if (c(i) != 0.0) out += c(i) * traces[i];
  return out;
}

VectorXd elastic_force(const Displacement& eta, const CoefficientSystem& sys, double eps_reg) {
  VectorXd f(sys.test_traces.size());
  for (std::size_t j = 0; j < sys.test_traces.size(); ++j) f(j) = -elastic_pairing(eta, sys.test_traces[j], eps_reg);
  return f + sys.g;
}

}  // namespace

CoupledState sde_step(const CoupledState& s, const CoefficientSystem& now, const CoefficientSystem& next,
                      const std::vector<double>& dB, double dt, const StepOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("sde_step: dt must be positive");
  if (dB.size() != now.e.size()) throw std::invalid_argument("sde_step: one increment per noise mode");
  const int band = s.eta.band();
  const double eps_reg = next.eps_reg;

  Eigen::LLT<MatrixXd> llt(next.a);
  if (llt.info() != Eigen::Success) throw SingularMass("sde_step: mass matrix is not positive definite");

  VectorXd rhs = now.a.transpose() * s.alpha;
  Displacement eta_half = s.eta + (0.5 * dt) * s.xi;
  rhs += dt * elastic_force(eta_half, next, eps_reg);
  std::vector<VectorXd> Ea(dB.size());
  for (std::size_t m = 0; m < dB.size(); ++m) {
    Ea[m] = now.e[m].transpose() * s.alpha;
    rhs += dB[m] * Ea[m];
  }
  if (opt.milstein && !dB.empty()) {
    Eigen::LLT<MatrixXd> llt_now(now.a);
    for (std::size_t l = 0; l < dB.size(); ++l) {
      VectorXd y = llt_now.solve(Ea[l]);
      for (std::size_t m = 0; m < dB.size(); ++m) {
        double q = dB[m] * dB[l] - (m == l ? dt : 0.0);
        if (q != 0.0) rhs += 0.5 * q * (now.e[m].transpose() * y);
      }
    }
  }
  MatrixXd lhs = next.a.transpose() - dt * next.b.transpose() + 0.5 * dt * dt * next.S.transpose();
  CoupledState out;
  out.t = s.t + dt;
  out.alpha = lhs.partialPivLu().solve(rhs);
  if (!out.alpha.allFinite()) throw SingularMass("sde_step: step matrix is singular");
  out.xi = combine(next.test_traces, out.alpha, band);
  out.eta = s.eta + (0.5 * dt) * (s.xi + out.xi);
  if (std::isfinite(opt.margin)) {
    double sup = out.eta.sup_norm();
    if (sup >= opt.margin) throw StoppingRule(out.t, sup);
  }
  return out;
}

double trace_mismatch(const GalerkinBasis& basis, const InitialData& data) {
  VectorXd gamma = data.u0 ? *data.u0 : basis.lift_coefficients(data.eta1);
  if (gamma.size() != basis.size()) throw ValidationError("u0: coefficient count differs from the basis size");
  const int n = basis.geometry().trapezoid_points();
  auto a = basis.trace_of(gamma).samples(n);
  auto b = data.eta1.empty() ? std::vector<double>(n, 0.0) : data.eta1.samples(n);
  double m = 0.0;
  for (int i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Eigen::VectorXd initial_coefficients(const AssemblyContext& ctx, const InitialData& data, const Snapshot& snap0,
                                     const PhysicsParams& phys, double tol) {
  const auto& basis = ctx.basis();
  double mis = trace_mismatch(basis, data);
  if (mis > tol)
    throw IncompatibleDatum("trace compatibility u0 o phi_eta0 = eta1 n violated (max mismatch " + std::to_string(mis) +
                            ")");
  VectorXd gamma = data.u0 ? *data.u0 : basis.lift_coefficients(data.eta1);
  if (gamma.isZero(0.0) && (data.eta1.empty() || data.eta1.l2_norm_sq() == 0.0)) return VectorXd::Zero(basis.size());
  PhysicsParams p = phys;
  p.noise.clear();
  auto sys = ctx.assemble(snap0, p);
  VectorXd rhs = sys.a_fluid.transpose() * gamma;
  if (!data.eta1.empty())
    for (int j = 0; j < basis.size(); ++j) rhs(j) += inner_product(data.eta1, sys.test_traces[j]);
  Eigen::LLT<MatrixXd> llt(sys.a);
  if (llt.info() != Eigen::Success) throw SingularMass("initial projection: mass matrix is not positive definite");
  return llt.solve(rhs);
}

CoupledTrajectory run_linear(const AssemblyContext& ctx, const GeometryTrack& track, const InitialData& data,
                             const PhysicsParams& phys, const std::vector<BrownianPath>& paths,
                             const LinearRunOptions& opt) {
  const auto& basis = ctx.basis();
  const int band = basis.geometry().band();
  if (paths.size() != phys.noise.size() && !(phys.noise.empty() && paths.size() == 1))
    throw std::invalid_argument("run_linear: one Brownian path per noise mode (or one clock path without noise)");
  if (paths.empty()) throw std::invalid_argument("run_linear: at least one path defines the time grid");
  const int steps = paths[0].steps(opt.level);
  const double dt = opt.horizon / steps;
  if (std::abs(paths[0].horizon() - opt.horizon) > 1e-12 * opt.horizon)
    throw std::invalid_argument("run_linear: path horizon differs from the run horizon");
  const int stride = std::max(1, opt.assembly_stride);
  const bool noisy = !phys.noise.empty();

  Displacement eta0 = data.eta0.empty() ? Displacement(1, band) : data.eta0.resized(band);
  if (std::isfinite(opt.step.margin) && eta0.sup_norm() >= opt.step.margin)
    throw DisplacementTooLarge("eta0 violates |eta0|_inf < L_margin");

  CoupledTrajectory tr;
  tr.dt = dt;
  auto record_health = [&](const CoefficientSystem& sys) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sys.a + sys.a.transpose()), Eigen::EigenvaluesOnly);
    tr.a_min_eig.push_back(es.eigenvalues().minCoeff());
    tr.a_asym.push_back((sys.a - sys.a.transpose()).cwiseAbs().maxCoeff());
  };
  auto assemble_at = [&](int n) {
    auto sys = ctx.assemble(track.at(n * dt), phys, opt.assembly, &eta0);
    record_health(sys);
    return sys;
  };

  // systems at assembly nodes n = 0, stride, 2 stride, ..., steps; interpolated in between
  std::vector<std::pair<int, CoefficientSystem>> cache;
  auto node_system = [&](int n) -> const CoefficientSystem& {
    for (auto& [k, s] : cache)
      if (k == n) return s;
    if (cache.size() > 2) cache.erase(cache.begin());
    cache.emplace_back(n, assemble_at(n));
    return cache.back().second;
  };
  CoefficientSystem static_sys;
  if (track.is_static()) static_sys = assemble_at(0);
  auto system_at = [&](int n) -> CoefficientSystem {
    if (track.is_static()) {
      CoefficientSystem s = static_sys;
      s.t = n * dt;
      return s;
    }
    if (stride == 1 || n % stride == 0 || n == steps) return node_system(n);
    int lo = (n / stride) * stride, hi = std::min(lo + stride, steps);
    CoefficientSystem A = node_system(lo);
    const CoefficientSystem& B = node_system(hi);
    double th = double(n - lo) / (hi - lo);
    A.t = n * dt;
    auto lerp = [th](MatrixXd& x, const MatrixXd& y) { x = (1.0 - th) * x + th * y; };
    lerp(A.a, B.a);
    lerp(A.a_fluid, B.a_fluid);
    lerp(A.a_interface, B.a_interface);
    lerp(A.b, B.b);
    lerp(A.b_time, B.b_time);
    lerp(A.b_conv, B.b_conv);
    lerp(A.b_boundary, B.b_boundary);
    lerp(A.b_visc, B.b_visc);
    lerp(A.b_eps, B.b_eps);
    lerp(A.b_ito, B.b_ito);
    lerp(A.b_iota, B.b_iota);
    lerp(A.S, B.S);
    lerp(A.c, B.c);
    for (std::size_t m = 0; m < A.e.size(); ++m) lerp(A.e[m], B.e[m]);
    A.g = (1.0 - th) * A.g + th * B.g;
    return A;
  };

  CoefficientSystem now = system_at(0);
  CoupledState s;
  s.t = 0.0;
  s.alpha = initial_coefficients(ctx, data, track.at(0.0), phys);
  s.eta = eta0;
  s.xi = combine(now.test_traces, s.alpha, band);
  tr.t.push_back(0.0);
  tr.alpha.push_back(s.alpha);
  tr.eta.push_back(s.eta);
  tr.xi.push_back(s.xi);

  std::vector<double> dB(phys.noise.size());
  for (int n = 0; n < steps; ++n) {
    if (noisy)
      for (std::size_t m = 0; m < dB.size(); ++m) dB[m] = paths[m].increments(opt.level)[n];
    CoefficientSystem next;
    try {
      next = system_at(n + 1);
    } catch (const OrientationLost&) {
      // the prescribed geometry degenerated before eta^N reached the margin
      tr.stopped = true;
      tr.stop_time = (n + 1) * dt;
      tr.stop_sup = s.eta.sup_norm();
      break;
    }
    try {
      s = sde_step(s, now, next, dB, dt, opt.step);
    } catch (const StoppingRule& stop) {
      tr.stopped = true;
      tr.stop_time = stop.time();
      tr.stop_sup = stop.sup_norm();
      break;
    }
    s.t = (n + 1) * dt;
    tr.t.push_back(s.t);
    tr.alpha.push_back(s.alpha);
    tr.eta.push_back(s.eta);
    tr.xi.push_back(s.xi);
    tr.dB.push_back(dB);
    now = std::move(next);
  }
  return tr;
}

ReconstructedFields reconstruct_fields(const CoupledState& s, const GalerkinBasis& basis, const Displacement& zeta) {
  Deformation def(basis.geometry(), zeta.empty() ? Displacement(1, basis.geometry().band()) : zeta);
  VectorXd alpha = s.alpha;
  GalerkinBasis b = basis;
  ReconstructedFields out;
  out.u = def.piola([b, alpha](const geometry::Vec& X) { return b.field(alpha, X); });
  out.eta = s.eta;
  out.eta_t = s.xi;
  return out;
}

double trace_residual(const CoupledState& s, const GalerkinBasis& basis, const Displacement& zeta) {
  const auto& geom = basis.geometry();
  Displacement z = zeta.empty() ? Displacement(1, geom.band()) : zeta;
  auto fields = reconstruct_fields(s, basis, z);
  Deformation def(geom, z);
  double worst = 0.0;
  for (const auto& node : geometry::interface_quadrature(geom)) {
    geometry::Vec x = def.boundary_point(node.X);
    geometry::Vec u = fields.u(x);
    geometry::Vec target = geom.chart().normal(node.X) * s.xi(node.X(0));
    worst = std::max(worst, (u - target).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace fsilab
