#include "fsilab/fixedpoint.hpp"

#include <cmath>
#include <stdexcept>

#include "fsilab/errors.hpp"

namespace fsilab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

PhysicsParams regularized_physics(const ProblemData& data, double eps) {
  PhysicsParams p;
  p.eps_visc = eps;
  p.eps_reg = eps;
  p.noise = data.noise;
  p.forcing = data.forcing;
  return p;
}

namespace {

template <class T>
std::vector<T> padded(const std::vector<T>& s, std::size_t n) {
  std::vector<T> out(s.begin(), s.begin() + std::min(s.size(), n));
  while (out.size() < n) out.push_back(out.back());
  return out;
}

}  // namespace

GeometryTrack iterate_geometry(const CoupledTrajectory* input, const ProblemData& data, double eps, double dt,
                               int band) {
  if (!(eps > 0.0)) throw std::invalid_argument("iterate_geometry: eps must be positive");
  if (input == nullptr) {
    Displacement eta0 = data.initial.eta0.empty() ? Displacement(1, band) : data.initial.eta0.resized(band);
    return GeometryTrack::frozen(mollify_space(eta0, eps));
  }
  if (input->eta.empty()) throw std::invalid_argument("iterate_geometry: empty iterate");
  auto eta = mollify_time(input->eta, dt, eps);
  auto eta_t = mollify_time(input->xi, dt, eps, true);
  auto beta = mollify_time(input->alpha, dt, eps);
  for (auto& z : eta) z = mollify_space(z, eps);
  for (auto& z : eta_t) z = mollify_space(z, eps);
  return GeometryTrack::sampled(dt, std::move(eta), std::move(eta_t), std::move(beta));
}

CoupledTrajectory picard_map(const AssemblyContext& ctx, const ProblemData& data, double eps,
                             const std::vector<BrownianPath>& paths, const PicardOptions& opt,
                             const CoupledTrajectory* input, GeometryTrack* track_out) {
  if (paths.empty()) throw std::invalid_argument("picard_map: no Brownian path");
  const auto& geom = ctx.basis().geometry();
  const int steps = paths[0].steps(opt.level);
  const double dt = opt.horizon / steps;
  PhysicsParams phys = regularized_physics(data, eps);
  phys.galerkin_ito = opt.galerkin_ito;

  CoupledTrajectory in_padded;
  if (input != nullptr) {
    in_padded = *input;
    const std::size_t n = std::size_t(steps) + 1;
    in_padded.eta = padded(input->eta, n);
    in_padded.xi = padded(input->xi, n);
    in_padded.alpha = padded(input->alpha, n);
  }
  GeometryTrack track = iterate_geometry(input ? &in_padded : nullptr, data, eps, dt, geom.band());

  LinearRunOptions lo;
  lo.horizon = opt.horizon;
  lo.level = opt.level;
  lo.assembly_stride = opt.assembly_stride;
  lo.step.milstein = opt.milstein;
  lo.step.margin = std::isnan(opt.margin) ? geom.margin() : opt.margin;
  lo.assembly = opt.assembly;
  auto out = run_linear(ctx, track, data.initial, phys, paths, lo);
  if (track_out) *track_out = track;
  return out;
}

std::uint64_t fingerprint(const std::vector<Displacement>& series) {
  std::uint64_t h = kFnvOffset;
  for (const auto& d : series) h = fnv1a(d.coefficients().data(), d.coefficients().size() * sizeof(cplx), h);
  return h;
}

std::uint64_t fingerprint(const std::vector<VectorXd>& series) {
  std::uint64_t h = kFnvOffset;
  for (const auto& v : series) h = fnv1a(v.data(), std::size_t(v.size()) * sizeof(double), h);
  return h;
}

void iterate_distance(const CoupledTrajectory& y, const CoupledTrajectory& z, const MatrixXd& gram,
                      double& eta_part, double& u_part) {
  const std::size_t n = std::min(y.eta.size(), z.eta.size());
  eta_part = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eta_part = std::max(eta_part, (y.eta[i] - z.eta[i]).sup_norm());
    VectorXd d = y.alpha[i] - z.alpha[i];
    double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    acc += w * y.dt * d.dot(gram * d);
  }
  u_part = std::sqrt(std::max(acc, 0.0));
}

namespace {

CoupledTrajectory blend(double theta, const CoupledTrajectory& y, const CoupledTrajectory& z) {
  if (theta == 1.0) return y;
  CoupledTrajectory out = y;
  for (std::size_t i = 0; i < out.alpha.size() && i < z.alpha.size(); ++i) {
    out.alpha[i] = theta * y.alpha[i] + (1.0 - theta) * z.alpha[i];
    out.eta[i] = theta * y.eta[i] + (1.0 - theta) * z.eta[i];
    out.xi[i] = theta * y.xi[i] + (1.0 - theta) * z.xi[i];
  }
  return out;
}

}  // namespace

PicardResult picard_solve(const AssemblyContext& ctx, const ProblemData& data, double eps,
                          const std::vector<BrownianPath>& paths, const PicardOptions& opt,
                          const CoupledTrajectory* warm_start) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("picard_solve: tol must be positive");
  if (opt.max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be at least 1");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw std::invalid_argument("picard_solve: damping in (0, 1]");
  const int band = ctx.basis().geometry().band();
  Snapshot flat{0.0, Displacement(1, band), Displacement(1, band), {}};
  const MatrixXd gram = ctx.assemble(flat, regularized_physics(data, eps)).a_fluid;

  PicardResult res;
  CoupledTrajectory Z = warm_start ? *warm_start : picard_map(ctx, data, eps, paths, opt, nullptr, &res.track);
  if (Z.stopped) {
    res.solution = std::move(Z);
    res.stopped = true;
    res.stop_time = res.solution.stop_time;
    return res;
  }
  double theta = opt.damping, prev = INFINITY;
  for (int k = 1; k <= opt.max_iter; ++k) {
    GeometryTrack track;
    CoupledTrajectory Y = picard_map(ctx, data, eps, paths, opt, &Z, &track);
    res.track = track;
    IterationRecord rec;
    rec.iteration = k;
    rec.input_eta = fingerprint(Z.eta);
    rec.input_u = fingerprint(Z.alpha);
    rec.output_eta = fingerprint(Y.eta);
    rec.output_u = fingerprint(Y.alpha);
    iterate_distance(Y, Z, gram, rec.eta_part, rec.u_part);
    rec.residual = rec.eta_part + rec.u_part;
    if (rec.residual > prev && theta > opt.fallback_damping) theta = opt.fallback_damping;
    rec.damping = theta;
    rec.accepted = rec.residual <= opt.tol || rec.residual < prev;
    res.records.push_back(rec);
    res.residual = rec.residual;
    prev = rec.residual;
    if (Y.stopped) {
      res.solution = std::move(Y);
      res.stopped = true;
      res.stop_time = res.solution.stop_time;
      return res;
    }
    Z = blend(theta, Y, Z);
    if (rec.residual <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.solution = std::move(Z);
  return res;
}

std::vector<EpsilonSummary> epsilon_sweep(const AssemblyContext& ctx, const ProblemData& data,
                                          const std::vector<double>& eps_list, const std::vector<BrownianPath>& paths,
                                          const PicardOptions& opt, const SweepOptions& sweep) {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("epsilon_sweep: eps must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("epsilon_sweep: eps_list must decrease");
  }
  std::vector<double> ladder = sweep.h_ladder;
  if (ladder.empty()) ladder = {M_PI / 2, M_PI / (2 * M_SQRT2), M_PI / 4, M_PI / (4 * M_SQRT2)};
  std::vector<EpsilonSummary> out;
  std::optional<CoupledTrajectory> warm;
  for (double eps : eps_list) {
    EpsilonSummary s;
    s.eps = eps;
    s.result = picard_solve(ctx, data, eps, paths, opt, warm ? &*warm : nullptr);
    s.converged = s.result.converged;
    s.stopped = s.result.stopped;
    s.iterations = s.result.iterations();
    s.residual = s.result.residual;
    const auto& eta = s.result.solution.eta;
    double w3 = 0.0;
    for (const auto& e : eta) {
      s.sup_w22 = std::max(s.sup_w22, std::sqrt(e.sobolev_norm_sq(2.0)));
      w3 = std::max(w3, e.sobolev_norm_sq(3.0));
    }
    s.eps_sup_w32_sq = eps * w3;
    s.frac = frac_sobolev_report(eta, s.result.solution.dt, sweep.s, ladder);
    if (!s.stopped) warm = s.result.solution;
    out.push_back(std::move(s));
  }
  return out;
}

StopReport stopping_monitor(const std::vector<double>& t, const std::vector<Displacement>& eta, double margin) {
  StopReport r;
  for (std::size_t i = 0; i < eta.size() && i < t.size(); ++i) {
    double s = eta[i].sup_norm();
    if (s >= margin) {
      r.stopped = true;
      r.stop_time = t[i];
      r.stop_index = int(i);
      return r;
    }
    r.max_sup = std::max(r.max_sup, s);
  }
  return r;
}

}  // namespace fsilab
