#include "fsilab/shell.hpp"

#include <algorithm>
#include <stdexcept>

#include "fsilab/errors.hpp"

namespace fsilab {

TransportField TransportField::constant(int dim, double k1, double k2) {
  TransportField f;
  f.dim_ = dim;
  f.components_.push_back(Displacement::constant(dim, 0, k1));
  if (dim == 2) f.components_.push_back(Displacement::constant(dim, 0, k2));
  return f;
}

TransportField TransportField::from_stream(const Displacement& psi) {
  if (psi.dim() != 2) throw std::invalid_argument("stream-function transport fields need interface_dim 2");
  TransportField f;
  f.dim_ = 2;
  f.components_.push_back(-1.0 * psi.derivative(1));
  f.components_.push_back(psi.derivative(0));
  return f;
}

bool TransportField::is_zero() const {
  for (const auto& c : components_)
    for (auto v : c.coefficients())
      if (v != cplx(0.0, 0.0)) return false;
  return true;
}

double TransportField::norm_bound() const {
  double vmax = 0.0, gmax = 0.0;
  for (const auto& c : components_) {
    vmax = std::max(vmax, c.sup_norm());
    for (int j = 0; j < dim_; ++j) gmax = std::max(gmax, c.derivative(j).sup_norm());
  }
  return vmax + gmax;
}

Displacement TransportField::divergence() const {
  Displacement div(dim_, 0);
  for (int i = 0; i < dim_; ++i) div += components_[i].derivative(i);
  return div;
}

Displacement transport_apply(const TransportField& kappa, const Displacement& xi) {
  Displacement out(xi.dim(), xi.band());
  for (int i = 0; i < kappa.dim(); ++i) {
    const Displacement& ki = kappa.component(i);
    Displacement dxi = xi.derivative(i);
    if (ki.band() == 0) {
      dxi *= ki.mean();
      out += dxi;
    } else {
      out += product(ki, dxi, xi.band());
    }
  }
  return out;
}

Displacement strato_correction(const TransportField& kappa, const Displacement& xi) {
  return 0.5 * transport_apply(kappa, transport_apply(kappa, xi));
}

Displacement bilaplacian_apply(const Displacement& eta) { return eta.bilaplacian(); }
Displacement triharmonic_apply(const Displacement& eta) { return eta.triharmonic(); }

namespace {

// S xi = sum_m dB_m (kappa_m.grad) xi
Displacement noise_operator(const std::vector<TransportField>& modes, const std::vector<double>& dB,
                            const Displacement& xi) {
  Displacement out(xi.dim(), xi.band());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (dB[m] == 0.0 || modes[m].is_zero()) continue;
    out += dB[m] * transport_apply(modes[m], xi);
  }
  return out;
}

ShellState implicit_linear(const ShellState& s, const Displacement& xi_star, double dt, const ShellParams& p) {
  const double th = p.theta;
  ShellState out;
  out.t = s.t + dt;
  out.eta = s.eta;
  out.xi = xi_star;
  auto& ce = out.eta.coefficients();
  auto& cx = out.xi.coefficients();
  const auto& e0 = s.eta.coefficients();
  for (std::size_t i = 0; i < cx.size(); ++i) {
    WaveVector k = out.xi.wave_vector(i);
    double k2 = double(k[0]) * k[0] + double(k[1]) * k[1];
    double w2 = k2 * k2 + p.eps_reg * k2 * k2 * k2;
    double nu = p.eps_visc * k2 * k2;
    cplx g = p.forcing.empty() ? cplx(0.0, 0.0) : p.forcing.coeff(k);
    cplx xs = cx[i];
    cplx en = e0[i];
    cplx xn1 = (xs * (1.0 - th * (1.0 - th) * dt * dt * w2 - (1.0 - th) * dt * nu) - dt * w2 * en + dt * g) /
               (1.0 + th * th * dt * dt * w2 + th * dt * nu);
    cx[i] = xn1;
    ce[i] = en + dt * (th * xn1 + (1.0 - th) * xs);
  }
  return out;
}

void check_margin(const ShellState& s, const ShellParams& p) {
  if (!std::isfinite(p.margin)) return;
  double sup = s.eta.sup_norm();
  if (sup >= p.margin) throw StoppingRule(s.t, sup);
}

void check_inputs(const ShellState& s, const std::vector<TransportField>& modes, const std::vector<double>& dB,
                  double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("shell step: dt must be positive");
  if (modes.size() != dB.size()) throw std::invalid_argument("shell step: one increment per noise mode");
  if (s.eta.band() != s.xi.band()) throw std::invalid_argument("shell step: eta and xi band mismatch");
}

}  // namespace

ShellState shell_step_ito(const ShellState& s, const std::vector<TransportField>& modes,
                          const std::vector<double>& dB, double dt, const ShellParams& p) {
  check_inputs(s, modes, dB, dt);
  Displacement Sxi = noise_operator(modes, dB, s.xi);
  Displacement xi_star = s.xi - Sxi;
  if (p.milstein) {
    // xi - S xi + 1/2 S^2 xi: the Ito correction and the iterated integrals combined
    xi_star += 0.5 * noise_operator(modes, dB, Sxi);
  } else {
    for (const auto& m : modes) xi_star += dt * strato_correction(m, s.xi);
  }
  ShellState out = implicit_linear(s, xi_star, dt, p);
  check_margin(out, p);
  return out;
}

ShellState shell_step_heun(const ShellState& s, const std::vector<TransportField>& modes,
                           const std::vector<double>& dB, double dt, const ShellParams& p) {
  check_inputs(s, modes, dB, dt);
  ShellState pred = implicit_linear(s, s.xi - noise_operator(modes, dB, s.xi), dt, p);
  Displacement mid = 0.5 * (s.xi + pred.xi);
  ShellState out = implicit_linear(s, s.xi - noise_operator(modes, dB, mid), dt, p);
  check_margin(out, p);
  return out;
}

ShellEnergy shell_energy(const ShellState& s, const ShellParams& p) {
  ShellEnergy e;
  e.kinetic = 0.5 * s.xi.l2_norm_sq();
  e.elastic = 0.5 * elastic_pairing(s.eta, s.eta, 0.0);
  e.regularizer = 0.5 * p.eps_reg * s.eta.seminorm_sq(3.0);
  return e;
}

ShellTrajectory run_shell(const ShellState& initial, const std::vector<TransportField>& modes,
                          const std::vector<BrownianPath>& paths, int level, const ShellParams& p,
                          ShellScheme scheme, int record_every) {
  if (paths.size() != modes.size() && !(modes.empty() && paths.size() == 1))
    throw std::invalid_argument("run_shell: one path per noise mode (or one clock path without noise)");
  if (paths.empty()) throw std::invalid_argument("run_shell: at least one path is needed for the time grid");
  const int steps = paths[0].steps(level);
  const double dt = paths[0].dt(level);
  ShellTrajectory tr;
  ShellState s = initial;
  tr.times.push_back(s.t);
  tr.states.push_back(s);
  tr.energy.push_back(shell_energy(s, p).total());
  std::vector<double> dB(modes.size());
  for (int n = 0; n < steps; ++n) {
    for (std::size_t m = 0; m < modes.size(); ++m) dB[m] = paths[m].increments(level)[n];
    try {
      s = scheme == ShellScheme::Ito ? shell_step_ito(s, modes, dB, dt, p) : shell_step_heun(s, modes, dB, dt, p);
    } catch (const StoppingRule& stop) {
      tr.stopped = true;
      tr.stop_time = stop.time();
      break;
    }
    s.t = initial.t + (n + 1) * dt;
    tr.dB.push_back(dB);
    tr.energy.push_back(shell_energy(s, p).total());
    if ((n + 1) % record_every == 0 || n + 1 == steps) {
      tr.times.push_back(s.t);
      tr.states.push_back(s);
    }
  }
  return tr;
}

Displacement mollify_space(const Displacement& f, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be positive");
  return f.heat_smoothed(eps);
}

std::vector<double> backward_kernel_weights(double dt, double eps) {
  if (!(eps > 0.0) || !(dt > 0.0)) throw std::invalid_argument("mollify: eps and dt must be positive");
  std::vector<double> w;
  for (int m = 0;; ++m) {
    double u = (m + 0.5) * dt / eps;
    if (u >= 1.0) break;
    w.push_back(std::exp(-1.0 / (u * (1.0 - u))));
  }
  double total = 0.0;
  for (double x : w) total += x;
  if (w.empty() || !(total > 0.0)) return {1.0};
  for (double& x : w) x /= total;
  return w;
}

}  // namespace fsilab
