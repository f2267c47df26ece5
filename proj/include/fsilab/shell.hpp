#pragma once

/// @file shell.hpp
/// @brief Spectral operators and stochastic integrators for the standalone shell
///
///   d xi + [Lap^2 eta + eps_reg L' eta + eps_visc Lap^2 xi - g] dt + (kappa.grad) xi o dB = 0,
///   d eta = xi dt,
///
/// with L' the operator of the form int grad^3 eta : grad^3 phi (multiplier |k|^6).

#include <cmath>
#include <limits>
#include <vector>

#include "fsilab/noise.hpp"
#include "fsilab/spectral.hpp"

namespace fsilab {

/// Solenoidal transport field on the interface, stored componentwise.
class TransportField {
 public:
  TransportField() = default;
  /// Constant field; for interface_dim 1 this is the only solenoidal choice.
  static TransportField constant(int dim, double k1, double k2 = 0.0);
  /// kappa = grad^perp psi = (-d2 psi, d1 psi), interface_dim 2.
  static TransportField from_stream(const Displacement& psi);

  int dim() const { return dim_; }
  const Displacement& component(int i) const { return components_[i]; }
  bool is_zero() const;
  /// max |kappa| + max |grad kappa| on an oversampled grid.
  double norm_bound() const;
  /// Spectral divergence, zero by construction.
  Displacement divergence() const;

 private:
  int dim_ = 1;
  std::vector<Displacement> components_;
};

/// (kappa.grad) xi, pseudo-spectral with dealiased products.
Displacement transport_apply(const TransportField& kappa, const Displacement& xi);
/// 1/2 (kappa.grad)((kappa.grad) xi).
Displacement strato_correction(const TransportField& kappa, const Displacement& xi);
Displacement bilaplacian_apply(const Displacement& eta);
Displacement triharmonic_apply(const Displacement& eta);

struct ShellState {
  Displacement eta;
  Displacement xi;
  double t = 0.0;
};

struct ShellParams {
  double eps_visc = 0.0;
  double eps_reg = 0.0;
  /// Implicitness of the linear part: 0.5 is Crank-Nicolson (energy neutral), 1 backward Euler.
  double theta = 0.5;
  /// Add the iterated-integral term to the Ito step (strong order 1 for commuting noise).
  bool milstein = true;
  /// Stopping threshold for |eta|_inf.
  double margin = std::numeric_limits<double>::infinity();
  Displacement forcing;  ///< g, empty means zero
};

/// One IMEX step of the Ito form: noise and Ito correction explicit, linear part implicit.
ShellState shell_step_ito(const ShellState& s, const std::vector<TransportField>& modes,
                          const std::vector<double>& dB, double dt, const ShellParams& p);
/// Stratonovich-Heun predictor-corrector with the same implicit linear solve and no correction term.
ShellState shell_step_heun(const ShellState& s, const std::vector<TransportField>& modes,
                           const std::vector<double>& dB, double dt, const ShellParams& p);

struct ShellEnergy {
  double kinetic = 0.0;      ///< 1/2 |xi|^2
  double elastic = 0.0;      ///< 1/2 |Lap eta|^2
  double regularizer = 0.0;  ///< eps_reg/2 |grad^3 eta|^2
  double total() const { return kinetic + elastic + regularizer; }
};
ShellEnergy shell_energy(const ShellState& s, const ShellParams& p);

enum class ShellScheme { Ito, Heun };

struct ShellTrajectory {
  std::vector<double> times;
  std::vector<ShellState> states;     ///< recorded states (every `record_every` steps and the last)
  std::vector<std::vector<double>> dB;  ///< per step, per mode
  std::vector<double> energy;         ///< total energy at every step
  bool stopped = false;
  double stop_time = std::numeric_limits<double>::quiet_NaN();
};

/// Integrates from `initial` over the grid of `paths[m]` at `level`.
ShellTrajectory run_shell(const ShellState& initial, const std::vector<TransportField>& modes,
                          const std::vector<BrownianPath>& paths, int level, const ShellParams& p,
                          ShellScheme scheme, int record_every = 1);

// ---- mollification ---------------------------------------------------------

Displacement mollify_space(const Displacement& f, double eps);

/// Normalized weights of the backward kernel rho_eps on a grid of spacing dt:
/// w_m ~ rho((m + 1/2) dt / eps) with rho(u) = exp(-1/(u(1-u))) on (0, 1).
/// Returns {1} when eps <= dt/2.
std::vector<double> backward_kernel_weights(double dt, double eps);

/// f_eps(t_n) = sum_m w_m f(t_{n-m}); samples before t_0 take the value at t_0,
/// or zero when `zero_extension` is set (used for time derivatives).
template <class T>
std::vector<T> mollify_time(const std::vector<T>& series, double dt, double eps, bool zero_extension = false) {
  auto w = backward_kernel_weights(dt, eps);
  std::vector<T> out;
  out.reserve(series.size());
  for (std::size_t n = 0; n < series.size(); ++n) {
    T acc = series[n] * w[0];
    for (std::size_t m = 1; m < w.size(); ++m) {
      if (m > n) {
        if (zero_extension) continue;
        acc += series[0] * w[m];
      } else {
        acc += series[n - m] * w[m];
      }
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace fsilab
