#pragma once

/// @file config.hpp
/// @brief Run configuration: a sectioned key = value text with units in the key names.
///
///   [geometry]        interface_dim, box_height_m, collar_L_m, margin_factor, gauss_order, trapezoid_points
///   [discretization]  basis_N, spectral_band, dt_s, horizon_s, assembly_stride
///   [physics]         eps_visc, eps_reg, noise_modes, kappa_m_per_sqrt_s, forcing
///   [data]            eta0_m, eta1_m_per_s, u0
///   [solver]          mode, scheme, milstein, tol, max_iter, damping, eps, eps_list, frac_s
///   [rng]             seed, ensemble_size
///   [output]          dir, record_every
///
/// Spectral fields are written as space-separated terms kind:k:amplitude with kind in
/// {const, cos, sin}, e.g. "cos:1:0.01 sin:3:-0.002"; "0" is the zero field.
/// u0 is "lift" (the lift of eta1) or the list of basis coefficients.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsilab/basis.hpp"
#include "fsilab/fixedpoint.hpp"
#include "fsilab/spectral.hpp"

namespace fsilab {

struct SpectralTerm {
  enum class Kind { Const, Cos, Sin } kind = Kind::Cos;
  int k = 0;
  double amplitude = 0.0;
  bool operator==(const SpectralTerm&) const = default;
};

struct SpectralSpec {
  std::vector<SpectralTerm> terms;
  Displacement build(int band) const;
  bool is_zero() const;
  bool operator==(const SpectralSpec&) const = default;
};

enum class RunMode { ShellOnly, LinearCoupled, FixedPoint, EpsilonSweep };
std::string to_string(RunMode m);

struct RunConfig {
  // geometry
  int interface_dim = 1;
  double box_height = 1.0;
  double collar_L = 0.5;
  double margin_factor = 0.95;
  int gauss_order = 8;
  int trapezoid_points = 0;
  // discretization
  int basis_N = 8;
  int spectral_band = 16;
  double dt = 1.0 / 256.0;
  double horizon = 0.5;
  int assembly_stride = 1;
  // physics
  double eps_visc = 0.01;
  double eps_reg = 0.01;
  int noise_modes = 0;
  std::vector<double> kappa;
  SpectralSpec forcing;
  // data
  SpectralSpec eta0, eta1;
  std::optional<std::vector<double>> u0;  ///< empty means the lift of eta1
  // solver
  RunMode mode = RunMode::LinearCoupled;
  std::string scheme = "ito";  ///< shell-only: ito | heun
  bool milstein = true;
  double tol = 1e-8;
  int max_iter = 30;
  double damping = 1.0;
  double eps = 0.01;
  std::vector<double> eps_list = {1e-1, 1e-2, 1e-3};
  double frac_s = 0.45;
  // rng
  std::uint64_t seed = 1;
  int ensemble_size = 1;
  // output
  std::string output_dir = "run";
  int record_every = 1;

  bool operator==(const RunConfig&) const = default;

  int steps() const;
  ReferenceGeometry geometry() const;
  GalerkinBasis basis() const;
  std::vector<TransportField> noise() const;
  InitialData initial_data() const;
  ProblemData problem() const;
};

/// Parses and validates.  Throws ParseError (line, field) or ValidationError.
RunConfig load_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
/// Parses without validation.
RunConfig parse_config(const std::string& text);
/// Throws ValidationError naming the violated invariant.
void validate(const RunConfig& cfg);
/// Canonical text; parse_config(dump(c)) == c.
std::string dump(const RunConfig& cfg);
/// FNV-1a of the canonical dump.
std::uint64_t config_hash(const RunConfig& cfg);

std::string format_double(double x);

}  // namespace fsilab
