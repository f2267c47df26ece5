#pragma once

/// @file analysis.hpp
/// @brief Energy ledgers, corrector and solenoidal extension, projection checks,
/// fractional difference quotients, and the weak-form residual.

#include <Eigen/Dense>

#include <vector>

#include "fsilab/coupled.hpp"
#include "fsilab/geometry.hpp"

namespace fsilab {

// ---- energy ledger ---------------------------------------------------------

struct LedgerRow {
  double t = 0.0;
  double fluid_kinetic = 0.0;      ///< 1/2 int |u|^2
  double interface_kinetic = 0.0;  ///< 1/2 int |d_t eta|^2
  double elastic = 0.0;            ///< 1/2 int |Lap eta|^2
  double regularizer = 0.0;        ///< eps_reg/2 int |grad^3 eta|^2
  double viscous = 0.0;            ///< accumulated int int |grad u|^2
  double eps_dissipation = 0.0;    ///< accumulated eps_visc int int |d_t Lap eta|^2
  double noise_defect = 0.0;       ///< accumulated -(alpha.b_ito alpha + 1/2 |e^T alpha|^2_{a^-1}), zero without noise
  double martingale = 0.0;         ///< accumulated sum dB alpha.e alpha
  double forcing_work = 0.0;       ///< accumulated int g d_t eta
  double lhs = 0.0, rhs = 0.0;
  double residual = 0.0;              ///< |lhs - rhs|
  double inequality_violation = 0.0;  ///< max(0, kinetic + elastic + viscous - rhs)
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
  double max_residual() const;
  double final_residual() const { return rows.empty() ? 0.0 : rows.back().residual; }
  double max_inequality_violation() const;
};

/// Re-assembles the system along the stored trajectory and evaluates every account.
/// Dissipation rates use the right endpoint of each step, noise terms the left one.
EnergyLedger energy_ledger(const CoupledTrajectory& traj, const AssemblyContext& ctx, const GeometryTrack& track,
                           const PhysicsParams& phys, const AssemblyOptions& opt = {});

// ---- corrector and extension ------------------------------------------------

enum class CorrectorWeight { Unit, Jacobian };

/// Weighted average of xi over the collar band -L/2 < s < -L/4.  The unit weight gives the
/// plain mean, the only choice for which xi - K(xi) always admits a solenoidal extension.
double corrector(const ReferenceGeometry& geom, const Displacement& eta, const Displacement& xi,
                 CorrectorWeight weight = CorrectorWeight::Unit);

struct SolenoidalExtension {
  geometry::VectorField field;                             ///< on physical points near O_eta
  std::function<geometry::Mat(const geometry::Vec&)> gradient;
  double support_depth = 0.0;  ///< field vanishes for z < eta(y) - support_depth
};

/// u = curl(-F(y) chi(z - eta(y))) with F' = xi and chi a quintic step from 0 at -beta to 1 at 0,
/// beta = L_margin - |eta|_inf.  Throws IncompatibleDatum unless xi has zero mean.
SolenoidalExtension solenoidal_extension(const ReferenceGeometry& geom, const Displacement& eta,
                                         const Displacement& xi);

struct ExtensionReport {
  double max_divergence = 0.0;
  double max_trace_error = 0.0;
  double max_outside_collar = 0.0;
  double norm_ratio = 0.0;  ///< |F xi|_{W^{1,2}} / (|xi|_{W^{1,2}} + |xi grad eta|_{L^2})
};
ExtensionReport check_extension(const ReferenceGeometry& geom, const Displacement& eta, const Displacement& xi,
                                const SolenoidalExtension& ext);

// ---- fractional regularity ---------------------------------------------------

/// h^{-s} (eta(. + h e_dir) - eta).
Displacement frac_diff_quotient(const Displacement& eta, double h, double s, int direction = 0);

struct FracNormReport {
  double s = 0.0;
  std::vector<double> h;
  std::vector<double> ladder;     ///< int_I |Delta_h^s eta|^2_{W^{2,2}} dt
  double ladder_ratio = 0.0;      ///< max / min over the ladder
  std::vector<double> dyadic_ratio;  ///< ladder[i] / ladder[i+1]
  double spectral_norm = 0.0;     ///< int_I |eta|^2_{W^{s+2,2}} dt
  double spectral_seminorm = 0.0; ///< int_I |eta|^2_{W^{s+2,2}, semi} dt
  double quotient_seminorm = 0.0; ///< the same seminorm from the periodic Gagliardo difference quotient
  double relative_gap() const;    ///< |quotient - spectral| / spectral
};

/// Gagliardo form of |D^2 f|^2_{W^{s,2}} on the periodic line, normalized to agree with
/// sum |k|^{4+2s} |c_k|^2 |Gamma|.
double gagliardo_seminorm_sq(const Displacement& f, double s, int quad_points = 256);

/// `series` sampled at t_n = n dt; time integrals use the trapezoid rule.
FracNormReport frac_sobolev_report(const std::vector<Displacement>& series, double dt, double s,
                                   const std::vector<double>& h_ladder);

// ---- projection --------------------------------------------------------------

struct ProjectionReport {
  Displacement projected;
  std::vector<double> s;
  std::vector<double> ratio;  ///< |P b|_{W^{s,2}} / |b|_{W^{s,2}}
  double residual_l2 = 0.0;   ///< |b - P b|_{L^2}
  bool contraction_w3 = true;
};

/// P^N b: truncation of b onto the span of the basis traces.
ProjectionReport projection_check(const GalerkinBasis& basis, const Displacement& b,
                                  const std::vector<double>& s = {0.0, 1.0, 2.0, 3.0});

// ---- weak form ---------------------------------------------------------------

/// Throws InadmissibleTest unless the field is divergence free, equals trace * n on the
/// moving face and vanishes on the rigid bottom, each to `tol` at the quadrature nodes.
void check_test_field(const ReferenceGeometry& geom, const TestField& f, double tol = 1e-8);

struct WeakFormResult {
  Eigen::VectorXd per_test;  ///< residual of each test field (signed)
  double max_abs = 0.0;
};

/// Time-integrated Galerkin weak form tested against `test` fields:
///   [alpha.a phi]_0^T - int (alpha.b phi + f_el phi) dt - int alpha.e phi dB,
/// drift by the trapezoid rule, stochastic integral left-point with the iterated-integral term.
WeakFormResult weakform_residual(const CoupledTrajectory& traj, const AssemblyContext& trial_ctx,
                                 const std::vector<TestField>& test, const GeometryTrack& track,
                                 const PhysicsParams& phys, const AssemblyOptions& opt = {}, bool milstein = true);

}  // namespace fsilab
