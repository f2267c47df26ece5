#pragma once

/// @file fixedpoint.hpp
/// @brief Damped Picard iteration of the regularized problem and the downward sweep in eps.
///
/// One application of the map takes an iterate Z = (eta, alpha) on the time grid, builds
///   zeta   = mollify_space(mollify_time(eta)),
///   zeta_t = mollify_space(mollify_time(d_t eta)),
///   v      = mollify_time(alpha) pushed forward by J_zeta,
/// and solves the linear coupled system over that geometry with the same Brownian path.

#include <cstdint>
#include <limits>
#include <vector>

#include "fsilab/analysis.hpp"
#include "fsilab/coupled.hpp"

namespace fsilab {

struct ProblemData {
  InitialData initial;
  std::vector<TransportField> noise;
  Displacement forcing;
};

struct PicardOptions {
  double tol = 1e-8;
  int max_iter = 30;
  double damping = 1.0;        ///< theta in Z_k = theta Y_k + (1 - theta) Z_{k-1}
  double fallback_damping = 0.5;  ///< used from the first residual increase onward
  double horizon = 0.5;
  int level = 0;
  int assembly_stride = 1;
  bool milstein = true;
  bool galerkin_ito = false;
  /// eta^N stopping threshold; NaN selects the geometry's L_margin.
  double margin = std::numeric_limits<double>::quiet_NaN();
  AssemblyOptions assembly;
};

struct IterationRecord {
  int iteration = 0;
  std::uint64_t input_eta = 0, input_u = 0;    ///< fingerprints of (zeta, v) source
  std::uint64_t output_eta = 0, output_u = 0;  ///< fingerprints of (eta, u)
  double residual = 0.0;      ///< eta_part + u_part
  double eta_part = 0.0;      ///< max over the space-time grid of |eta - zeta|
  double u_part = 0.0;        ///< L^2(I; L^2) distance of the velocities, reference metric
  double damping = 1.0;
  bool accepted = false;
};

struct PicardResult {
  CoupledTrajectory solution;  ///< final damped iterate
  GeometryTrack track;         ///< geometry built from the last input
  std::vector<IterationRecord> records;
  bool converged = false;
  bool stopped = false;        ///< an inner solve hit the stopping rule
  double stop_time = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
  int iterations() const { return int(records.size()); }
};

/// Physics of the eps problem: eps_visc = eps_reg = eps.
PhysicsParams regularized_physics(const ProblemData& data, double eps);

/// Geometry generated by an iterate; a null input gives the frozen mollified eta_0 with v = 0.
GeometryTrack iterate_geometry(const CoupledTrajectory* input, const ProblemData& data, double eps, double dt,
                               int band);

/// One application of the map.  Geometry failures surface as StoppingRule-flagged trajectories.
CoupledTrajectory picard_map(const AssemblyContext& ctx, const ProblemData& data, double eps,
                             const std::vector<BrownianPath>& paths, const PicardOptions& opt,
                             const CoupledTrajectory* input, GeometryTrack* track_out = nullptr);

std::uint64_t fingerprint(const std::vector<Displacement>& series);
std::uint64_t fingerprint(const std::vector<Eigen::VectorXd>& series);

/// Residual between two iterates on a common grid; `gram` is the fluid mass at zeta = 0.
void iterate_distance(const CoupledTrajectory& y, const CoupledTrajectory& z, const Eigen::MatrixXd& gram,
                      double& eta_part, double& u_part);

/// Does not throw on non-convergence; check `converged` (NonConvergence is raised by callers that need it).
PicardResult picard_solve(const AssemblyContext& ctx, const ProblemData& data, double eps,
                          const std::vector<BrownianPath>& paths, const PicardOptions& opt,
                          const CoupledTrajectory* warm_start = nullptr);

struct SweepOptions {
  double s = 0.45;
  std::vector<double> h_ladder;  ///< empty selects {pi/2, pi/(2 sqrt 2), pi/4, pi/(4 sqrt 2)}
};

struct EpsilonSummary {
  double eps = 0.0;
  bool converged = false;
  bool stopped = false;
  int iterations = 0;
  double residual = 0.0;
  double sup_w22 = 0.0;        ///< sup_t |eta|_{W^{2,2}}
  double eps_sup_w32_sq = 0.0; ///< eps sup_t |eta|^2_{W^{3,2}}
  FracNormReport frac;
  PicardResult result;
};

/// `eps_list` strictly decreasing and positive; every entry warm-starts from the previous solution.
std::vector<EpsilonSummary> epsilon_sweep(const AssemblyContext& ctx, const ProblemData& data,
                                          const std::vector<double>& eps_list, const std::vector<BrownianPath>& paths,
                                          const PicardOptions& opt, const SweepOptions& sweep = {});

struct StopReport {
  bool stopped = false;
  double stop_time = std::numeric_limits<double>::quiet_NaN();
  int stop_index = -1;
  double max_sup = 0.0;  ///< largest |eta|_inf among samples before the crossing
};

/// First sample with |eta|_inf >= margin, or survival over the whole series.
StopReport stopping_monitor(const std::vector<double>& t, const std::vector<Displacement>& eta, double margin);

}  // namespace fsilab
