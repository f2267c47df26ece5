#pragma once

/// @file coupled.hpp
/// @brief Coefficient assembly and time integration of the linear Galerkin SDE
///
///   d[a(t) alpha] = b(t)^T alpha dt + f_el(eta^N) dt + sum_m e_m(t)^T alpha dB_m,
///   d eta^N = xi dt,   xi = sum_i alpha_i iota w_i,
///
/// over a prescribed geometry (zeta, d_t zeta, v).  The stiffness history is carried by
/// eta^N itself: f_el(eta)_j = -<eta, iota w_j>_el, which equals -d_j - int_0^t c(t,s) alpha(s) ds
/// with the memory kernel c = -S.

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fsilab/basis.hpp"
#include "fsilab/noise.hpp"
#include "fsilab/shell.hpp"

namespace fsilab {

/// Regularized geometry at one time.  v = sum_k beta_k J_zeta w_k (empty beta means v = 0).
struct Snapshot {
  double t = 0.0;
  Displacement zeta;
  Displacement zeta_t;
  Eigen::VectorXd beta;
};

class GeometryTrack {
 public:
  using Fn = std::function<Snapshot(double)>;
  GeometryTrack() = default;
  GeometryTrack(Fn fn, bool is_static) : fn_(std::move(fn)), static_(is_static) {}

  static GeometryTrack frozen(Displacement zeta);
  static GeometryTrack prescribed(std::function<Displacement(double)> zeta, std::function<Displacement(double)> zeta_t);
  /// Samples at t_n = n dt, linearly interpolated in between.
  static GeometryTrack sampled(double dt, std::vector<Displacement> zeta, std::vector<Displacement> zeta_t,
                               std::vector<Eigen::VectorXd> beta = {});

  Snapshot at(double t) const;
  bool is_static() const { return static_; }

 private:
  Fn fn_;
  bool static_ = true;
};

struct PhysicsParams {
  double eps_visc = 0.0;
  double eps_reg = 0.0;
  std::vector<TransportField> noise;   ///< one field per Brownian mode
  Displacement forcing;                ///< shell load g, empty means zero
  /// Replace b_ito by the correction that makes the Galerkin noise energy neutral,
  /// 1/2 sum_m e_m a^{-1} e_m^T (in the row convention used for b).
  bool galerkin_ito = false;
};

struct AssemblyOptions {
  bool time_derivative = true;
  bool convection = true;
  bool boundary_motion = true;
  bool viscous = true;
  bool eps_dissipation = true;
  bool ito_correction = true;
  bool reverse_node_order = false;  ///< sum the quadrature in reverse (order-sensitivity checks)
};

/// All blocks at one time; rows are trial indices i, columns test indices j.
struct CoefficientSystem {
  double t = 0.0;
  double eps_reg = 0.0;
  Eigen::MatrixXd a, a_fluid, a_interface;
  Eigen::MatrixXd b, b_time, b_conv, b_boundary, b_visc, b_eps, b_ito, b_iota;
  Eigen::MatrixXd S;                 ///< <iota w_i, iota w_j>_el
  Eigen::MatrixXd c;                 ///< memory kernel c(t, t) = -S
  Eigen::VectorXd d;                 ///< -<eta_0, iota w_j>_el, filled when eta_0 is supplied
  Eigen::VectorXd g;                 ///< <g, iota w_j>
  std::vector<Eigen::MatrixXd> e;    ///< per noise mode
  std::vector<Displacement> test_traces;  ///< iota w_j on Gamma
};

/// A test field for the weak form: reference field with derivatives, plus its scalar trace.
struct TestField {
  std::string label;
  std::function<FieldSample(double y, double z)> sample;
  Displacement trace;
  static TestField from_mode(const StreamMode& m, int band);
};

/// Time-independent node data (quadrature and mode samples) for a trial/test pair of field lists.
class AssemblyContext {
 public:
  explicit AssemblyContext(const GalerkinBasis& basis);
  /// Trial fields from the basis, test fields arbitrary (used by the weak-form residual).
  AssemblyContext(const GalerkinBasis& basis, std::vector<TestField> test);

  const GalerkinBasis& basis() const { return basis_; }
  int trial_size() const { return basis_.size(); }
  int test_size() const { return int(test_.size()); }

  CoefficientSystem assemble(const Snapshot& snap, const PhysicsParams& phys, const AssemblyOptions& opt = {},
                             const Displacement* eta0 = nullptr) const;

 private:
  struct NodeFields {
    std::vector<FieldSample> samples;  ///< node-major: samples[q * count + i]
    std::vector<Displacement> traces;
    int count = 0;
  };
  NodeFields sample_fields(const std::vector<TestField>& fields) const;

  GalerkinBasis basis_;
  std::vector<TestField> test_;
  std::vector<geometry::QuadratureNode> nodes_;
  int ny_ = 0, nz_ = 0;
  NodeFields trial_nodes_, test_nodes_;
  bool same_ = true;
};

// Single-block forms (flat box, all from one AssemblyContext::assemble).
Eigen::MatrixXd assemble_mass(const GalerkinBasis& basis, const Displacement& zeta);
Eigen::MatrixXd assemble_drift(const GalerkinBasis& basis, const Snapshot& snap, const PhysicsParams& phys,
                               const AssemblyOptions& opt = {});
Eigen::MatrixXd assemble_memory(const GalerkinBasis& basis, const Displacement& zeta_t, const Displacement& zeta_s,
                                double eps_reg);
Eigen::VectorXd assemble_load(const GalerkinBasis& basis, const Displacement& zeta, const Displacement& eta0,
                              double eps_reg);
Eigen::MatrixXd assemble_noise(const GalerkinBasis& basis, const Displacement& zeta, const TransportField& kappa);

struct CoupledState {
  double t = 0.0;
  Eigen::VectorXd alpha;
  Displacement eta;  ///< eta^N
  Displacement xi;   ///< d_t eta^N = sum alpha_i iota w_i
};

struct StepOptions {
  bool milstein = true;
  double margin = std::numeric_limits<double>::infinity();
};

/// One step from t_n to t_n + dt: backward Euler on the drift, trapezoid for eta^N,
/// explicit Ito noise at t_n with the commutative Milstein term when enabled.
CoupledState sde_step(const CoupledState& s, const CoefficientSystem& now, const CoefficientSystem& next,
                      const std::vector<double>& dB, double dt, const StepOptions& opt = {});

struct InitialData {
  Displacement eta0;
  Displacement eta1;
  /// u_0 = sum gamma_i J_{zeta(0)} w_i; empty selects the lift of eta_1.
  std::optional<Eigen::VectorXd> u0;
};

/// Largest |sum gamma_i w_i - eta_1| at the interface nodes.
double trace_mismatch(const GalerkinBasis& basis, const InitialData& data);
/// a-weighted projection of (u_0, eta_1) onto the ansatz space.  Throws IncompatibleDatum when
/// the trace mismatch exceeds `tol`.
Eigen::VectorXd initial_coefficients(const AssemblyContext& ctx, const InitialData& data, const Snapshot& snap0,
                                     const PhysicsParams& phys, double tol = 1e-9);

struct LinearRunOptions {
  double horizon = 0.5;
  int level = 0;            ///< Brownian level used as the time grid
  int assembly_stride = 1;  ///< assemble every k steps and interpolate linearly in between
  StepOptions step;
  AssemblyOptions assembly;
};

struct CoupledTrajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> alpha;
  std::vector<Displacement> eta, xi;
  std::vector<std::vector<double>> dB;
  std::vector<double> a_min_eig, a_asym;  ///< per assembly
  bool stopped = false;
  double stop_time = std::numeric_limits<double>::quiet_NaN();
  double stop_sup = std::numeric_limits<double>::quiet_NaN();
  double dt = 0.0;
};

CoupledTrajectory run_linear(const AssemblyContext& ctx, const GeometryTrack& track, const InitialData& data,
                             const PhysicsParams& phys, const std::vector<BrownianPath>& paths,
                             const LinearRunOptions& opt);

struct ReconstructedFields {
  geometry::VectorField u;  ///< on O_zeta
  Displacement eta;
  Displacement eta_t;
};
ReconstructedFields reconstruct_fields(const CoupledState& s, const GalerkinBasis& basis, const Displacement& zeta);

/// max over interface nodes |u^N(phi_zeta(y)) - n d_t eta^N(y)|.
double trace_residual(const CoupledState& s, const GalerkinBasis& basis, const Displacement& zeta);

}  // namespace fsilab
