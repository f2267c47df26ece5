#include <doctest.h>

#include <cmath>

#include "fsilab/analysis.hpp"
#include "fsilab/coupled.hpp"
#include "fsilab/errors.hpp"

using namespace fsilab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
ReferenceGeometry box() { return ReferenceGeometry::flat_box(1, 1.0, 0.5, 12); }
Snapshot flat(int band = 12) { return Snapshot{0.0, Displacement(1, band), Displacement(1, band), {}}; }
}  // namespace

TEST_CASE("oracle: mass entry of the first lift on the flat box") {
  auto basis = build_basis(box(), 6);
  MatrixXd a = assemble_mass(basis, Displacement(1, 12));
  // pi (1 + int P'^2 + int P^2), P = 3 z^2 - 2 z^3 on (0, 1)
  CHECK(a(0, 0) == doctest::Approx(18.0 * M_PI / 7.0).epsilon(1e-12));
  // cos and sin lifts are orthogonal
  CHECK(std::abs(a(0, 2)) < 1e-13);
}

TEST_CASE("property: mass matrix symmetric positive definite on deformed geometries") {
  auto basis = build_basis(box(), 8);
  for (double amp : {0.0, 0.03, 0.1}) {
    auto zeta = Displacement::cosine(1, 12, {1, 0}, amp) + Displacement::sine(1, 12, {2, 0}, 0.3 * amp);
    MatrixXd a = assemble_mass(basis, zeta);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("block structure") {
  auto basis = build_basis(box(), 8);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.eps_visc = 0.01;
  phys.eps_reg = 0.01;
  phys.noise = {TransportField::constant(1, 0.3)};
  Snapshot snap{0.0, Displacement::cosine(1, 12, {1, 0}, 0.05), Displacement::sine(1, 12, {1, 0}, 0.02), {}};
  auto sys = ctx.assemble(snap, phys);
  // viscous block is symmetric negative semidefinite
  CHECK((sys.b_visc - sys.b_visc.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sys.b_visc);
  CHECK(es.eigenvalues().maxCoeff() < 1e-12);
  // constant transport gives a skew noise operator: alpha.e alpha = 0
  CHECK((sys.e[0] + sys.e[0].transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.c + sys.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.b_iota.cwiseAbs().maxCoeff() == 0.0);
  CHECK((sys.a - sys.a_fluid - sys.a_interface).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero data gives the zero trajectory") {
  auto basis = build_basis(box(), 6);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.noise = {TransportField::constant(1, 0.5)};
  InitialData data{Displacement(1, 12), Displacement(1, 12), {}};
  LinearRunOptions opt;
  opt.horizon = 0.25;
  auto paths = make_paths(3, 1, 0.25, 32, 0);
  auto tr = run_linear(ctx, GeometryTrack::frozen(Displacement(1, 12)), data, phys, paths, opt);
  REQUIRE(tr.alpha.size() == 33);
  for (const auto& a : tr.alpha) CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& e : tr.eta) CHECK(e.sup_norm() == 0.0);
}

TEST_CASE("initial coefficients and incompatible data") {
  auto basis = build_basis(box(), 6);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  InitialData ok{Displacement(1, 12), Displacement::cosine(1, 12, {1, 0}, 0.1), {}};
  auto a0 = initial_coefficients(ctx, ok, flat(), phys);
  CHECK((basis.trace_of(a0) - ok.eta1).l2_norm_sq() < 1e-24);
  InitialData bad{Displacement(1, 12), Displacement::constant(1, 12, 0.1), {}};
  CHECK_THROWS_AS(initial_coefficients(ctx, bad, flat(), phys), IncompatibleDatum);
  CHECK(trace_mismatch(basis, bad) == doctest::Approx(0.1));
}

TEST_CASE("kinematic coupling, determinism and order insensitivity") {
  auto basis = build_basis(box(), 8);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.eps_visc = 0.01;
  phys.eps_reg = 0.01;
  phys.noise = {TransportField::constant(1, 0.3)};
  InitialData data{Displacement::cosine(1, 12, {1, 0}, 0.03), Displacement::sine(1, 12, {2, 0}, 0.05), {}};
  auto track = GeometryTrack::prescribed(
      [](double t) { return Displacement::cosine(1, 12, {1, 0}, 0.03 * std::cos(t)); },
      [](double t) { return Displacement::cosine(1, 12, {1, 0}, -0.03 * std::sin(t)); });
  LinearRunOptions opt;
  opt.horizon = 0.25;
  auto paths = make_paths(11, 1, 0.25, 32, 0);
  auto a = run_linear(ctx, track, data, phys, paths, opt);
  auto b = run_linear(ctx, track, data, phys, paths, opt);
  opt.assembly.reverse_node_order = true;
  auto c = run_linear(ctx, track, data, phys, paths, opt);
  for (std::size_t n = 0; n < a.alpha.size(); ++n) {
    CHECK(a.alpha[n] == b.alpha[n]);
    CoupledState s{a.t[n], a.alpha[n], a.eta[n], a.xi[n]};
    CHECK(trace_residual(s, basis, track.at(a.t[n]).zeta) < 1e-8);
  }
  CHECK((a.alpha.back() - c.alpha.back()).cwiseAbs().maxCoeff() < 1e-10);
  for (double e : a.a_min_eig) CHECK(e > 0.0);
  for (double s : a.a_asym) CHECK(s < 1e-12);
}

TEST_CASE("property: noiseless energy balance closes at first order") {
  auto basis = build_basis(box(), 6);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.eps_visc = 0.01;
  phys.eps_reg = 0.01;
  InitialData data{Displacement::cosine(1, 12, {1, 0}, 0.02), Displacement::sine(1, 12, {1, 0}, 0.05), {}};
  auto track = GeometryTrack::frozen(data.eta0);
  double prev = INFINITY;
  for (int steps : {32, 64, 128}) {
    LinearRunOptions opt;
    opt.horizon = 0.25;
    auto tr = run_linear(ctx, track, data, phys, {BrownianPath(1, 0.25, steps, 0)}, opt);
    auto led = energy_ledger(tr, ctx, track, phys);
    double r = led.final_residual();
    CHECK(r < prev * 0.65);
    prev = r;
    CHECK(led.max_inequality_violation() <= led.max_residual() + 1e-15);
  }
}

TEST_CASE("stopping via the margin") {
  auto basis = build_basis(box(), 6);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.forcing = Displacement::cosine(1, 12, {1, 0}, 50.0);
  InitialData data{Displacement::cosine(1, 12, {1, 0}, 0.05), Displacement(1, 12), {}};
  LinearRunOptions opt;
  opt.horizon = 0.5;
  opt.step.margin = 0.1;
  auto tr = run_linear(ctx, GeometryTrack::frozen(Displacement(1, 12)), data, phys, {BrownianPath(1, 0.5, 128, 0)},
                       opt);
  CHECK(tr.stopped);
  CHECK(tr.stop_time < 0.5);
  for (const auto& e : tr.eta) CHECK(e.sup_norm() < 0.1);
  opt.step.margin = 0.02;
  CHECK_THROWS_AS(run_linear(ctx, GeometryTrack::frozen(Displacement(1, 12)), data, phys,
                             {BrownianPath(1, 0.5, 128, 0)}, opt),
                  DisplacementTooLarge);
}
