#include <doctest.h>

#include <cmath>

#include "fsilab/fixedpoint.hpp"

using namespace fsilab;

namespace {
struct Setup {
  ReferenceGeometry geom = ReferenceGeometry::flat_box(1, 1.0, 0.5, 8);
  GalerkinBasis basis = build_basis(geom, 6);
  AssemblyContext ctx{basis};
  PicardOptions opt;
  std::vector<BrownianPath> paths = make_paths(21, 1, 0.25, 32, 0);
  Setup() {
    opt.horizon = 0.25;
    opt.tol = 1e-10;
  }
  ProblemData data(double delta) const {
    ProblemData d;
    d.initial.eta0 = Displacement::cosine(1, 8, {1, 0}, delta);
    d.initial.eta1 = Displacement::sine(1, 8, {1, 0}, 2 * delta);
    d.noise = {TransportField::constant(1, 0.2)};
    return d;
  }
};
}  // namespace

TEST_CASE("zero data converges in one iteration to zero") {
  Setup s;
  auto r = picard_solve(s.ctx, s.data(0.0), 0.01, s.paths, s.opt);
  CHECK(r.converged);
  CHECK(r.iterations() == 1);
  CHECK(r.residual == 0.0);
  for (const auto& a : r.solution.alpha) CHECK(a.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small data: first residual is quadratic in the data size") {
  Setup s;
  std::vector<double> rho;
  for (double d : {1e-2, 1e-3}) rho.push_back(picard_solve(s.ctx, s.data(d), 0.01, s.paths, s.opt).records[0].residual);
  double slope = std::log10(rho[0] / rho[1]);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("determinism and self-reproduction") {
  Setup s;
  auto d = s.data(0.02);
  auto a = picard_solve(s.ctx, d, 0.01, s.paths, s.opt);
  auto b = picard_solve(s.ctx, d, 0.01, s.paths, s.opt);
  REQUIRE(a.converged);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].output_eta == b.records[i].output_eta);
    CHECK(a.records[i].residual == b.records[i].residual);
  }
  auto again = picard_map(s.ctx, d, 0.01, s.paths, s.opt, &a.solution);
  double ep, up;
  auto gram = s.ctx.assemble(Snapshot{0.0, Displacement(1, 8), Displacement(1, 8), {}}, PhysicsParams{}).a_fluid;
  iterate_distance(again, a.solution, gram, ep, up);
  CHECK(ep + up <= 10 * s.opt.tol);
}

TEST_CASE("epsilon sweep checks its list and reports zero norms for zero data") {
  Setup s;
  CHECK_THROWS(epsilon_sweep(s.ctx, s.data(0.0), {0.01, 0.1}, s.paths, s.opt));
  CHECK_THROWS(epsilon_sweep(s.ctx, s.data(0.0), {0.1, -0.01}, s.paths, s.opt));
  auto sw = epsilon_sweep(s.ctx, s.data(0.0), {0.1, 0.01}, s.paths, s.opt);
  REQUIRE(sw.size() == 2);
  for (const auto& e : sw) {
    CHECK(e.converged);
    CHECK(e.sup_w22 == 0.0);
    CHECK(e.eps_sup_w32_sq == 0.0);
  }
}

TEST_CASE("property: stop time is non-decreasing in the margin") {
  std::vector<double> t;
  std::vector<Displacement> eta;
  for (int n = 0; n <= 50; ++n) {
    t.push_back(0.01 * n);
    eta.push_back(Displacement::constant(1, 4, 0.004 * n));
  }
  auto small = stopping_monitor(t, eta, 0.05);
  CHECK(small.stopped);
  CHECK(small.stop_time == doctest::Approx(0.13));
  double prev = 0.0;
  for (double m : {0.01, 0.05, 0.1, 0.15, 0.19}) {
    auto r = stopping_monitor(t, eta, m);
    REQUIRE(r.stopped);
    CHECK(r.stop_time >= prev);
    CHECK(r.max_sup < m);
    prev = r.stop_time;
  }
  CHECK(!stopping_monitor(t, eta, 0.5).stopped);
}
