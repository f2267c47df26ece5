#include <doctest.h>

#include <cmath>
#include <random>

#include "fsilab/analysis.hpp"
#include "fsilab/errors.hpp"

using namespace fsilab;
using geometry::make_vec;

namespace {
ReferenceGeometry box(int band = 12) { return ReferenceGeometry::flat_box(1, 1.0, 0.5, band); }

Displacement random_field(std::mt19937_64& g, int band, int max_k, double amp, bool zero_mean) {
  std::normal_distribution<double> n(0.0, 1.0);
  Displacement d(1, band);
  if (!zero_mean) d.set_coeff({0, 0}, amp * n(g));
  for (int k = 1; k <= max_k; ++k) d.set_coeff({k, 0}, amp / k * cplx(n(g), n(g)));
  return d;
}
}  // namespace

TEST_CASE("oracle: difference quotient of a single mode") {
  auto f = Displacement::cosine(1, 8, {2, 0}, 1.0);
  double h = 0.3, s = 0.4;
  auto q = frac_diff_quotient(f, h, s);
  double y = 1.2;
  CHECK(q(y) == doctest::Approx(std::pow(h, -s) * (std::cos(2 * (y + h)) - std::cos(2 * y))));
  CHECK_THROWS(frac_diff_quotient(f, 0.0, s));
  CHECK_THROWS(frac_diff_quotient(f, h, 0.6));
}

TEST_CASE("Gagliardo form agrees with the spectral seminorm") {
  std::mt19937_64 g(4);
  for (double s : {0.1, 0.25, 0.45}) {
    auto f = random_field(g, 10, 10, 0.1, false);
    double spec = f.seminorm_sq(2.0 + s);
    double quot = gagliardo_seminorm_sq(f, s);
    CHECK(quot == doctest::Approx(spec).epsilon(1e-6));
  }
  // single mode: |k|^{4 + 2 s} pi amp^2
  auto c = Displacement::sine(1, 6, {3, 0}, 0.5);
  CHECK(gagliardo_seminorm_sq(c, 0.3) == doctest::Approx(std::pow(3.0, 4.6) * M_PI * 0.25).epsilon(1e-6));
}

TEST_CASE("frac report on a constant-in-time series") {
  auto f = Displacement::cosine(1, 8, {1, 0}, 0.1);
  std::vector<Displacement> series(11, f);
  auto r = frac_sobolev_report(series, 0.1, 0.45, {M_PI / 2, M_PI / 4});
  // int_0^1 of a constant
  CHECK(r.spectral_seminorm == doctest::Approx(f.seminorm_sq(2.45)));
  CHECK(r.relative_gap() < 1e-6);
  // |Delta_h^s cos|^2_{W^{2,2}} = h^{-2s} 4 sin^2(h/2) |cos|^2_{W^{2,2}}
  double expect = std::pow(M_PI / 2, -0.9) * 4 * std::pow(std::sin(M_PI / 4), 2) * f.sobolev_norm_sq(2.0);
  CHECK(r.ladder[0] == doctest::Approx(expect));
  CHECK(r.dyadic_ratio.size() == 1);
}

TEST_CASE("corrector") {
  auto g = box();
  auto eta = Displacement::cosine(1, 12, {1, 0}, 0.1);
  auto xi = Displacement::sine(1, 12, {2, 0}, 0.3) + Displacement::constant(1, 12, 0.2);
  CHECK(corrector(g, eta, xi) == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(corrector(g, Displacement(1, 12), xi, CorrectorWeight::Jacobian) == doctest::Approx(0.2).epsilon(1e-13));
  // idempotence: K(K xi) = K xi
  double k = corrector(g, eta, xi, CorrectorWeight::Jacobian);
  CHECK(corrector(g, eta, Displacement::constant(1, 12, k), CorrectorWeight::Jacobian) == doctest::Approx(k));
  // the corrected datum has zero unit-weight corrector
  CHECK(std::abs(corrector(g, eta, xi - Displacement::constant(1, 12, corrector(g, eta, xi)))) < 1e-15);
}

TEST_CASE("property: solenoidal extension on random data") {
  auto g = box();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto eta = random_field(rng, 12, 3, 0.02, false);
    auto xi = random_field(rng, 12, 5, 0.1, true);
    auto ext = solenoidal_extension(g, eta, xi);
    auto rep = check_extension(g, eta, xi, ext);
    CHECK(rep.max_divergence < 1e-10);
    CHECK(rep.max_trace_error < 1e-9);
    CHECK(rep.max_outside_collar == 0.0);
    CHECK(rep.norm_ratio > 0.0);
  }
  auto bad = Displacement::constant(1, 12, 0.1);
  CHECK_THROWS_AS(solenoidal_extension(g, Displacement(1, 12), bad), IncompatibleDatum);
}

TEST_CASE("projection onto the lift traces") {
  auto basis = build_basis(box(), 8);
  auto b = Displacement::cosine(1, 12, {1, 0}, 0.2) + Displacement::sine(1, 12, {7, 0}, 0.05);
  auto r = projection_check(basis, b);
  CHECK(r.residual_l2 == doctest::Approx(std::sqrt(M_PI) * 0.05));
  for (double x : r.ratio) CHECK(x <= 1.0 + 1e-12);
  CHECK(r.contraction_w3);
}

TEST_CASE("test admissibility") {
  auto g = box();
  auto modes = enumerate_modes(1.0, 12);
  for (const auto& m : modes) CHECK_NOTHROW(check_test_field(g, TestField::from_mode(m, 12)));
  TestField shear{"shear", [](double, double z) {
                    FieldSample s;
                    s.w = Eigen::Vector2d(z + 1.0, 0.0);
                    s.Dw(0, 1) = 1.0;
                    return s;
                  },
                  Displacement(1, 12)};
  CHECK_THROWS_AS(check_test_field(g, shear), InadmissibleTest);
  TestField wrong_trace = TestField::from_mode(modes[0], 12);
  wrong_trace.trace = 2.0 * wrong_trace.trace;
  CHECK_THROWS_AS(check_test_field(g, wrong_trace), InadmissibleTest);
  TestField source{"source", [](double y, double) {
                     FieldSample s;
                     s.w = Eigen::Vector2d(std::cos(y), 0.0);
                     s.Dw(0, 0) = -std::sin(y);
                     return s;
                   },
                   Displacement(1, 12)};
  CHECK_THROWS_AS(check_test_field(g, source), InadmissibleTest);
}

TEST_CASE("weak-form residual decays with the step") {
  auto basis = build_basis(box(), 6);
  AssemblyContext ctx(basis);
  PhysicsParams phys;
  phys.eps_visc = 0.01;
  phys.eps_reg = 0.01;
  phys.noise = {TransportField::constant(1, 0.2)};
  InitialData data{Displacement::cosine(1, 12, {1, 0}, 0.02), Displacement::sine(1, 12, {1, 0}, 0.05), {}};
  auto track = GeometryTrack::frozen(data.eta0);
  auto extra = enumerate_modes(1.0, 6);
  std::vector<TestField> tests;
  for (int i = 0; i < 6; ++i) tests.push_back(TestField::from_mode(extra[i], 12));
  BrownianPath path(5, 0.25, 32, 2);
  double prev = INFINITY;
  for (int l = 0; l <= 2; ++l) {
    LinearRunOptions opt;
    opt.horizon = 0.25;
    opt.level = l;
    auto tr = run_linear(ctx, track, data, phys, {path}, opt);
    auto wf = weakform_residual(tr, ctx, tests, track, phys);
    // first order in dt
    if (l > 0) CHECK(prev / wf.max_abs == doctest::Approx(2.0).epsilon(0.1));
    prev = wf.max_abs;
  }
  CHECK(prev < 2e-3);
}
