#include <doctest.h>

#include <cmath>
#include <random>

#include "fsilab/errors.hpp"
#include "fsilab/geometry.hpp"

using namespace fsilab;
using geometry::make_vec;
using geometry::Vec;

namespace {
ReferenceGeometry box(int band = 8) { return ReferenceGeometry::flat_box(1, 1.0, 0.5, band); }
}  // namespace

TEST_CASE("cutoff breakpoints and derivative bound") {
  geometry::Cutoff c(0.5);
  CHECK(c.value(0.0) == 1.0);
  CHECK(c.value(-0.125) == 1.0);
  CHECK(c.value(-0.375) == 0.0);
  CHECK(c.value(-0.25) == doctest::Approx(0.5));
  // quintic smoothstep over a width L/2 peaks at 15 / (4 L)
  CHECK(c.d1(-0.25) == doctest::Approx(7.5));
  CHECK(c.d1(-0.1) == 0.0);
  CHECK(c.d2(-0.25) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Gauss-Legendre is exact for degree 2n - 1") {
  std::vector<double> x, w;
  geometry::gauss_legendre(8, -1.0, 2.0, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 15);
  CHECK(s == doctest::Approx((std::pow(2.0, 16) - 1.0) / 16.0).epsilon(1e-13));
}

TEST_CASE("Hanzawa map is the identity at eta = 0 and outside the collar") {
  auto g = box();
  Displacement zero(1, 8);
  auto bump = Displacement::cosine(1, 8, {2, 0}, 0.1);
  for (double y : {0.0, 1.1, 4.0})
    for (double z : {-0.9, -0.5, -0.2, 0.0}) {
      Vec X = make_vec({y, z});
      CHECK((geometry::hanzawa_map(g, zero, X) - X).norm() == 0.0);
      if (z <= -0.375) CHECK((geometry::hanzawa_map(g, bump, X) - X).norm() == 0.0);
    }
  // top face moves by eta
  Vec top = geometry::hanzawa_map(g, bump, make_vec({0.0, 0.0}));
  CHECK(top(1) == doctest::Approx(0.1));
}

TEST_CASE("oracle: Jacobian of the flat Hanzawa map") {
  auto g = box();
  auto eta = Displacement::sine(1, 8, {1, 0}, 0.08);
  geometry::Cutoff c(0.5);
  double y = 0.9, z = -0.3;
  auto J = geometry::hanzawa_gradient(g, eta, make_vec({y, z}));
  CHECK(J.F(0, 0) == 1.0);
  CHECK(J.F(0, 1) == 0.0);
  CHECK(J.F(1, 0) == doctest::Approx(0.08 * std::cos(y) * c.value(z)));
  CHECK(J.F(1, 1) == doctest::Approx(1.0 + 0.08 * std::sin(y) * c.d1(z)));
  CHECK(J.det == doctest::Approx(J.F(1, 1)));
}

TEST_CASE("property: inverse and Piola round trips") {
  auto g = box(12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Displacement eta(1, 12);
    for (int k = 1; k <= 4; ++k) eta.set_coeff({k, 0}, 0.02 / k * cplx(U(rng) - 0.5, U(rng) - 0.5));
    Deformation def(g, eta);
    auto v = [](const Vec& X) { return make_vec({std::sin(X(0)) * X(1), std::cos(X(0)) + X(1) * X(1)}); };
    auto pv = def.piola(v);
    auto back = def.piola_inverse(pv);
    for (int i = 0; i < 5; ++i) {
      Vec X = make_vec({2 * M_PI * U(rng), -U(rng)});
      CHECK((def.inverse(def.map(X)) - X).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((back(X) - v(X)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("property: deformed volume is 2 pi H + int eta") {
  auto g = box(8);
  auto eta = Displacement::cosine(1, 8, {1, 0}, 0.05) + Displacement::constant(1, 8, 0.03);
  double vol = geometry::moving_domain_integral(g, eta, [](const Vec&) { return 1.0; });
  CHECK(vol == doctest::Approx(2 * M_PI * 1.0 + 2 * M_PI * 0.03).epsilon(1e-12));
}

TEST_CASE("trace law and normal on the flat box") {
  auto g = box();
  auto eta = Displacement::cosine(1, 8, {1, 0}, 0.05);
  double y = 0.4;
  Vec n = geometry::deformed_normal(g, eta, make_vec({y}));
  double slope = -0.05 * std::sin(y);
  CHECK(n(0) == doctest::Approx(-slope / std::sqrt(1 + slope * slope)));
  CHECK(n.norm() == doctest::Approx(1.0));
  CHECK(geometry::iota_factor(g, eta, make_vec({y})) == doctest::Approx(1.0));
}

TEST_CASE("errors") {
  auto g = box();
  CHECK_THROWS_AS(Deformation(g, Displacement::constant(1, 8, 0.48)), DisplacementTooLarge);
  // folding: |eta| above 4L/15 with a sign that makes det negative
  auto big = Displacement::constant(1, 8, -0.2);
  CHECK_THROWS_AS(geometry::hanzawa_gradient(g, big, make_vec({0.0, -0.25})), OrientationLost);
}

TEST_CASE("quadrature layout") {
  auto g = box(4);
  CHECK(g.trapezoid_points() == 16);
  auto nodes = geometry::box_quadrature(g);
  std::vector<double> z, w;
  geometry::box_depth_rule(g, z, w);
  CHECK(nodes.size() == 16 * z.size());
  double area = 0.0;
  for (const auto& q : nodes) area += q.weight;
  CHECK(area == doctest::Approx(2 * M_PI));
}
