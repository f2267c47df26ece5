#include <doctest.h>

#include <cmath>
#include <random>

#include "fsilab/basis.hpp"

using namespace fsilab;

namespace {
ReferenceGeometry box() { return ReferenceGeometry::flat_box(1, 1.0, 0.5, 16); }
}  // namespace

TEST_CASE("mode ordering") {
  auto m = enumerate_modes(1.0, 10);
  REQUIRE(m.size() == 10);
  for (int i = 0; i < 10; i += 2) CHECK(m[i].is_lift());
  for (int i = 1; i < 10; i += 2) CHECK(!m[i].is_lift());
  CHECK(m[0].wavenumber() == 1);
  CHECK(m[0].phase() == StreamMode::Phase::Cos);
  CHECK(m[2].phase() == StreamMode::Phase::Sin);
  CHECK(m[4].wavenumber() == 2);
  // interior fields start with the constant profile of lowest degree
  CHECK(m[1].wavenumber() == 0);
  CHECK(m[1].degree() == 0);
}

TEST_CASE("oracle: lift traces and profile") {
  auto m = enumerate_modes(1.0, 4);
  for (double y : {0.0, 0.7, 2.9}) {
    CHECK(m[0].trace(y) == doctest::Approx(std::cos(y)));
    CHECK(m[2].trace(y) == doctest::Approx(std::sin(y)));
    CHECK(m[1].trace(y) == 0.0);
    auto top = m[0].sample(y, 0.0);
    CHECK(top.w(0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(top.w(1) == doctest::Approx(std::cos(y)));
  }
  // w = (d_z psi, -d_y psi), psi = -sin(y) (3 z^2 - 2 z^3) with zeta = z + 1 at H = 1
  double y = 0.4, z = -0.3, zt = z + 1.0;
  auto s = m[0].sample(y, z);
  CHECK(s.w(0) == doctest::Approx(-std::sin(y) * (6 * zt - 6 * zt * zt)));
  CHECK(s.w(1) == doctest::Approx(std::cos(y) * (3 * zt * zt - 2 * zt * zt * zt)));
}

TEST_CASE("property: every field is divergence free and vanishes at the bottom") {
  auto modes = enumerate_modes(1.0, 16);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& m : modes) {
    for (int i = 0; i < 10; ++i) {
      double y = 2 * M_PI * U(g), z = -U(g);
      auto s = m.sample(y, z);
      CHECK(std::abs(s.Dw.trace()) < 1e-12);
      // finite-difference check of the gradient
      double h = 1e-6;
      auto sy = m.sample(y + h, z), sz = m.sample(y, z + h);
      CHECK(((sy.w - s.w) / h - s.Dw.col(0)).cwiseAbs().maxCoeff() < 1e-4);
      CHECK(((sz.w - s.w) / h - s.Dw.col(1)).cwiseAbs().maxCoeff() < 1e-4);
    }
    auto bot = m.sample(0.3, -1.0);
    CHECK(bot.w.cwiseAbs().maxCoeff() < 1e-14);
    if (!m.is_lift()) CHECK(m.sample(1.1, 0.0).w.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("lift coefficients reproduce trigonometric traces") {
  auto basis = build_basis(box(), 8);
  auto f = Displacement::cosine(1, 16, {1, 0}, 0.3) + Displacement::sine(1, 16, {2, 0}, -0.1);
  auto c = basis.lift_coefficients(f);
  auto back = basis.trace_of(c);
  CHECK((back - f).l2_norm_sq() < 1e-28);
  // modes above the lift range are dropped
  auto g = Displacement::cosine(1, 16, {5, 0}, 1.0);
  CHECK(basis.trace_of(basis.lift_coefficients(g)).l2_norm_sq() < 1e-28);
}

TEST_CASE("basis construction errors") {
  CHECK_THROWS(build_basis(box(), 7));
  CHECK_THROWS(build_basis(box(), 0));
  CHECK_THROWS(build_basis(ReferenceGeometry::flat_box(1, 1.0, 0.5, 1), 8));
  CHECK(build_basis(box(), 6).size() == 6);
}
