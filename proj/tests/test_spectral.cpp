#include <doctest.h>

#include <cmath>
#include <random>

#include "fsilab/spectral.hpp"

using namespace fsilab;

namespace {
Displacement random_field(std::mt19937_64& g, int band, int max_k, double amp) {
  std::normal_distribution<double> n(0.0, 1.0);
  Displacement d(1, band);
  d.set_coeff({0, 0}, amp * n(g));
  for (int k = 1; k <= max_k; ++k) d.set_coeff({k, 0}, amp / (k * k) * cplx(n(g), n(g)));
  return d;
}
}  // namespace

TEST_CASE("cosine and sine evaluate to the closed form") {
  auto c = Displacement::cosine(1, 8, {3, 0}, 0.5);
  auto s = Displacement::sine(1, 8, {2, 0}, -0.25);
  for (double y : {0.0, 0.3, 1.7, 4.4}) {
    CHECK(c(y) == doctest::Approx(0.5 * std::cos(3 * y)).epsilon(1e-14));
    CHECK(s(y) == doctest::Approx(-0.25 * std::sin(2 * y)).epsilon(1e-14));
  }
  CHECK(c.reality_defect() == 0.0);
}

TEST_CASE("derivatives match the analytic multipliers") {
  auto s = Displacement::sine(1, 8, {2, 0}, 1.0);
  double y = 0.77;
  CHECK(s.evaluate(&y, {1, 0}) == doctest::Approx(2 * std::cos(2 * y)));
  CHECK(s.derivative(0, 3)(y) == doctest::Approx(-8 * std::cos(2 * y)));
  CHECK(s.bilaplacian()(y) == doctest::Approx(16 * std::sin(2 * y)));
  CHECK(s.triharmonic()(y) == doctest::Approx(64 * std::sin(2 * y)));
}

TEST_CASE("sample round trip and DFT") {
  std::mt19937_64 g(7);
  auto f = random_field(g, 10, 10, 0.3);
  auto v = f.samples(32);
  auto h = Displacement::from_samples(1, 10, 32, v);
  for (std::size_t i = 0; i < f.coefficients().size(); ++i)
    CHECK(std::abs(f.coefficients()[i] - h.coefficients()[i]) < 1e-14);
  CHECK_THROWS(Displacement::from_samples(1, 10, 20, std::vector<double>(20, 0.0)));
}

TEST_CASE("norm oracles") {
  // amp cos(k y): |Gamma| * 2 * (amp/2)^2 * weight = pi amp^2 weight
  auto c = Displacement::cosine(1, 8, {2, 0}, 0.3);
  CHECK(c.l2_norm_sq() == doctest::Approx(M_PI * 0.09));
  CHECK(c.sobolev_norm_sq(1.5) == doctest::Approx(M_PI * 0.09 * std::pow(5.0, 1.5)));
  CHECK(c.seminorm_sq(2.45) == doctest::Approx(M_PI * 0.09 * std::pow(2.0, 4.9)));
  CHECK(Displacement::constant(1, 4, 2.0).l2_norm_sq() == doctest::Approx(8 * M_PI));
  CHECK(Displacement::constant(1, 4, 2.0).seminorm_sq(1.0) == 0.0);
  // |Lap c|^2 + eps |d^3 c|^2
  CHECK(elastic_pairing(c, c, 0.1) == doctest::Approx(M_PI * 0.09 * (16 + 0.1 * 64)));
}

TEST_CASE("products are dealiased") {
  auto a = Displacement::cosine(1, 6, {3, 0}, 1.0);
  auto p = product(a, a, 6);
  // cos^2 = (1 + cos 6y) / 2
  CHECK(p.coeff({0, 0}).real() == doctest::Approx(0.5));
  CHECK(p.coeff({6, 0}).real() == doctest::Approx(0.25));
  auto q = product(a, a, 4);  // k = 6 truncated, nothing aliased into |k| <= 4
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(q.coeff({k, 0})) < 1e-15);
}

TEST_CASE("shift is exact and isometric") {
  std::mt19937_64 g(3);
  auto f = random_field(g, 12, 12, 1.0);
  double h = 0.613;
  auto s = f.shifted(h, 0);
  for (double y : {0.1, 2.2, 5.9}) CHECK(s(y) == doctest::Approx(f(y + h)).epsilon(1e-13));
  CHECK(s.l2_norm_sq() == doctest::Approx(f.l2_norm_sq()));
}

TEST_CASE("property: inner product symmetry, bilinearity, positivity") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_field(g, 9, 9, 1.0), b = random_field(g, 9, 9, 1.0);
    CHECK(inner_product(a, b) == doctest::Approx(inner_product(b, a)).epsilon(1e-13));
    CHECK(inner_product(a + b, a + b) ==
          doctest::Approx(a.l2_norm_sq() + 2 * inner_product(a, b) + b.l2_norm_sq()).epsilon(1e-12));
    CHECK(elastic_pairing(a, a, 0.01) >= 0.0);
    CHECK((a * 2.0).reality_defect() < 1e-15);
    CHECK(a.heat_smoothed(0.1).l2_norm_sq() <= a.l2_norm_sq() + 1e-14);
  }
}

TEST_CASE("resize, mean and sup norm") {
  auto f = Displacement::cosine(1, 4, {1, 0}, 1.0) + Displacement::constant(1, 4, 0.25);
  CHECK(f.mean() == doctest::Approx(0.25));
  CHECK(f.sup_norm() == doctest::Approx(1.25).epsilon(1e-3));
  auto r = f.resized(8);
  CHECK(r.band() == 8);
  CHECK(r(1.0) == doctest::Approx(f(1.0)));
  auto t = Displacement::cosine(1, 8, {6, 0}, 1.0).resized(4);
  CHECK(t.l2_norm_sq() == 0.0);
}
