#include <doctest.h>

#include <cmath>
#include <string>

#include "fsilab/noise.hpp"

using namespace fsilab;

TEST_CASE("hash oracles") {
  // first SplitMix64 output for state 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(fnv1a("", 0) == kFnvOffset);
  CHECK(fnv1a("a", 1) == 0xAF63DC4C8601EC8CULL);
  std::string s = "foobar";
  CHECK(fnv1a(s.data(), s.size()) == 0x85944171F73967E8ULL);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("paths are reproducible and refine by bridges") {
  BrownianPath a(42, 0.5, 64, 3), b(42, 0.5, 64, 3), c(43, 0.5, 64, 3);
  CHECK(a.increments(3) == b.increments(3));
  CHECK(a.increments(0) != c.increments(0));
  CHECK(a.steps(2) == 256);
  CHECK(a.dt(1) == doctest::Approx(0.5 / 128));
  for (int l = 0; l < 3; ++l) {
    const auto& coarse = a.increments(l);
    const auto& fine = a.increments(l + 1);
    for (std::size_t j = 0; j < coarse.size(); ++j)
      CHECK(fine[2 * j] + fine[2 * j + 1] == doctest::Approx(coarse[j]).epsilon(1e-12));
  }
  CHECK(a.value(3, a.steps(3)) == doctest::Approx(a.value(0, 64)));
  CHECK(&a.increments_for_steps(128) == &a.increments(1));
  CHECK_THROWS(a.increments_for_steps(100));
}

TEST_CASE("property: increment statistics") {
  BrownianPath p(9, 1.0, 1 << 12, 2);
  for (int l = 0; l <= 2; ++l) {
    const auto& inc = p.increments(l);
    double dt = p.dt(l), m = 0.0, v = 0.0;
    for (double x : inc) m += x;
    m /= inc.size();
    for (double x : inc) v += (x - m) * (x - m);
    v /= inc.size() - 1;
    CHECK(std::abs(m) < 5 * std::sqrt(dt / inc.size()));
    CHECK(v / dt == doctest::Approx(1.0).epsilon(0.06));
  }
}

TEST_CASE("make_paths gives independent modes") {
  auto ps = make_paths(5, 3, 0.5, 32, 1);
  CHECK(ps.size() == 3);
  CHECK(ps[0].increments(1) != ps[1].increments(1));
  CHECK(ps[2].seed() == derive_seed(5, 1002));
}
