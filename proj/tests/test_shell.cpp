#include <doctest.h>

#include <cmath>

#include "fsilab/errors.hpp"
#include "fsilab/shell.hpp"

using namespace fsilab;

namespace {
double terminal_gap(const ShellTrajectory& a, const ShellTrajectory& b) {
  auto d = a.states.back().xi - b.states.back().xi;
  auto e = a.states.back().eta - b.states.back().eta;
  return std::sqrt(d.l2_norm_sq() + e.l2_norm_sq());
}
}  // namespace

TEST_CASE("transport operators on a single mode") {
  auto k = TransportField::constant(1, 0.5);
  auto xi = Displacement::sine(1, 8, {3, 0}, 1.0);
  double y = 0.3;
  CHECK(transport_apply(k, xi)(y) == doctest::Approx(1.5 * std::cos(3 * y)));
  CHECK(strato_correction(k, xi)(y) == doctest::Approx(-0.5 * 2.25 * std::sin(3 * y)));
  CHECK(k.divergence().l2_norm_sq() == 0.0);
  CHECK(TransportField::constant(1, 0.0).is_zero());
}

TEST_CASE("oracle: undamped single mode oscillates at k^2 sqrt(1 + eps k^2)") {
  const int k = 2;
  const double A = 0.01, eps = 0.01, T = 0.5;
  ShellParams p;
  p.eps_reg = eps;
  ShellState s{Displacement::cosine(1, 8, {k, 0}, A), Displacement(1, 8), 0.0};
  BrownianPath clock(1, T, 1024, 0);
  auto tr = run_shell(s, {}, {clock}, 0, p, ShellScheme::Ito);
  double w = k * k * std::sqrt(1 + eps * k * k);
  const auto& end = tr.states.back();
  CHECK(end.t == doctest::Approx(T));
  CHECK(end.eta(0.0) == doctest::Approx(A * std::cos(w * T)).epsilon(1e-4));
  CHECK(end.xi(0.0) == doctest::Approx(-A * w * std::sin(w * T)).epsilon(1e-4));
}

TEST_CASE("property: Crank-Nicolson conserves the deterministic energy exactly") {
  ShellParams p;
  p.eps_reg = 0.05;
  ShellState s{Displacement::cosine(1, 8, {1, 0}, 0.02) + Displacement::sine(1, 8, {4, 0}, 0.005),
               Displacement::sine(1, 8, {2, 0}, 0.1), 0.0};
  auto tr = run_shell(s, {}, {BrownianPath(1, 0.5, 128, 0)}, 0, p, ShellScheme::Heun);
  for (double e : tr.energy) CHECK(e == doctest::Approx(tr.energy.front()).epsilon(1e-12));
}

TEST_CASE("property: viscous damping makes the energy non-increasing") {
  ShellParams p;
  p.eps_visc = 0.01;
  p.theta = 1.0;
  ShellState s{Displacement::cosine(1, 8, {3, 0}, 0.02), Displacement::sine(1, 8, {1, 0}, 0.1), 0.0};
  auto tr = run_shell(s, {}, {BrownianPath(1, 0.5, 128, 0)}, 0, p, ShellScheme::Ito);
  for (std::size_t n = 1; n < tr.energy.size(); ++n) CHECK(tr.energy[n] <= tr.energy[n - 1] + 1e-15);
}

TEST_CASE("Ito with correction and Heun converge to the same path") {
  std::vector<TransportField> modes{TransportField::constant(1, 0.4)};
  ShellParams p;
  p.eps_reg = 0.01;
  ShellState s{Displacement::cosine(1, 8, {1, 0}, 0.02), Displacement::sine(1, 8, {2, 0}, 0.1), 0.0};
  BrownianPath path(17, 0.5, 64, 3);
  double prev = INFINITY;
  for (int l = 0; l <= 3; ++l) {
    auto a = run_shell(s, modes, {path}, l, p, ShellScheme::Ito);
    auto b = run_shell(s, modes, {path}, l, p, ShellScheme::Heun);
    double gap = terminal_gap(a, b);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("stopping rule fires before the margin is emitted") {
  ShellParams p;
  p.margin = 0.1;
  p.forcing = Displacement::constant(1, 8, 5.0);
  ShellState s{Displacement(1, 8), Displacement(1, 8), 0.0};
  auto tr = run_shell(s, {}, {BrownianPath(1, 0.5, 256, 0)}, 0, p, ShellScheme::Ito);
  CHECK(tr.stopped);
  CHECK(tr.stop_time < 0.5);
  for (const auto& st : tr.states) CHECK(st.eta.sup_norm() < 0.1);
}

TEST_CASE("mollifiers") {
  auto w = backward_kernel_weights(0.01, 0.1);
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(w.size() == 10);
  CHECK(backward_kernel_weights(0.01, 0.004) == std::vector<double>{1.0});
  std::vector<double> c(20, 3.0);
  for (double x : mollify_time(c, 0.01, 0.1)) CHECK(x == doctest::Approx(3.0));
  auto z = mollify_time(c, 0.01, 0.1, true);
  CHECK(z.front() < 3.0);
  CHECK(z.back() == doctest::Approx(3.0));
  auto f = Displacement::cosine(1, 8, {2, 0}, 1.0);
  CHECK(mollify_space(f, 0.1)(0.0) == doctest::Approx(std::exp(-0.4)));
  CHECK_THROWS(mollify_space(f, 0.0));
}
