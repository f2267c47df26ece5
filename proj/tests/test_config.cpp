#include <doctest.h>

#include <string>

#include "fsilab/config.hpp"
#include "fsilab/errors.hpp"

using namespace fsilab;

namespace {
std::string err(const std::string& text) {
  try {
    load_config(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("empty config fills defaults and round-trips") {
  RunConfig c = load_config("");
  CHECK(c == RunConfig{});
  CHECK(c.steps() == 128);
  std::string d = dump(c);
  CHECK(parse_config(d) == c);
  CHECK(dump(load_config(d)) == d);
}

TEST_CASE("every field survives a dump") {
  std::string text = R"(
# comment
[geometry]
collar_L_m = 0.4     # trailing comment
margin_factor = 0.9
[discretization]
basis_N = 12
spectral_band = 20
dt_s = 0.001
horizon_s = 0.25
[physics]
noise_modes = 2
kappa_m_per_sqrt_s = 0.3, -0.1
forcing = const:0:1.5
[data]
eta0_m = cos:1:0.01 sin:3:-0.002
eta1_m_per_s = sin:2:0.05
[solver]
mode = epsilon-sweep
eps_list = 0.2 0.02
milstein = false
[rng]
seed = 18446744073709551615
[output]
dir = "out dir"
record_every = 4
)";
  RunConfig c = load_config(text);
  CHECK(c.collar_L == 0.4);
  CHECK(c.kappa == std::vector<double>{0.3, -0.1});
  CHECK(c.eta0.terms.size() == 2);
  CHECK(c.mode == RunMode::EpsilonSweep);
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(c.output_dir == "out dir");
  CHECK(!c.milstein);
  CHECK(parse_config(dump(c)) == c);
  CHECK(config_hash(c) == config_hash(parse_config(dump(c))));
  RunConfig d = c;
  d.seed = 1;
  CHECK(config_hash(c) != config_hash(d));
}

TEST_CASE("parse errors carry line and field") {
  try {
    parse_config("[geometry]\n\ncollar_L_m = abc\n");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "geometry.collar_L_m");
  }
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("key = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[data]\neta0_m = cos:0:1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[data]\neta0_m = tan:1:1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[rng]\nseed = 1\nseed = 2\n"), ParseError);
}

TEST_CASE("validation names the violated invariant") {
  // 1.2 L with the default L = 0.5
  auto e = err("[data]\neta0_m = const:0:0.6\n");
  CHECK(e.find("L_margin") != std::string::npos);
  e = err("[data]\neta1_m_per_s = const:0:0.1\n");
  CHECK(e.find("trace compatibility") != std::string::npos);
  e = err("[data]\neta1_m_per_s = cos:1:0.1\nu0 = 0 0 0 0 0 0 0 0\n");
  CHECK(e.find("trace compatibility") != std::string::npos);
  e = err("[discretization]\ndt_s = 0.3\n");
  CHECK(e.find("divide") != std::string::npos);
  e = err("[solver]\ntol = 0\n");
  CHECK(e.find("tol") != std::string::npos);
  e = err("[solver]\neps_list = 0.01 0.1\n");
  CHECK(e.find("decreasing") != std::string::npos);
  e = err("[physics]\nnoise_modes = 2\nkappa_m_per_sqrt_s = 0.1\n");
  CHECK(e.find("kappa") != std::string::npos);
  e = err("[data]\neta0_m = const:0:0.2\n");
  CHECK(e.find("4L/15") != std::string::npos);
  // the shell alone has no fold restriction
  CHECK(err("[data]\neta0_m = const:0:0.2\n[solver]\nmode = shell-only\n").empty());
  CHECK_THROWS_AS(load_config("[geometry]\ninterface_dim = 2\n"), ValidationError);
}

TEST_CASE("explicit u0 with a matching trace is accepted") {
  RunConfig c = load_config("[data]\neta1_m_per_s = cos:1:0.1\nu0 = 0.1 0 0 0 0 0 0 0\n");
  REQUIRE(c.u0);
  CHECK(c.u0->size() == 8);
}
