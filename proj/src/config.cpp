#include "fsilab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fsilab/errors.hpp"
#include "fsilab/noise.hpp"

namespace fsilab {

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Displacement SpectralSpec::build(int band) const {
  Displacement d(1, band);
  for (const auto& t : terms) {
    if (t.k > band) throw ValidationError("spectral term wavenumber " + std::to_string(t.k) + " exceeds the band");
    switch (t.kind) {
      case SpectralTerm::Kind::Const: d += Displacement::constant(1, band, t.amplitude); break;
      case SpectralTerm::Kind::Cos: d += Displacement::cosine(1, band, {t.k, 0}, t.amplitude); break;
      case SpectralTerm::Kind::Sin: d += Displacement::sine(1, band, {t.k, 0}, t.amplitude); break;
    }
  }
  return d;
}

bool SpectralSpec::is_zero() const {
  for (const auto& t : terms)
    if (t.amplitude != 0.0) return false;
  return true;
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::ShellOnly: return "shell-only";
    case RunMode::LinearCoupled: return "linear-coupled";
    case RunMode::FixedPoint: return "fixed-point";
    case RunMode::EpsilonSweep: return "epsilon-sweep";
  }
  return "?";
}

int RunConfig::steps() const { return int(std::lround(horizon / dt)); }

ReferenceGeometry RunConfig::geometry() const {
  geometry::QuadratureOptions q;
  q.gauss_order = gauss_order;
  q.trapezoid_points = trapezoid_points;
  auto g = ReferenceGeometry::flat_box(interface_dim, box_height, collar_L, spectral_band, q);
  g.set_margin_factor(margin_factor);
  return g;
}

GalerkinBasis RunConfig::basis() const { return build_basis(geometry(), basis_N); }

std::vector<TransportField> RunConfig::noise() const {
  std::vector<TransportField> out;
  for (double k : kappa) out.push_back(TransportField::constant(1, k));
  return out;
}

InitialData RunConfig::initial_data() const {
  InitialData d;
  d.eta0 = eta0.build(spectral_band);
  d.eta1 = eta1.build(spectral_band);
  if (u0) d.u0 = Eigen::Map<const Eigen::VectorXd>(u0->data(), Eigen::Index(u0->size()));
  return d;
}

ProblemData RunConfig::problem() const {
  ProblemData p;
  p.initial = initial_data();
  p.noise = noise();
  if (!forcing.is_zero()) p.forcing = forcing.build(spectral_band);
  return p;
}

namespace {

struct Ctx {
  int line = 0;
  std::string field;
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line, field, what); }
};

double parse_double(const std::string& s, const Ctx& c) {
  const char* b = s.data();
  char* end = nullptr;
  double v = std::strtod(b, &end);
  if (s.empty() || end != b + s.size()) c.fail("expected a number, got '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const Ctx& c) {
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) c.fail("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const Ctx& c) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  c.fail("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& s, const Ctx& c) {
  std::vector<double> out;
  for (const auto& t : split_list(s)) out.push_back(parse_double(t, c));
  return out;
}

std::string dump_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

SpectralSpec parse_spectral(const std::string& s, const Ctx& c) {
  SpectralSpec spec;
  for (const auto& tok : split_list(s)) {
    if (tok == "0") continue;
    auto p1 = tok.find(':'), p2 = tok.rfind(':');
    if (p1 == std::string::npos || p1 == p2) c.fail("spectral term must be kind:k:amplitude, got '" + tok + "'");
    std::string kind = tok.substr(0, p1);
    SpectralTerm t;
    if (kind == "const") t.kind = SpectralTerm::Kind::Const;
    else if (kind == "cos") t.kind = SpectralTerm::Kind::Cos;
    else if (kind == "sin") t.kind = SpectralTerm::Kind::Sin;
    else c.fail("unknown spectral kind '" + kind + "'");
    t.k = int(parse_int(tok.substr(p1 + 1, p2 - p1 - 1), c));
    t.amplitude = parse_double(tok.substr(p2 + 1), c);
    if (t.k < 0) c.fail("negative wavenumber");
    if (t.kind == SpectralTerm::Kind::Const && t.k != 0) c.fail("const terms take k = 0");
    if (t.kind != SpectralTerm::Kind::Const && t.k == 0) c.fail("cos/sin terms need k >= 1");
    spec.terms.push_back(t);
  }
  return spec;
}

std::string dump_spectral(const SpectralSpec& s) {
  if (s.terms.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < s.terms.size(); ++i) {
    const auto& t = s.terms[i];
    const char* kind = t.kind == SpectralTerm::Kind::Const ? "const" : t.kind == SpectralTerm::Kind::Cos ? "cos" : "sin";
    out += (i ? " " : "") + std::string(kind) + ":" + std::to_string(t.k) + ":" + format_double(t.amplitude);
  }
  return out;
}

struct Field {
  std::string section, key;
  std::function<void(RunConfig&, const std::string&, const Ctx&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field int_field(std::string sec, std::string key, T RunConfig::*m) {
  return {sec, key, [m](RunConfig& c, const std::string& v, const Ctx& x) { c.*m = T(parse_int(v, x)); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}
Field dbl_field(std::string sec, std::string key, double RunConfig::*m) {
  return {sec, key, [m](RunConfig& c, const std::string& v, const Ctx& x) { c.*m = parse_double(v, x); },
          [m](const RunConfig& c) { return format_double(c.*m); }};
}
Field spec_field(std::string sec, std::string key, SpectralSpec RunConfig::*m) {
  return {sec, key, [m](RunConfig& c, const std::string& v, const Ctx& x) { c.*m = parse_spectral(v, x); },
          [m](const RunConfig& c) { return dump_spectral(c.*m); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      int_field("geometry", "interface_dim", &RunConfig::interface_dim),
      dbl_field("geometry", "box_height_m", &RunConfig::box_height),
      dbl_field("geometry", "collar_L_m", &RunConfig::collar_L),
      dbl_field("geometry", "margin_factor", &RunConfig::margin_factor),
      int_field("geometry", "gauss_order", &RunConfig::gauss_order),
      int_field("geometry", "trapezoid_points", &RunConfig::trapezoid_points),
      int_field("discretization", "basis_N", &RunConfig::basis_N),
      int_field("discretization", "spectral_band", &RunConfig::spectral_band),
      dbl_field("discretization", "dt_s", &RunConfig::dt),
      dbl_field("discretization", "horizon_s", &RunConfig::horizon),
      int_field("discretization", "assembly_stride", &RunConfig::assembly_stride),
      dbl_field("physics", "eps_visc", &RunConfig::eps_visc),
      dbl_field("physics", "eps_reg", &RunConfig::eps_reg),
      int_field("physics", "noise_modes", &RunConfig::noise_modes),
      {"physics", "kappa_m_per_sqrt_s",
       [](RunConfig& c, const std::string& v, const Ctx& x) { c.kappa = parse_list(v, x); },
       [](const RunConfig& c) { return dump_list(c.kappa); }},
      spec_field("physics", "forcing", &RunConfig::forcing),
      spec_field("data", "eta0_m", &RunConfig::eta0),
      spec_field("data", "eta1_m_per_s", &RunConfig::eta1),
      {"data", "u0",
       [](RunConfig& c, const std::string& v, const Ctx& x) {
         if (v == "lift") c.u0.reset();
         else c.u0 = parse_list(v, x);
       },
       [](const RunConfig& c) { return c.u0 ? dump_list(*c.u0) : std::string("lift"); }},
      {"solver", "mode",
       [](RunConfig& c, const std::string& v, const Ctx& x) {
         for (auto m : {RunMode::ShellOnly, RunMode::LinearCoupled, RunMode::FixedPoint, RunMode::EpsilonSweep})
           if (v == to_string(m)) {
             c.mode = m;
             return;
           }
         x.fail("mode must be shell-only, linear-coupled, fixed-point or epsilon-sweep");
       },
       [](const RunConfig& c) { return to_string(c.mode); }},
      {"solver", "scheme", [](RunConfig& c, const std::string& v, const Ctx&) { c.scheme = v; },
       [](const RunConfig& c) { return c.scheme; }},
      {"solver", "milstein", [](RunConfig& c, const std::string& v, const Ctx& x) { c.milstein = parse_bool(v, x); },
       [](const RunConfig& c) { return std::string(c.milstein ? "true" : "false"); }},
      dbl_field("solver", "tol", &RunConfig::tol),
      int_field("solver", "max_iter", &RunConfig::max_iter),
      dbl_field("solver", "damping", &RunConfig::damping),
      dbl_field("solver", "eps", &RunConfig::eps),
      {"solver", "eps_list",
       [](RunConfig& c, const std::string& v, const Ctx& x) { c.eps_list = parse_list(v, x); },
       [](const RunConfig& c) { return dump_list(c.eps_list); }},
      dbl_field("solver", "frac_s", &RunConfig::frac_s),
      {"rng", "seed",
       [](RunConfig& c, const std::string& v, const Ctx& x) {
         std::uint64_t s = 0;
         auto r = std::from_chars(v.data(), v.data() + v.size(), s);
         if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) x.fail("seed must be an unsigned integer");
         c.seed = s;
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      int_field("rng", "ensemble_size", &RunConfig::ensemble_size),
      {"output", "dir", [](RunConfig& c, const std::string& v, const Ctx&) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      int_field("output", "record_every", &RunConfig::record_every),
  };
  return f;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  std::map<std::string, int> seen;
  Ctx c;
  while (std::getline(in, raw)) {
    ++c.line;
    c.field.clear();
    auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') c.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : fields()) known |= f.section == section;
      if (!known) c.fail("unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) c.fail("expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    c.field = section.empty() ? key : section + "." + key;
    if (section.empty()) c.fail("key outside of any section");
    const Field* hit = nullptr;
    for (const auto& f : fields())
      if (f.section == section && f.key == key) hit = &f;
    if (!hit) c.fail("unknown key");
    if (seen.count(c.field)) c.fail("duplicate key (first on line " + std::to_string(seen[c.field]) + ")");
    seen[c.field] = c.line;
    hit->set(cfg, value, c);
  }
  return cfg;
}

std::string dump(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << "\n";
      section = f.section;
      out << "[" << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::string d = dump(cfg);
  return fnv1a(d.data(), d.size());
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  need(c.interface_dim == 1, "geometry.interface_dim: only the 2-D box (interface_dim 1) is supported");
  need(c.box_height > 0.0, "geometry.box_height_m must be positive");
  need(c.collar_L > 0.0 && c.collar_L <= c.box_height, "geometry.collar_L_m must lie in (0, box_height_m]");
  need(c.margin_factor > 0.0 && c.margin_factor <= 1.0, "geometry.margin_factor must lie in (0, 1]");
  need(c.gauss_order >= 2, "geometry.gauss_order must be at least 2");
  need(c.spectral_band >= 1, "discretization.spectral_band must be at least 1");
  need(c.trapezoid_points == 0 || c.trapezoid_points >= 2 * c.spectral_band + 1,
       "geometry.trapezoid_points must be 0 or at least 2 * spectral_band + 1");
  need(c.basis_N >= 2 && c.basis_N % 2 == 0, "discretization.basis_N must be even and at least 2");
  need(c.basis_N / 2 <= 2 * c.spectral_band, "discretization.basis_N: lift wavenumbers exceed the band");
  need(c.dt > 0.0 && c.horizon > 0.0, "discretization: dt_s and horizon_s must be positive");
  {
    double r = c.horizon / c.dt;
    need(std::abs(r - std::round(r)) <= 1e-9 * r && std::round(r) >= 1, "discretization.dt_s must divide horizon_s");
  }
  need(c.assembly_stride >= 1, "discretization.assembly_stride must be at least 1");
  need(c.eps_visc >= 0.0 && c.eps_reg >= 0.0, "physics: eps_visc and eps_reg must be non-negative");
  need(c.noise_modes >= 0, "physics.noise_modes must be non-negative");
  need(int(c.kappa.size()) == c.noise_modes, "physics.kappa_m_per_sqrt_s needs one entry per noise mode");
  need(c.tol > 0.0, "solver.tol must be positive");
  need(c.max_iter >= 1, "solver.max_iter must be at least 1");
  need(c.damping > 0.0 && c.damping <= 1.0, "solver.damping must lie in (0, 1]");
  need(c.eps > 0.0, "solver.eps must be positive");
  need(!c.eps_list.empty(), "solver.eps_list must not be empty");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    need(c.eps_list[i] > 0.0, "solver.eps_list entries must be positive");
    need(i == 0 || c.eps_list[i] < c.eps_list[i - 1], "solver.eps_list must be strictly decreasing");
  }
  need(c.frac_s > 0.0 && c.frac_s < 0.5, "solver.frac_s must lie in (0, 1/2)");
  need(c.scheme == "ito" || c.scheme == "heun", "solver.scheme must be ito or heun");
  need(c.ensemble_size >= 1, "rng.ensemble_size must be at least 1");
  need(c.record_every >= 1, "output.record_every must be at least 1");
  need(!c.output_dir.empty(), "output.dir must not be empty");
  for (const auto* s : {&c.eta0, &c.eta1, &c.forcing})
    for (const auto& t : s->terms) need(t.k <= c.spectral_band, "data: spectral term wavenumber exceeds the band");

  auto geom = c.geometry();
  Displacement eta0 = c.eta0.build(c.spectral_band);
  double sup = eta0.sup_norm();
  need(sup < geom.margin(), "data.eta0_m: |eta0|_inf = " + format_double(sup) +
                                " violates the bound |eta0|_inf < L_margin = " + format_double(geom.margin()) +
                                " (L = " + format_double(c.collar_L) + ")");
  if (c.mode != RunMode::ShellOnly) {
    // det of the Hanzawa gradient is 1 + eta0 * cutoff', and |cutoff'| peaks at 15 / (4 L)
    const double fold = 4.0 * c.collar_L / 15.0;
    need(sup < fold, "data.eta0_m: |eta0|_inf = " + format_double(sup) +
                         " folds the Hanzawa map; coupled modes need |eta0|_inf < 4L/15 = " + format_double(fold));
    GalerkinBasis basis = [&] {
      try {
        return c.basis();
      } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("discretization.basis_N: ") + e.what());
      }
    }();
    InitialData d = c.initial_data();
    if (d.u0) need(int(d.u0->size()) == basis.size(), "data.u0: coefficient count differs from basis_N");
    double mis = trace_mismatch(basis, d);
    need(mis <= 1e-9, "data: trace compatibility u0 o phi_eta0 = eta1 n violated (max mismatch " +
                          format_double(mis) + ")");
  } else {
    need(!c.u0, "data.u0 has no meaning in shell-only mode");
  }
}

RunConfig load_config(const std::string& text) {
  RunConfig c = parse_config(text);
  validate(c);
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

}  // namespace fsilab
