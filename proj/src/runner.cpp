#include "fsilab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fsilab/analysis.hpp"
#include "fsilab/errors.hpp"
#include "fsilab/fixedpoint.hpp"
#include "fsilab/noise.hpp"

#ifndef FSILAB_VERSION
#define FSILAB_VERSION "dev"
#endif

namespace fsilab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return FSILAB_VERSION; }

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "Completed";
    case RunStatus::StoppedEarly: return "StoppedEarly";
    case RunStatus::NonConvergence: return "NonConvergence";
  }
  return "?";
}

int exit_code(RunStatus s) { return int(s); }

fs::path resolve_output_dir(const RunConfig& cfg) {
  fs::path p(cfg.output_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("FSILAB_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  }
  return p;
}

std::uint64_t file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(buf.data(), buf.size());
}

namespace {

std::string hex(std::uint64_t x) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << x;
  return o.str();
}

const char* kSeedRule =
    "splitmix64(x): x += 0x9E3779B97F4A7C15; x = (x ^ x>>30) * 0xBF58476D1CE4E5B9; "
    "x = (x ^ x>>27) * 0x94D049BB133111EB; return x ^ x>>31. "
    "derive_seed(master, i) = splitmix64(master ^ splitmix64(i + 0x9E3779B97F4A7C15)). "
    "Ensemble member i runs with seed derive_seed(master, i); noise mode m of a run uses "
    "derive_seed(seed, 1000 + m); its level-l normals are drawn by mt19937_64(derive_seed(mode_seed, l)).";

class Csv {
 public:
  explicit Csv(const fs::path& p) : out_(p, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + p.string());
  }
  void header(const std::vector<std::string>& cols) { row_strings(cols); }
  void row(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << format_double(v[i]);
    out_ << "\n";
  }

 private:
  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << "\n";
  }
  std::ofstream out_;
};

json frac_json(const FracNormReport& f) {
  return json{{"s", f.s},
              {"h", f.h},
              {"ladder", f.ladder},
              {"ladder_ratio", f.ladder_ratio},
              {"dyadic_ratio", f.dyadic_ratio},
              {"spectral_norm", f.spectral_norm},
              {"spectral_seminorm", f.spectral_seminorm},
              {"quotient_seminorm", f.quotient_seminorm},
              {"relative_gap", f.relative_gap()}};
}

double ladder_max(const FracNormReport& f) {
  double m = 0.0;
  for (double v : f.ladder) m = std::max(m, v);
  return m;
}

std::vector<double> default_ladder() { return {M_PI / 2, M_PI / (2 * M_SQRT2), M_PI / 4, M_PI / (4 * M_SQRT2)}; }

struct Writer {
  fs::path dir;
  std::vector<std::string> files;
  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

std::vector<BrownianPath> paths_for(const RunConfig& cfg) {
  int modes = std::max(1, cfg.noise_modes);
  return make_paths(cfg.seed, modes, cfg.horizon, cfg.steps(), 0);
}

void write_coupled(Writer& w, const RunConfig& cfg, const CoupledTrajectory& tr, const GalerkinBasis& basis,
                   const GeometryTrack& track, const EnergyLedger& led) {
  const int N = basis.size();
  {
    Csv csv(w.add("trajectory.csv"));
    std::vector<std::string> h{"t"};
    for (int i = 0; i < N; ++i) h.push_back("alpha_" + std::to_string(i));
    for (int m = 0; m < cfg.noise_modes; ++m) h.push_back("dB_" + std::to_string(m));
    h.push_back("eta_sup");
    csv.header(h);
    std::vector<double> acc(cfg.noise_modes, 0.0);
    for (std::size_t n = 0; n < tr.alpha.size(); ++n) {
      if (n > 0)
        for (int m = 0; m < cfg.noise_modes; ++m) acc[m] += tr.dB[n - 1][m];
      if (n % cfg.record_every != 0 && n + 1 != tr.alpha.size()) continue;
      std::vector<double> r{tr.t[n]};
      for (int i = 0; i < N; ++i) r.push_back(tr.alpha[n](i));
      for (double& a : acc) {
        r.push_back(a);
        a = 0.0;
      }
      r.push_back(tr.eta[n].sup_norm());
      csv.row(r);
    }
  }
  {
    Csv csv(w.add("ledger.csv"));
    csv.header({"t", "fluid_kinetic", "interface_kinetic", "elastic", "regularizer", "viscous", "eps_dissipation",
                "noise_defect", "martingale", "forcing_work", "lhs", "rhs", "residual", "inequality_violation"});
    for (std::size_t n = 0; n < led.rows.size(); ++n) {
      if (n % cfg.record_every != 0 && n + 1 != led.rows.size()) continue;
      const auto& r = led.rows[n];
      csv.row({r.t, r.fluid_kinetic, r.interface_kinetic, r.elastic, r.regularizer, r.viscous, r.eps_dissipation,
               r.noise_defect, r.martingale, r.forcing_work, r.lhs, r.rhs, r.residual, r.inequality_violation});
    }
  }
  (void)track;
}

json coupled_diagnostics(const CoupledTrajectory& tr, const GalerkinBasis& basis, const GeometryTrack& track,
                         const EnergyLedger& led) {
  double min_eig = INFINITY, asym = 0.0, trace = 0.0;
  for (double v : tr.a_min_eig) min_eig = std::min(min_eig, v);
  for (double v : tr.a_asym) asym = std::max(asym, v);
  for (std::size_t n = 0; n < tr.alpha.size(); ++n) {
    CoupledState s{tr.t[n], tr.alpha[n], tr.eta[n], tr.xi[n]};
    trace = std::max(trace, trace_residual(s, basis, track.at(tr.t[n]).zeta));
  }
  return json{{"mass_min_eigenvalue", min_eig},
              {"mass_max_asymmetry", asym},
              {"max_trace_residual", trace},
              {"ledger_max_residual", led.max_residual()},
              {"ledger_final_residual", led.final_residual()},
              {"ledger_max_inequality_violation", led.max_inequality_violation()}};
}

json stop_json(bool stopped, double t, double sup) {
  return json{{"stopped", stopped}, {"stop_time", stopped ? json(t) : json(nullptr)}, {"max_sup_emitted", sup}};
}

double max_sup(const std::vector<Displacement>& eta) {
  double m = 0.0;
  for (const auto& e : eta) m = std::max(m, e.sup_norm());
  return m;
}

}  // namespace

RunOutcome run(const RunConfig& cfg, const fs::path& dir) {
  validate(cfg);
  fs::create_directories(dir);
  Writer w{dir, {}};
  RunOutcome out;
  out.dir = dir;
  json diag;
  diag["mode"] = to_string(cfg.mode);
  auto paths = paths_for(cfg);
  const auto geom = cfg.geometry();
  const double dt = cfg.horizon / cfg.steps();

  if (cfg.mode == RunMode::ShellOnly) {
    ShellState s0{cfg.eta0.build(cfg.spectral_band), cfg.eta1.build(cfg.spectral_band), 0.0};
    ShellParams p;
    p.eps_visc = cfg.eps_visc;
    p.eps_reg = cfg.eps_reg;
    p.milstein = cfg.milstein;
    p.margin = geom.margin();
    if (!cfg.forcing.is_zero()) p.forcing = cfg.forcing.build(cfg.spectral_band);
    auto modes = cfg.noise();
    if (modes.empty()) paths.resize(1);
    auto tr = run_shell(s0, modes, paths, 0, p, cfg.scheme == "heun" ? ShellScheme::Heun : ShellScheme::Ito,
                        cfg.record_every);
    const int band = cfg.spectral_band;
    {
      Csv csv(w.add("trajectory.csv"));
      std::vector<std::string> h{"t"};
      for (const char* f : {"eta", "xi"})
        for (int k = 0; k <= band; ++k) {
          h.push_back(std::string(f) + "_re_" + std::to_string(k));
          h.push_back(std::string(f) + "_im_" + std::to_string(k));
        }
      for (int m = 0; m < cfg.noise_modes; ++m) h.push_back("dB_" + std::to_string(m));
      csv.header(h);
      std::size_t step = 0;
      for (std::size_t r = 0; r < tr.states.size(); ++r) {
        const auto& st = tr.states[r];
        std::vector<double> row{tr.times[r]};
        for (const auto* d : {&st.eta, &st.xi})
          for (int k = 0; k <= band; ++k) {
            cplx c = d->coeff({k, 0});
            row.push_back(c.real());
            row.push_back(c.imag());
          }
        std::size_t until = std::size_t(std::lround(tr.times[r] / dt));
        std::vector<double> acc(cfg.noise_modes, 0.0);
        for (; step < until && step < tr.dB.size(); ++step)
          for (int m = 0; m < cfg.noise_modes; ++m) acc[m] += tr.dB[step][m];
        row.insert(row.end(), acc.begin(), acc.end());
        csv.row(row);
      }
    }
    {
      Csv csv(w.add("ledger.csv"));
      csv.header({"t", "kinetic", "elastic", "regularizer", "total"});
      for (std::size_t r = 0; r < tr.states.size(); ++r) {
        auto e = shell_energy(tr.states[r], p);
        csv.row({tr.times[r], e.kinetic, e.elastic, e.regularizer, e.total()});
      }
    }
    std::vector<Displacement> etas;
    for (const auto& st : tr.states) etas.push_back(st.eta);
    auto frac = frac_sobolev_report(etas, dt * cfg.record_every, cfg.frac_s, default_ladder());
    out.initial_energy = tr.energy.front();
    out.final_energy = tr.energy.back();
    out.frac_ladder_max = ladder_max(frac);
    diag["energy_initial"] = out.initial_energy;
    diag["energy_final"] = out.final_energy;
    diag["frac"] = frac_json(frac);
    diag["stop"] = stop_json(tr.stopped, tr.stop_time, max_sup(etas));
    if (tr.stopped) {
      out.status = RunStatus::StoppedEarly;
      out.stop_time = tr.stop_time;
    }
  } else {
    GalerkinBasis basis = cfg.basis();
    AssemblyContext ctx(basis);
    ProblemData data = cfg.problem();
    if (data.noise.empty()) paths.resize(1);
    CoupledTrajectory tr;
    GeometryTrack track;
    PhysicsParams phys;
    PicardOptions po;
    po.tol = cfg.tol;
    po.max_iter = cfg.max_iter;
    po.damping = cfg.damping;
    po.horizon = cfg.horizon;
    po.assembly_stride = cfg.assembly_stride;
    po.milstein = cfg.milstein;
    if (cfg.mode == RunMode::LinearCoupled) {
      phys.eps_visc = cfg.eps_visc;
      phys.eps_reg = cfg.eps_reg;
      phys.noise = data.noise;
      phys.forcing = data.forcing;
      track = GeometryTrack::frozen(data.initial.eta0);
      LinearRunOptions lo;
      lo.horizon = cfg.horizon;
      lo.assembly_stride = cfg.assembly_stride;
      lo.step.milstein = cfg.milstein;
      lo.step.margin = geom.margin();
      tr = run_linear(ctx, track, data.initial, phys, paths, lo);
    } else if (cfg.mode == RunMode::FixedPoint) {
      PicardResult res = picard_solve(ctx, data, cfg.eps, paths, po);
      phys = regularized_physics(data, cfg.eps);
      json recs = json::array();
      for (const auto& r : res.records)
        recs.push_back({{"iteration", r.iteration},
                        {"input_eta", hex(r.input_eta)},
                        {"input_u", hex(r.input_u)},
                        {"output_eta", hex(r.output_eta)},
                        {"output_u", hex(r.output_u)},
                        {"residual", r.residual},
                        {"eta_part", r.eta_part},
                        {"u_part", r.u_part},
                        {"damping", r.damping},
                        {"accepted", r.accepted}});
      diag["iterations"] = recs;
      diag["converged"] = res.converged;
      if (!res.converged && !res.stopped) out.status = RunStatus::NonConvergence;
      tr = std::move(res.solution);
      track = res.track;
    } else {
      SweepOptions so;
      so.s = cfg.frac_s;
      auto sweep = epsilon_sweep(ctx, data, cfg.eps_list, paths, po, so);
      json arr = json::array();
      for (const auto& s : sweep) {
        arr.push_back({{"eps", s.eps},
                       {"converged", s.converged},
                       {"stopped", s.stopped},
                       {"iterations", s.iterations},
                       {"residual", s.residual},
                       {"sup_w22", s.sup_w22},
                       {"eps_sup_w32_sq", s.eps_sup_w32_sq},
                       {"frac", frac_json(s.frac)}});
        if (!s.converged && !s.stopped) out.status = RunStatus::NonConvergence;
      }
      diag["sweep"] = arr;
      phys = regularized_physics(data, sweep.back().eps);
      tr = sweep.back().result.solution;
      track = sweep.back().result.track;
    }
    EnergyLedger led = energy_ledger(tr, ctx, track, phys);
    write_coupled(w, cfg, tr, basis, track, led);
    diag["health"] = coupled_diagnostics(tr, basis, track, led);
    auto frac = frac_sobolev_report(tr.eta, dt, cfg.frac_s, default_ladder());
    diag["frac"] = frac_json(frac);
    diag["stop"] = stop_json(tr.stopped, tr.stop_time, max_sup(tr.eta));
    if (!led.rows.empty()) {
      const auto& a = led.rows.front();
      const auto& b = led.rows.back();
      out.initial_energy = a.fluid_kinetic + a.interface_kinetic + a.elastic + a.regularizer;
      out.final_energy = b.fluid_kinetic + b.interface_kinetic + b.elastic + b.regularizer;
    }
    out.max_ledger_residual = led.max_residual();
    out.frac_ladder_max = ladder_max(frac);
    if (tr.stopped && out.status == RunStatus::Completed) {
      out.status = RunStatus::StoppedEarly;
      out.stop_time = tr.stop_time;
    }
  }
  diag["status"] = to_string(out.status);
  write_json(w.add("diagnostics.json"), diag);
  {
    std::ofstream c(w.add("config.txt"), std::ios::binary);
    c << dump(cfg);
  }
  json files = json::array();
  for (const auto& f : w.files) files.push_back({{"name", f}, {"fnv1a", hex(file_digest(dir / f))}});
  json manifest{{"version", version()},
                {"config_hash", hex(config_hash(cfg))},
                {"seed", cfg.seed},
                {"seed_rule", kSeedRule},
                {"mode", to_string(cfg.mode)},
                {"status", to_string(out.status)},
                {"exit_code", exit_code(out.status)},
                {"stop_time", out.status == RunStatus::StoppedEarly ? json(out.stop_time) : json(nullptr)},
                {"files", files}};
  write_json(dir / "manifest.json", manifest);
  out.files = w.files;
  out.files.push_back("manifest.json");
  return out;
}

Stats summarize(std::vector<double> x) {
  Stats s;
  if (x.empty()) return s;
  std::sort(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / x.size();
  double var = 0.0;
  for (double v : x) var += (v - s.mean) * (v - s.mean);
  s.variance = x.size() > 1 ? var / (x.size() - 1) : 0.0;
  auto q = [&](double p) {
    double pos = p * (x.size() - 1);
    std::size_t lo = std::size_t(std::floor(pos));
    std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - lo) * (x[hi] - x[lo]);
  };
  s.min = x.front();
  s.q25 = q(0.25);
  s.median = q(0.5);
  s.q75 = q(0.75);
  s.max = x.back();
  return s;
}

namespace {
json stats_json(const Stats& s) {
  return json{{"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"q25", s.q25},
              {"median", s.median}, {"q75", s.q75}, {"max", s.max}};
}
}  // namespace

EnsembleOutcome ensemble(const RunConfig& cfg, int paths, const fs::path& dir, int threads) {
  if (paths < 1) throw ValidationError("ensemble: --paths must be at least 1");
  validate(cfg);
  EnsembleOutcome eo;
  eo.members.resize(paths);
  for (int i = 0; i < paths; ++i) eo.seeds.push_back(derive_seed(cfg.seed, std::uint64_t(i)));
  fs::create_directories(dir);
  std::vector<std::string> errors(paths);
  std::mutex mu;
  int next = 0;
  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard<std::mutex> lk(mu);
        if (next >= paths) return;
        i = next++;
      }
      RunConfig c = cfg;
      c.seed = eo.seeds[i];
      std::ostringstream name;
      name << "member_" << std::setw(4) << std::setfill('0') << i;
      try {
        eo.members[i] = run(c, dir / name.str());
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int nt = threads > 0 ? threads : int(std::max(1u, std::thread::hardware_concurrency()));
  nt = std::min(nt, paths);
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (int i = 0; i < paths; ++i)
    if (!errors[i].empty()) throw std::runtime_error("ensemble member " + std::to_string(i) + ": " + errors[i]);

  std::vector<double> fe, drift, res, frac;
  for (const auto& m : eo.members) {
    fe.push_back(m.final_energy);
    drift.push_back(m.final_energy - m.initial_energy);
    res.push_back(m.max_ledger_residual);
    frac.push_back(m.frac_ladder_max);
    if (int(m.status) > int(eo.status)) eo.status = m.status;
  }
  eo.final_energy = summarize(fe);
  eo.energy_drift = summarize(drift);
  eo.ledger_residual = summarize(res);
  eo.frac_ladder_max = summarize(frac);

  json members = json::array();
  for (int i = 0; i < paths; ++i) {
    const auto& m = eo.members[i];
    members.push_back({{"index", i},
                       {"seed", eo.seeds[i]},
                       {"dir", m.dir.filename().string()},
                       {"status", to_string(m.status)},
                       {"final_energy", m.final_energy},
                       {"energy_drift", m.final_energy - m.initial_energy}});
  }
  json summary{{"version", version()},
               {"config_hash", hex(config_hash(cfg))},
               {"master_seed", cfg.seed},
               {"seed_rule", kSeedRule},
               {"paths", paths},
               {"status", to_string(eo.status)},
               {"final_energy", stats_json(eo.final_energy)},
               {"energy_drift", stats_json(eo.energy_drift)},
               {"ledger_residual", stats_json(eo.ledger_residual)},
               {"frac_ladder_max", stats_json(eo.frac_ladder_max)},
               {"members", members}};
  write_json(dir / "summary.json", summary);
  return eo;
}

std::string report(const fs::path& run_dir, int* status_code) {
  fs::path mpath = run_dir / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw std::runtime_error("no manifest.json in " + run_dir.string());
  json m = json::parse(in);
  std::ostringstream o;
  o << "run:        " << run_dir.string() << "\n"
    << "version:    " << m.value("version", "?") << "\n"
    << "mode:       " << m.value("mode", "?") << "\n"
    << "status:     " << m.value("status", "?") << "\n"
    << "seed:       " << m["seed"].dump() << "\n"
    << "config:     " << m.value("config_hash", "?");
  if (fs::exists(run_dir / "config.txt")) {
    auto cfg = load_config_file((run_dir / "config.txt").string());
    bool ok = hex(config_hash(cfg)) == m.value("config_hash", "");
    o << (ok ? " (matches config.txt)" : " (MISMATCH with config.txt)");
    if (!ok) throw std::runtime_error("config hash mismatch in " + run_dir.string());
  }
  o << "\n";
  if (!m["stop_time"].is_null()) o << "stop time:  " << m["stop_time"].dump() << "\n";
  for (const auto& f : m["files"]) {
    fs::path p = run_dir / f["name"].get<std::string>();
    if (!fs::exists(p)) throw std::runtime_error("manifest lists missing file " + p.string());
    if (hex(file_digest(p)) != f["fnv1a"].get<std::string>())
      throw std::runtime_error("digest mismatch for " + p.string());
    o << "  ok " << f["name"].get<std::string>() << " " << f["fnv1a"].get<std::string>() << "\n";
  }
  fs::path dpath = run_dir / "diagnostics.json";
  if (fs::exists(dpath)) {
    std::ifstream d(dpath);
    json dj = json::parse(d);
    if (dj.contains("health")) {
      const auto& h = dj["health"];
      o << "mass min eigenvalue:   " << h["mass_min_eigenvalue"].dump() << "\n"
        << "mass max asymmetry:    " << h["mass_max_asymmetry"].dump() << "\n"
        << "max trace residual:    " << h["max_trace_residual"].dump() << "\n"
        << "ledger max residual:   " << h["ledger_max_residual"].dump() << "\n";
    }
    if (dj.contains("frac")) o << "frac ladder ratio:     " << dj["frac"]["ladder_ratio"].dump() << "\n";
  }
  if (status_code) *status_code = m.value("exit_code", 1);
  return o.str();
}

}  // namespace fsilab
