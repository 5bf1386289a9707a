#pragma once

#include <cgh/classicality.hpp>
#include <cgh/config.hpp>
#include <cgh/evolution.hpp>
#include <cgh/hydro.hpp>
#include <cgh/io.hpp>
#include <cgh/madelung.hpp>
#include <cgh/projector.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cgh {

inline constexpr const char* artifact_version = "1.0.0";

// ---------------------------------------------------------------------------------------------
// Initial states.

namespace detail {

inline double pick(const std::vector<double>& v, int p, int a, int d) {
  if (v.size() == 1) return v[0];
  if (v.size() == static_cast<std::size_t>(d)) return v[static_cast<std::size_t>(a)];
  return v[static_cast<std::size_t>(p * d + a)];
}

inline long pick(const std::vector<long>& v, int p, int a, int d) {
  if (v.size() == 1) return v[0];
  if (v.size() == static_cast<std::size_t>(d)) return v[static_cast<std::size_t>(a)];
  return v[static_cast<std::size_t>(p * d + a)];
}

/// Periodized 1D packet factor (2 pi s^2)^(-1/4) exp(-(x-c)^2 / 4 s^2 + i k (x-c)), images -2..2.
inline Complex packet_factor(double x, double c, double s, double k, double L) {
  Complex acc{};
  for (int img = -2; img <= 2; ++img) {
    const double y = x - c + img * L;
    acc += std::exp(-y * y / (4.0 * s * s)) * std::polar(1.0, k * y);
  }
  return acc * std::pow(2.0 * std::numbers::pi * s * s, -0.25);
}

inline WaveFunction build_state(const InitialStateConfig& s, const Grid& g) {
  WaveFunction w = make_wavefunction(g, Representation::position);
  const int d = g.dims;
  if (s.kind == "gaussian_packet" || s.kind == "plane_wave") {
    for (std::size_t i = 0; i < g.size(); ++i) {
      Complex v = s.amplitude;
      for (int p = 0; p < g.particles; ++p)
        for (int a = 0; a < d; ++a) {
          const double x = g.coordinate(g.axis_index(i, p * d + a));
          if (s.kind == "gaussian_packet") {
            v *= packet_factor(x, pick(s.center, p, a, d), pick(s.width, p, a, d), pick(s.wavenumber, p, a, d),
                               g.box_length);
          } else {
            const double k = 2.0 * std::numbers::pi * static_cast<double>(pick(s.mode, p, a, d)) / g.box_length;
            v *= std::polar(1.0, k * x);
          }
        }
      w.values[i] = v;
    }
  } else if (s.kind == "superposition") {
    for (const auto& c : s.components) {
      const WaveFunction part = build_state(c, g);
      for (std::size_t i = 0; i < g.size(); ++i) w.values[i] += c.weight * part.values[i];
    }
  } else if (s.kind == "file") {
    const ArrayData a = decode_array(read_file(s.path));
    if (!a.is_complex) throw ConfigError("initial_state.path must hold a complex array");
    if (a.shape.size() != static_cast<std::size_t>(g.rank()))
      throw ConfigError("initial_state.path: array rank does not match N*d");
    for (auto n : a.shape)
      if (n != g.points_per_dim) throw ConfigError("initial_state.path: array sizes do not match grid.M");
    for (std::size_t i = 0; i < g.size(); ++i) w.values[i] = {a.values[2 * i], a.values[2 * i + 1]};
  } else {
    throw ConfigError("initial_state.kind '" + s.kind + "' is not supported");
  }
  if (s.normalize) {
    const double n = w.norm();
    if (!(n > 0.0)) throw ConfigError("initial_state: cannot normalize a zero state");
    for (auto& v : w.values) v /= n;
  }
  return w;
}

}  // namespace detail

inline Grid grid_of(const RunConfig& c) {
  return make_grid(c.grid.box_length, c.grid.M, c.grid.d, c.grid.N, c.budget.max_points);
}

inline WaveFunction initial_state(const RunConfig& c) { return detail::build_state(c.initial_state, grid_of(c)); }

// ---------------------------------------------------------------------------------------------
// Run plumbing.

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 1;
  std::string command;
};

class Stopwatch {
 public:
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  const Json& json() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  Json timings_ = Json::object();
};

namespace detail {

inline std::vector<std::uint64_t> cube_shape(const Grid& g, int rank) {
  return std::vector<std::uint64_t>(static_cast<std::size_t>(rank), g.points_per_dim);
}

inline Json norms_json(const ResidualNorms& n) { return {{"l2", n.l2}, {"sup", n.sup}}; }

inline double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

/// JSON cannot carry infinities; they are written as strings.
inline Json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json finish_manifest(const RunConfig& cfg, const RunOptions& opt, const OutputWriter& out, Json results,
                            const Stopwatch& sw) {
  Json m;
  m["artifact"] = "cgh";
  m["version"] = artifact_version;
  m["command"] = opt.command;
  m["threads"] = opt.threads;
  m["seed"] = cfg.fluctuation.seed;
  m["config"] = to_json(cfg);
  m["results"] = std::move(results);
  m["timings_seconds"] = sw.json();
  Json files = Json::array();
  for (const auto& f : out.files()) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  m["files"] = files;
  write_file_atomic(out.root() / "manifest.json", m.dump(2) + "\n");
  return m;
}

struct Physics {
  Grid grid;
  WaveFunction w0;
  ProjectorSymbol symbol;
  KernelSet kernels;
  WaveFunction a0;
  FluctuationSource source;
};

inline Physics setup(const RunConfig& cfg) {
  Physics p;
  p.grid = grid_of(cfg);
  p.w0 = detail::build_state(cfg.initial_state, p.grid);
  p.symbol = build_symbol(p.grid, cfg.physics.l_av, cfg.physics.c_P);
  p.kernels = build_kernels(p.grid, cfg.physics.l_av, cfg.physics.m, cfg.physics.c_P);
  p.a0 = coarse_grain(p.w0, p.symbol);
  p.source = make_fluctuation_source(p.w0, p.symbol, cfg.fluctuation.mode, cfg.fluctuation.seed,
                                     cfg.fluctuation.irrelevant_amplitude, cfg.fluctuation.threshold,
                                     cfg.physics.s_zeta);
  return p;
}

inline std::size_t step_count(const RunConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.time.T / cfg.time.dt));
}

inline Trajectory run_trajectory(const RunConfig& cfg, const Physics& p, std::size_t stride, int threads) {
  const std::size_t steps = step_count(cfg);
  const std::size_t tail = std::min<std::size_t>(2, steps);
  const std::size_t snaps = steps / stride + 2 + tail;
  if (static_cast<double>(snaps) * 2.0 * static_cast<double>(p.grid.size()) > static_cast<double>(cfg.budget.max_points))
    throw ConfigError("memory budget exceeded: " + std::to_string(snaps) + " snapshots of " +
                      std::to_string(p.grid.size()) + " points (raise time.snapshot_stride or budget.max_points)");
  EvolutionOptions eo;
  eo.dt = cfg.time.dt;
  eo.t_final = cfg.time.T;
  eo.snapshot_stride = stride;
  eo.sign_h = cfg.physics.s_H;
  eo.threads = threads;
  eo.tail_snapshots = tail;
  return evolve_zwanzig(p.a0, p.source, p.kernels, eo);
}

/// Hydrodynamic diagnostics at the middle of the last three steps.
struct EndDiagnostics {
  bool available = false;
  HydroFields fields;
  EnergyGradients gradients;
  ResidualSet residuals;
  ThermalPressure pressure;
  BoundReport bound;
  double lagrangian = 0.0;
  double time = 0.0;
};

inline EndDiagnostics end_diagnostics(const RunConfig& cfg, const Physics& p, const Trajectory& traj, int threads) {
  EndDiagnostics d;
  const std::size_t n = traj.states.size();
  if (step_count(cfg) < 2 || n < 3) return d;
  HydroOptions ho;
  ho.eps_node = cfg.physics.eps_node;
  const double m = cfg.physics.m;
  const HydroFields prev = extract_hydro(traj.states[n - 3], m, ho);
  d.fields = extract_hydro(traj.states[n - 2], m, ho);
  const HydroFields next = extract_hydro(traj.states[n - 1], m, ho);
  GradientOptions go;
  go.prefactor_mode = cfg.physics.prefactor_mode;
  go.threads = threads;
  d.gradients = energy_gradients(d.fields, coarse_energy_state(traj, p.kernels, p.source, n - 2), go);
  ResidualOptions ro;
  ro.kappa_reading = cfg.physics.kappa_reading;
  d.residuals = eom_residuals(prev, d.fields, next, cfg.time.dt, d.gradients, ro);
  d.pressure = thermal_pressure_from_gradient(d.fields.one_particle(), d.fields.rho, d.fields.kappa_sq, d.fields.grad_mu);
  BoundOptions bo;
  bo.kappa_reading = cfg.physics.kappa_reading;
  d.bound = quantum_force_bound(d.fields, d.gradients, bo);
  d.lagrangian = lagrangian(prev, d.fields, next, cfg.time.dt, d.gradients);
  d.time = traj.times[n - 2];
  d.available = true;
  return d;
}

inline Json diagnostics_json(const EndDiagnostics& d) {
  if (!d.available) return nullptr;
  const auto& r = d.residuals;
  double min_eig = 0.0;
  for (double v : d.pressure.min_eigenvalue) min_eig = std::min(min_eig, v);
  return {{"time", d.time},
          {"e_qm", d.gradients.e_qm},
          {"e_p", {d.gradients.e_p.real(), d.gradients.e_p.imag()}},
          {"lagrangian", d.lagrangian},
          {"residuals",
           {{"continuity", norms_json(r.n_varphi)},
            {"vortex_lambda", norms_json(r.n_lambda)},
            {"vortex_mu", norms_json(r.n_mu)},
            {"bernoulli", norms_json(r.n_rho)},
            {"kappa", norms_json(r.n_kappa)},
            {"euler", norms_json(r.n_euler)},
            {"perfect_fluid", norms_json(r.n_perfect_fluid)},
            {"quantum_force", norms_json(r.n_quantum_force)}}},
          {"thermal_pressure_min_eigenvalue", min_eig},
          {"min_raw_kappa_sq", d.fields.min_raw_kappa_sq},
          {"fit_residual", d.fields.fit_residual},
          {"fit_converged", d.fields.fit_converged},
          {"bound",
           {{"lhs", norms_json(d.bound.lhs)},
            {"rhs", norms_json(d.bound.rhs)},
            {"satisfied_l2", d.bound.satisfied_l2},
            {"satisfied_sup", d.bound.satisfied_sup},
            {"margin_l2", number_json(d.bound.margin_l2)},
            {"margin_sup", number_json(d.bound.margin_sup)}}}};
}

inline CsvTable residual_table(const ResidualSet& r) {
  CsvTable t({"equation", "l2", "sup"});
  auto add = [&](const char* name, const ResidualNorms& n) { t.row().add(std::string(name)).add(n.l2).add(n.sup); };
  add("continuity", r.n_varphi);
  add("vortex_lambda", r.n_lambda);
  add("vortex_mu", r.n_mu);
  add("bernoulli", r.n_rho);
  add("kappa", r.n_kappa);
  add("euler", r.n_euler);
  add("perfect_fluid", r.n_perfect_fluid);
  add("quantum_force", r.n_quantum_force);
  return t;
}

inline void write_fields(OutputWriter& out, const RunConfig& cfg, const EndDiagnostics& d) {
  const Grid g1 = d.fields.one_particle();
  const std::size_t n = g1.particle_size();
  const int dims = g1.dims;
  const auto& f = d.fields;
  std::vector<std::pair<std::string, const Field*>> cols{{"rho", &f.rho},           {"varphi", &f.varphi},
                                                         {"lambda", &f.lambda},     {"mu", &f.mu},
                                                         {"kappa_sq", &f.kappa_sq}, {"quantum_potential", &d.gradients.qm_rho},
                                                         {"pressure_min_eigenvalue", &d.pressure.min_eigenvalue}};
  for (int a = 0; a < dims; ++a) cols.emplace_back("u_" + std::to_string(a), &f.u[static_cast<std::size_t>(a)]);
  if (cfg.output.binary) {
    const auto shape = cube_shape(g1, dims);
    for (const auto& [name, field] : cols) out.write_real("fields/" + name + ".cgh", shape, *field);
  }
  if (cfg.output.csv) {
    std::vector<std::string> header;
    for (int a = 0; a < dims; ++a) header.push_back("x_" + std::to_string(a));
    header.push_back("masked");
    for (const auto& c : cols) header.push_back(c.first);
    CsvTable t(header);
    for (std::size_t i = 0; i < n; ++i) {
      t.row();
      for (int a = 0; a < dims; ++a) t.add(g1.coordinate(g1.axis_index(i, a)));
      t.add(f.mask[i] != 0);
      for (const auto& c : cols) t.add((*c.second)[i]);
    }
    out.write_csv("fields.csv", t);
    out.write_csv("residuals.csv", residual_table(d.residuals));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Commands.

inline Json run_evolve(const RunConfig& cfg, const RunOptions& opt) {
  Stopwatch sw;
  OutputWriter out(opt.out_dir);
  const detail::Physics p = detail::setup(cfg);
  sw.mark("setup");
  const Trajectory traj = detail::run_trajectory(cfg, p, cfg.time.snapshot_stride, opt.threads);
  sw.mark("evolve");

  double drift = 0.0, match = 0.0;
  std::vector<double> match_per_snapshot;
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    drift = std::max(drift, std::abs(traj.norm_ratio[s] - 1.0));
    const WaveFunction ref =
        as_position(schrodinger_reference(p.a0, cfg.physics.m, traj.times[s] - traj.times.front()));
    const WaveFunction got = as_position(traj.states[s]);
    double e = 0.0;
    for (std::size_t i = 0; i < ref.values.size(); ++i) e = std::max(e, std::abs(got.values[i] - ref.values[i]));
    match_per_snapshot.push_back(e);
    match = std::max(match, e);
  }
  sw.mark("reference");
  const detail::EndDiagnostics diag = detail::end_diagnostics(cfg, p, traj, opt.threads);
  sw.mark("hydro");

  if (cfg.output.binary) {
    const auto shape = detail::cube_shape(p.grid, p.grid.rank());
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
      char name[64];
      std::snprintf(name, sizeof(name), "states/state_%06zu.cgh", s);
      out.write_complex(name, shape, as_position(traj.states[s]).values);
    }
  }
  if (cfg.output.csv) {
    CsvTable t({"snapshot", "t", "norm_ratio", "schrodinger_match_error"});
    for (std::size_t s = 0; s < traj.states.size(); ++s)
      t.row().add(s).add(traj.times[s]).add(traj.norm_ratio[s]).add(match_per_snapshot[s]);
    out.write_csv("trajectory.csv", t);
  }
  if (diag.available) detail::write_fields(out, cfg, diag);
  sw.mark("write");

  Json results = {{"snapshots", traj.states.size()},
                  {"norm_drift", drift},
                  {"initial_projection_defect", traj.initial_projection_defect},
                  {"schrodinger_match_error", match},
                  {"diagnostics", detail::diagnostics_json(diag)}};
  return detail::finish_manifest(cfg, opt, out, std::move(results), sw);
}

inline Json run_diagnose(const RunConfig& cfg, const RunOptions& opt) {
  Stopwatch sw;
  if (detail::step_count(cfg) < 2) throw ConfigError("diagnose needs time.T >= 2 * time.dt");
  OutputWriter out(opt.out_dir);
  const detail::Physics p = detail::setup(cfg);
  sw.mark("setup");
  const Trajectory traj = detail::run_trajectory(cfg, p, std::max<std::size_t>(detail::step_count(cfg), 1), opt.threads);
  sw.mark("evolve");
  const detail::EndDiagnostics diag = detail::end_diagnostics(cfg, p, traj, opt.threads);
  sw.mark("hydro");
  detail::write_fields(out, cfg, diag);
  if (cfg.output.csv) {
    const auto& tp = diag.pressure;
    const auto D = static_cast<std::size_t>(tp.dims);
    std::vector<std::string> header{"index"};
    for (std::size_t a = 0; a < D; ++a)
      for (std::size_t b = 0; b < D; ++b) header.push_back("p_" + std::to_string(a) + std::to_string(b));
    header.push_back("min_eigenvalue");
    header.push_back("max_eigenvalue");
    CsvTable t(header);
    for (std::size_t i = 0; i < tp.min_eigenvalue.size(); ++i) {
      t.row().add(i);
      for (const auto& c : tp.components) t.add(c[i]);
      t.add(tp.min_eigenvalue[i]).add(tp.max_eigenvalue[i]);
    }
    out.write_csv("thermal_pressure.csv", t);
  }
  sw.mark("write");
  Json results = {{"diagnostics", detail::diagnostics_json(diag)},
                  {"initial_projection_defect", traj.initial_projection_defect},
                  {"norm_drift", traj.norm_ratio.back() - 1.0}};
  return detail::finish_manifest(cfg, opt, out, std::move(results), sw);
}

inline Json run_sweep(const RunConfig& cfg, const RunOptions& opt) {
  Stopwatch sw;
  if (cfg.sweep.l_grid.size() < 3) throw ConfigError("sweep.l_grid needs at least 3 values");
  OutputWriter out(opt.out_dir);
  const Grid g = grid_of(cfg);
  const WaveFunction w0 = detail::build_state(cfg.initial_state, g);
  SweepOptions so;
  so.mass = cfg.physics.m;
  so.t_probe = cfg.sweep.t_probe;
  so.dt = cfg.time.dt;
  so.exponent_factor = cfg.physics.c_P;
  so.sign_h = cfg.physics.s_H;
  so.tol = cfg.sweep.tol;
  so.floor = cfg.sweep.floor;
  so.fluctuation = {cfg.fluctuation.mode, cfg.fluctuation.seed, cfg.fluctuation.irrelevant_amplitude,
                    cfg.fluctuation.threshold, cfg.physics.s_zeta};
  so.hydro.eps_node = cfg.physics.eps_node;
  so.gradients.prefactor_mode = cfg.physics.prefactor_mode;
  so.bound.kappa_reading = cfg.physics.kappa_reading;
  so.threads = opt.threads;
  const SweepReport rep = sweep_l(w0, cfg.sweep.l_grid, so);
  sw.mark("sweep");
  const NodeScan nodes = min_l_no_nodes(w0, cfg.physics.m, cfg.sweep.l_grid,
                                        cfg.sweep.horizon < 0.0 ? cfg.sweep.t_probe : cfg.sweep.horizon, cfg.sweep.time_samples,
                                        cfg.physics.eps_node, cfg.physics.c_P, opt.threads);
  sw.mark("nodes");
  VerdictOptions vo;
  vo.ratio_threshold = cfg.sweep.ratio_threshold;
  vo.units = cfg.physics.units;
  const Verdict v = classicality_verdict(rep, nodes, vo);

  if (cfg.output.csv) {
    CsvTable legs({"l", "ok", "e_qm", "e_p_re", "e_p_im", "norm_drift", "l_obs", "bound_lhs_l2", "bound_rhs_l2",
                   "bound_lhs_sup", "bound_rhs_sup", "bound_satisfied", "node_free", "first_node_time", "error"});
    for (std::size_t i = 0; i < rep.legs.size(); ++i) {
      const auto& l = rep.legs[i];
      legs.row().add(l.l).add(l.ok).add(l.e_qm).add(l.e_p.real()).add(l.e_p.imag()).add(l.norm_drift).add(l.l_obs);
      legs.add(l.bound.lhs.l2).add(l.bound.rhs.l2).add(l.bound.lhs.sup).add(l.bound.rhs.sup).add(l.bound.satisfied_l2);
      legs.add(nodes.node_free[i] != 0).add(nodes.first_node_time[i]).add(l.error);
    }
    out.write_csv("sweep.csv", legs);
    CsvTable der({"l", "valid", "d_rho", "d_varphi", "d_lambda", "d_mu", "d_kappa", "s_rho", "s_varphi", "s_lambda",
                  "s_mu", "s_kappa", "d_energy", "d_coarse_energy", "energy_scale", "stationary"});
    for (const auto& r : rep.derivatives) {
      der.row().add(r.l).add(r.valid).add(r.d_rho).add(r.d_varphi).add(r.d_lambda).add(r.d_mu).add(r.d_kappa);
      der.add(r.s_rho).add(r.s_varphi).add(r.s_lambda).add(r.s_mu).add(r.s_kappa);
      der.add(r.d_energy).add(r.d_coarse_energy).add(r.energy_scale).add(r.stationary);
    }
    out.write_csv("derivatives.csv", der);
  }
  if (cfg.output.binary) {
    const Grid g1 = g.single_particle();
    std::vector<std::uint64_t> shape{rep.legs.size()};
    for (int a = 0; a < g1.dims; ++a) shape.push_back(g1.points_per_dim);
    std::vector<double> rho;
    for (const auto& l : rep.legs) {
      if (l.ok) rho.insert(rho.end(), l.fields.rho.begin(), l.fields.rho.end());
      else rho.insert(rho.end(), g1.particle_size(), 0.0);
    }
    out.write_real("sweep_rho.cgh", shape, rho);
  }
  sw.mark("write");

  Json failures = Json::array();
  for (const auto& l : rep.legs)
    if (!l.ok) failures.push_back({{"l", l.l}, {"error", l.error}});
  Json results = {{"stationary_candidates", rep.stationary_candidates},
                  {"l_prime", nodes.l_prime ? Json(*nodes.l_prime) : Json(nullptr)},
                  {"failed_legs", failures},
                  {"verdict",
                   {{"stationary_l_exists", v.stationary_l_exists},
                    {"nodes_absent", v.nodes_absent},
                    {"bound_satisfied", v.bound_satisfied},
                    {"scale_separation", v.scale_separation},
                    {"chosen_l", v.chosen_l ? Json(*v.chosen_l) : Json(nullptr)},
                    {"temperature", v.temperature ? detail::number_json(*v.temperature) : Json(nullptr)}}}};
  return detail::finish_manifest(cfg, opt, out, std::move(results), sw);
}

inline Json run_kernels(const RunConfig& cfg, const RunOptions& opt) {
  Stopwatch sw;
  OutputWriter out(opt.out_dir);
  const Grid g = grid_of(cfg);
  const KernelSet k = build_kernels(g, cfg.physics.l_av, cfg.physics.m, cfg.physics.c_P);
  sw.mark("kernels");
  if (cfg.output.binary) {
    const auto shape = detail::cube_shape(g, g.rank());
    out.write_real("kernels/P.cgh", shape, k.symbol.values);
    out.write_real("kernels/omega.cgh", shape, k.omega.values);
    out.write_real("kernels/H.cgh", shape, k.h);
    out.write_real("kernels/G.cgh", shape, k.g_amplitude);
    out.write_real("kernels/F.cgh", shape, k.f_amplitude);
  }
  if (cfg.output.csv) {
    CsvTable t({"index", "k_squared", "P", "omega", "H", "G_amplitude", "F_amplitude"});
    for (std::size_t i = 0; i < k.h.size(); ++i)
      t.row().add(i).add(k.symbol.k_squared[i]).add(k.symbol.values[i]).add(k.omega.values[i]).add(k.h[i])
          .add(k.g_amplitude[i]).add(k.f_amplitude[i]);
    out.write_csv("kernels.csv", t);
  }
  Json results = {{"l_av", cfg.physics.l_av}, {"max_h", k.max_h()}};
  if (!cfg.kernels.l_values.empty()) {
    double k_max = cfg.kernels.k_max;
    if (!(k_max > 0.0)) {
      // Half Nyquist, capped so that l_av * k_max stays within the expansion's range.
      const double l_top = *std::max_element(cfg.kernels.l_values.begin(), cfg.kernels.l_values.end());
      k_max = std::min(0.5 * std::numbers::pi / g.spacing, 1.0 / l_top);
    }
    const ExpansionReport rep = expansion_report(g, cfg.physics.m, cfg.kernels.l_values, k_max, cfg.physics.c_P);
    if (cfg.output.csv) {
      CsvTable t({"l_av", "h_error", "g_norm", "f_norm", "g_series_error", "f_series_error", "g_reference_discrepancy",
                  "f_reference_discrepancy"});
      for (const auto& r : rep.rows)
        t.row().add(r.l_av).add(r.h_error).add(r.g_norm).add(r.f_norm).add(r.g_series_error).add(r.f_series_error)
            .add(r.g_reference_discrepancy).add(r.f_reference_discrepancy);
      out.write_csv("expansion.csv", t);
    }
    results["expansion"] = {{"k_max", k_max},
                            {"h_error_slope", rep.h_error_slope},
                            {"g_slope", rep.g_slope},
                            {"f_slope", rep.f_slope},
                            {"g_series_error_slope", rep.g_series_error_slope},
                            {"f_series_error_slope", rep.f_series_error_slope},
                            {"g_reference_order", rep.g_reference_order},
                            {"f_reference_order", rep.f_reference_order},
                            {"g_reference_order_mismatch", rep.g_reference_order_mismatch},
                            {"f_reference_order_mismatch", rep.f_reference_order_mismatch}};
  }
  sw.mark("write");
  return detail::finish_manifest(cfg, opt, out, std::move(results), sw);
}

/// Loads a config file, applying the CGH_MEMORY_BUDGET environment override (points) and an
/// optional seed override.
inline RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt) {
  Json j;
  try {
    j = Json::parse(read_file(path), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be an object");
  if (const char* env = std::getenv("CGH_MEMORY_BUDGET"); env && *env) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(env, env + std::strlen(env), v);
    if (r.ec != std::errc{} || *r.ptr != '\0') throw ConfigError("CGH_MEMORY_BUDGET must be a positive integer");
    j["budget"]["max_points"] = v;
  }
  if (seed) j["fluctuation"]["seed"] = *seed;
  return config_from_json(j);
}

inline Json run_command(const std::string& command, const RunConfig& cfg, const RunOptions& opt) {
  if (command == "evolve") return run_evolve(cfg, opt);
  if (command == "sweep") return run_sweep(cfg, opt);
  if (command == "diagnose") return run_diagnose(cfg, opt);
  if (command == "kernels") return run_kernels(cfg, opt);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace cgh
