#pragma once

#include <cgh/classicality.hpp>
#include <cgh/error.hpp>
#include <cgh/evolution.hpp>
#include <cgh/grid.hpp>
#include <cgh/hydro.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace cgh {

using Json = nlohmann::ordered_json;

struct GridConfig {
  double box_length = 2.0 * std::numbers::pi;
  std::size_t M = 0;
  int d = 1;
  int N = 1;
};

struct PhysicsConfig {
  double m = 0.0;
  double l_av = -1.0;
  double c_P = 0.5;
  PrefactorMode prefactor_mode = PrefactorMode::standard;
  double s_H = -1.0;
  double s_zeta = 1.0;
  double eps_node = 1e-6;
  KappaReading kappa_reading = KappaReading::gradient_of_product;
  UnitMode units = UnitMode::natural;
};

struct TimeConfig {
  double dt = 0.0;
  double T = -1.0;
  std::size_t snapshot_stride = 1;
};

/// Initial state description. Vector parameters take one value (broadcast), d values (shared by
/// all particles) or N*d values (per particle and axis).
struct InitialStateConfig {
  std::string kind = "gaussian_packet";
  std::vector<double> center{0.0};
  std::vector<double> width{1.0};
  std::vector<double> wavenumber{0.0};
  std::vector<long> mode{0};
  Complex amplitude{1.0, 0.0};
  Complex weight{1.0, 0.0};  ///< coefficient inside a superposition
  std::vector<InitialStateConfig> components;
  std::string path;
  bool normalize = false;
};

struct FluctuationConfig {
  FluctuationMode mode = FluctuationMode::deterministic;
  std::uint64_t seed = 0;
  double irrelevant_amplitude = 0.0;
  double threshold = 1e-3;
};

struct SweepConfig {
  std::vector<double> l_grid;
  double t_probe = 0.0;
  double tol = 1e-3;
  double ratio_threshold = 0.1;
  double horizon = -1.0;  ///< < 0: same as t_probe
  std::size_t time_samples = 3;
  double floor = 1e-12;
};

struct KernelsConfig {
  double k_max = 0.0;  ///< <= 0: min(half Nyquist, 1 / max l_values)
  std::vector<double> l_values;
};

struct OutputConfig {
  std::string directory;
  bool binary = true;
  bool csv = true;
};

struct BudgetConfig {
  std::size_t max_points = default_memory_budget;
};

struct RunConfig {
  GridConfig grid;
  PhysicsConfig physics;
  TimeConfig time;
  InitialStateConfig initial_state;
  FluctuationConfig fluctuation;
  SweepConfig sweep;
  KernelsConfig kernels;
  OutputConfig output;
  BudgetConfig budget;
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
}

inline std::string join(const std::string& path, const char* key) { return path + "." + key; }

inline double get_number(const Json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key) + " must be a number");
  return v.get<double>();
}

inline double require_number(const Json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing required key '" + join(path, key) + "'");
  return get_number(obj, path, key, 0.0);
}

inline long long get_integer(const Json& obj, const std::string& path, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key) + " must be an integer");
  return v.get<long long>();
}

inline std::uint64_t get_unsigned(const Json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(join(path, key) + " must be a non-negative integer");
}

inline std::string get_string(const Json& obj, const std::string& path, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key) + " must be a string");
  return v.get<std::string>();
}

inline bool get_bool(const Json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key) + " must be true or false");
  return v.get<bool>();
}

inline std::vector<double> get_numbers(const Json& obj, const std::string& path, const char* key,
                                       const std::vector<double>& fallback, bool allow_empty = false) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || (v.empty() && !allow_empty)) throw ConfigError(join(path, key) + " must be a number or a non-empty array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(join(path, key) + " must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<long> get_integers(const Json& obj, const std::string& path, const char* key,
                                      const std::vector<long>& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_number_integer()) return {v.get<long>()};
  if (!v.is_array() || v.empty()) throw ConfigError(join(path, key) + " must be an integer or a non-empty array");
  std::vector<long> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(join(path, key) + " must contain integers");
    out.push_back(e.get<long>());
  }
  return out;
}

inline Complex get_complex(const Json& obj, const std::string& path, const char* key, Complex fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(join(path, key) + " must be a number or [re, im]");
}

inline Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline void require_positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be positive");
}

inline void require_broadcast(std::size_t n, int d, int N, const std::string& name) {
  const auto D = static_cast<std::size_t>(d);
  if (n != 1 && n != D && n != D * static_cast<std::size_t>(N))
    throw ConfigError(name + " must have 1, d or N*d entries");
}

inline InitialStateConfig parse_initial_state(const Json& j, const std::string& path, int depth) {
  reject_unknown(j, path, {"kind", "center", "width", "wavenumber", "mode", "amplitude", "weight", "components",
                           "path", "normalize"});
  InitialStateConfig s;
  s.kind = get_string(j, path, "kind", s.kind);
  if (s.kind != "gaussian_packet" && s.kind != "plane_wave" && s.kind != "superposition" && s.kind != "file")
    throw ConfigError(join(path, "kind") + " must be gaussian_packet, plane_wave, superposition or file");
  s.center = get_numbers(j, path, "center", s.center);
  s.width = get_numbers(j, path, "width", s.width);
  s.wavenumber = get_numbers(j, path, "wavenumber", s.wavenumber);
  s.mode = get_integers(j, path, "mode", s.mode);
  s.amplitude = get_complex(j, path, "amplitude", s.amplitude);
  s.weight = get_complex(j, path, "weight", s.weight);
  s.path = get_string(j, path, "path", s.path);
  s.normalize = get_bool(j, path, "normalize", s.normalize);
  if (j.contains("components")) {
    const Json& c = j.at("components");
    if (!c.is_array()) throw ConfigError(join(path, "components") + " must be an array");
    if (depth > 4) throw ConfigError(join(path, "components") + " nests too deeply");
    for (std::size_t i = 0; i < c.size(); ++i)
      s.components.push_back(parse_initial_state(c[i], path + ".components[" + std::to_string(i) + "]", depth + 1));
  }
  if (s.kind == "superposition" && s.components.empty())
    throw ConfigError(join(path, "components") + " must list at least one state");
  if (s.kind == "file" && s.path.empty()) throw ConfigError("missing required key '" + join(path, "path") + "'");
  for (double w : s.width) require_positive(w, join(path, "width"));
  return s;
}

inline Json initial_state_json(const InitialStateConfig& s) {
  Json j;
  j["kind"] = s.kind;
  j["center"] = s.center;
  j["width"] = s.width;
  j["wavenumber"] = s.wavenumber;
  j["mode"] = s.mode;
  j["amplitude"] = complex_json(s.amplitude);
  j["weight"] = complex_json(s.weight);
  Json comps = Json::array();
  for (const auto& c : s.components) comps.push_back(initial_state_json(c));
  j["components"] = comps;
  j["path"] = s.path;
  j["normalize"] = s.normalize;
  return j;
}

inline void check_initial_state(const InitialStateConfig& s, int d, int N, const std::string& path) {
  require_broadcast(s.center.size(), d, N, join(path, "center"));
  require_broadcast(s.width.size(), d, N, join(path, "width"));
  require_broadcast(s.wavenumber.size(), d, N, join(path, "wavenumber"));
  require_broadcast(s.mode.size(), d, N, join(path, "mode"));
  for (std::size_t i = 0; i < s.components.size(); ++i)
    check_initial_state(s.components[i], d, N, path + ".components[" + std::to_string(i) + "]");
}

/// l grid given as an array or as {start, stop, count, spacing: linear | log}.
inline std::vector<double> parse_l_grid(const Json& j, const std::string& path) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError(path + " must contain numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  reject_unknown(j, path, {"start", "stop", "count", "spacing"});
  const double a = require_number(j, path, "start"), b = require_number(j, path, "stop");
  const long long n = get_integer(j, path, "count", 0);
  const std::string spacing = get_string(j, path, "spacing", "linear");
  if (n < 2) throw ConfigError(join(path, "count") + " must be >= 2");
  if (spacing != "linear" && spacing != "log") throw ConfigError(join(path, "spacing") + " must be linear or log");
  if (spacing == "log" && !(a > 0.0 && b > 0.0)) throw ConfigError(path + " needs positive start and stop for log spacing");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] =
        spacing == "linear" ? a + (b - a) * f : std::exp(std::log(a) + (std::log(b) - std::log(a)) * f);
  }
  return out;
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  if (c.grid.M == 0) throw ConfigError("missing required key 'grid.M'");
  (void)make_grid(c.grid.box_length, c.grid.M, c.grid.d, c.grid.N, c.budget.max_points);
  detail::require_positive(c.physics.m, "physics.m");
  if (!(c.physics.l_av >= 0.0) || !std::isfinite(c.physics.l_av)) throw ConfigError("physics.l_av must be >= 0");
  detail::require_positive(c.physics.c_P, "physics.c_P");
  if (std::abs(c.physics.s_H) != 1.0) throw ConfigError("physics.s_H must be +1 or -1");
  if (std::abs(c.physics.s_zeta) != 1.0) throw ConfigError("physics.s_zeta must be +1 or -1");
  if (!(c.physics.eps_node >= 0.0) || !(c.physics.eps_node < 1.0)) throw ConfigError("physics.eps_node must be in [0, 1)");
  detail::require_positive(c.time.dt, "time.dt");
  if (!(c.time.T >= 0.0) || !std::isfinite(c.time.T)) throw ConfigError("time.T must be >= 0");
  if (c.time.snapshot_stride < 1) throw ConfigError("time.snapshot_stride must be >= 1");
  detail::check_initial_state(c.initial_state, c.grid.d, c.grid.N, "initial_state");
  if (!(c.fluctuation.irrelevant_amplitude >= 0.0)) throw ConfigError("fluctuation.irrelevant_amplitude must be >= 0");
  if (!(c.fluctuation.threshold >= 0.0 && c.fluctuation.threshold < 1.0))
    throw ConfigError("fluctuation.threshold must be in [0, 1)");
  for (std::size_t i = 0; i < c.sweep.l_grid.size(); ++i) {
    if (!(c.sweep.l_grid[i] >= 0.0) || !std::isfinite(c.sweep.l_grid[i]))
      throw ConfigError("sweep.l_grid values must be >= 0");
    if (i > 0 && !(c.sweep.l_grid[i] > c.sweep.l_grid[i - 1])) throw ConfigError("sweep.l_grid must be strictly increasing");
  }
  if (!(c.sweep.t_probe >= 0.0)) throw ConfigError("sweep.t_probe must be >= 0");
  if (!(c.sweep.tol >= 0.0)) throw ConfigError("sweep.tol must be >= 0");
  detail::require_positive(c.sweep.ratio_threshold, "sweep.ratio_threshold");
  if (c.sweep.time_samples < 1) throw ConfigError("sweep.time_samples must be >= 1");
  if (!(c.sweep.floor >= 0.0)) throw ConfigError("sweep.floor must be >= 0");
  for (double l : c.kernels.l_values)
    if (!(l > 0.0)) throw ConfigError("kernels.l_values must be positive");
  if (c.budget.max_points < 2) throw ConfigError("budget.max_points must be >= 2");
}

inline RunConfig config_from_json(const Json& j) {
  detail::reject_unknown(j, "", {"grid", "physics", "time", "initial_state", "fluctuation", "sweep", "kernels", "output",
                                 "budget"});
  RunConfig c;
  const Json empty = Json::object();
  auto section = [&](const char* name) -> const Json& { return j.contains(name) ? j.at(name) : empty; };

  const Json& g = section("grid");
  detail::reject_unknown(g, "grid", {"box_length", "M", "d", "N"});
  c.grid.box_length = detail::get_number(g, "grid", "box_length", c.grid.box_length);
  c.grid.M = detail::get_unsigned(g, "grid", "M", 0);
  c.grid.d = static_cast<int>(detail::get_integer(g, "grid", "d", c.grid.d));
  c.grid.N = static_cast<int>(detail::get_integer(g, "grid", "N", c.grid.N));

  const Json& p = section("physics");
  detail::reject_unknown(p, "physics", {"m", "l_av", "c_P", "prefactor_mode", "s_H", "s_zeta", "eps_node",
                                        "kappa_reading", "units"});
  c.physics.m = detail::require_number(p, "physics", "m");
  c.physics.l_av = detail::require_number(p, "physics", "l_av");
  c.physics.c_P = detail::get_number(p, "physics", "c_P", c.physics.c_P);
  const std::string pm = detail::get_string(p, "physics", "prefactor_mode", "standard");
  if (pm == "standard") c.physics.prefactor_mode = PrefactorMode::standard;
  else if (pm == "mass_squared") c.physics.prefactor_mode = PrefactorMode::mass_squared;
  else throw ConfigError("physics.prefactor_mode must be standard or mass_squared");
  c.physics.s_H = detail::get_number(p, "physics", "s_H", c.physics.s_H);
  c.physics.s_zeta = detail::get_number(p, "physics", "s_zeta", c.physics.s_zeta);
  c.physics.eps_node = detail::get_number(p, "physics", "eps_node", c.physics.eps_node);
  const std::string kr = detail::get_string(p, "physics", "kappa_reading", "gradient_of_product");
  if (kr == "gradient_of_product") c.physics.kappa_reading = KappaReading::gradient_of_product;
  else if (kr == "product_with_gradient") c.physics.kappa_reading = KappaReading::product_with_gradient;
  else throw ConfigError("physics.kappa_reading must be gradient_of_product or product_with_gradient");
  const std::string un = detail::get_string(p, "physics", "units", "natural");
  if (un == "natural") c.physics.units = UnitMode::natural;
  else if (un == "si") c.physics.units = UnitMode::si;
  else throw ConfigError("physics.units must be natural or si");

  const Json& t = section("time");
  detail::reject_unknown(t, "time", {"dt", "T", "snapshot_stride"});
  c.time.dt = detail::require_number(t, "time", "dt");
  c.time.T = detail::require_number(t, "time", "T");
  c.time.snapshot_stride = detail::get_unsigned(t, "time", "snapshot_stride", c.time.snapshot_stride);

  if (j.contains("initial_state")) c.initial_state = detail::parse_initial_state(j.at("initial_state"), "initial_state", 0);

  const Json& f = section("fluctuation");
  detail::reject_unknown(f, "fluctuation", {"mode", "seed", "irrelevant_amplitude", "threshold"});
  const std::string fm = detail::get_string(f, "fluctuation", "mode", "deterministic");
  if (fm == "deterministic") c.fluctuation.mode = FluctuationMode::deterministic;
  else if (fm == "ensemble") c.fluctuation.mode = FluctuationMode::ensemble;
  else throw ConfigError("fluctuation.mode must be deterministic or ensemble");
  c.fluctuation.seed = detail::get_unsigned(f, "fluctuation", "seed", 0);
  c.fluctuation.irrelevant_amplitude =
      detail::get_number(f, "fluctuation", "irrelevant_amplitude", c.fluctuation.irrelevant_amplitude);
  c.fluctuation.threshold = detail::get_number(f, "fluctuation", "threshold", c.fluctuation.threshold);

  const Json& s = section("sweep");
  detail::reject_unknown(s, "sweep", {"l_grid", "t_probe", "tol", "ratio_threshold", "horizon", "time_samples", "floor"});
  if (s.contains("l_grid")) c.sweep.l_grid = detail::parse_l_grid(s.at("l_grid"), "sweep.l_grid");
  c.sweep.t_probe = detail::get_number(s, "sweep", "t_probe", c.sweep.t_probe);
  c.sweep.tol = detail::get_number(s, "sweep", "tol", c.sweep.tol);
  c.sweep.ratio_threshold = detail::get_number(s, "sweep", "ratio_threshold", c.sweep.ratio_threshold);
  c.sweep.horizon = detail::get_number(s, "sweep", "horizon", c.sweep.horizon);
  c.sweep.time_samples = detail::get_unsigned(s, "sweep", "time_samples", c.sweep.time_samples);
  c.sweep.floor = detail::get_number(s, "sweep", "floor", c.sweep.floor);
  if (c.sweep.horizon < 0.0) c.sweep.horizon = c.sweep.t_probe;

  const Json& k = section("kernels");
  detail::reject_unknown(k, "kernels", {"k_max", "l_values"});
  c.kernels.k_max = detail::get_number(k, "kernels", "k_max", c.kernels.k_max);
  c.kernels.l_values = detail::get_numbers(k, "kernels", "l_values", {}, true);

  const Json& o = section("output");
  detail::reject_unknown(o, "output", {"directory", "formats"});
  c.output.directory = detail::get_string(o, "output", "directory", "");
  if (o.contains("formats")) {
    const Json& fmts = o.at("formats");
    if (!fmts.is_array()) throw ConfigError("output.formats must be an array");
    c.output.binary = c.output.csv = false;
    for (const auto& e : fmts) {
      const std::string v = e.is_string() ? e.get<std::string>() : "";
      if (v == "binary") c.output.binary = true;
      else if (v == "csv") c.output.csv = true;
      else throw ConfigError("output.formats entries must be binary or csv");
    }
  }

  const Json& b = section("budget");
  detail::reject_unknown(b, "budget", {"max_points"});
  c.budget.max_points = detail::get_unsigned(b, "budget", "max_points", c.budget.max_points);

  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// Full config with every default filled; config_from_json(to_json(c)) reproduces c.
inline Json to_json(const RunConfig& c) {
  Json j;
  j["grid"] = {{"box_length", c.grid.box_length}, {"M", c.grid.M}, {"d", c.grid.d}, {"N", c.grid.N}};
  j["physics"] = {
      {"m", c.physics.m},
      {"l_av", c.physics.l_av},
      {"c_P", c.physics.c_P},
      {"prefactor_mode", c.physics.prefactor_mode == PrefactorMode::standard ? "standard" : "mass_squared"},
      {"s_H", c.physics.s_H},
      {"s_zeta", c.physics.s_zeta},
      {"eps_node", c.physics.eps_node},
      {"kappa_reading", c.physics.kappa_reading == KappaReading::gradient_of_product ? "gradient_of_product"
                                                                                     : "product_with_gradient"},
      {"units", c.physics.units == UnitMode::natural ? "natural" : "si"}};
  j["time"] = {{"dt", c.time.dt}, {"T", c.time.T}, {"snapshot_stride", c.time.snapshot_stride}};
  j["initial_state"] = detail::initial_state_json(c.initial_state);
  j["fluctuation"] = {{"mode", c.fluctuation.mode == FluctuationMode::deterministic ? "deterministic" : "ensemble"},
                      {"seed", c.fluctuation.seed},
                      {"irrelevant_amplitude", c.fluctuation.irrelevant_amplitude},
                      {"threshold", c.fluctuation.threshold}};
  j["sweep"] = {{"l_grid", c.sweep.l_grid},
                {"t_probe", c.sweep.t_probe},
                {"tol", c.sweep.tol},
                {"ratio_threshold", c.sweep.ratio_threshold},
                {"horizon", c.sweep.horizon},
                {"time_samples", c.sweep.time_samples},
                {"floor", c.sweep.floor}};
  j["kernels"] = {{"k_max", c.kernels.k_max}, {"l_values", c.kernels.l_values}};
  Json formats = Json::array();
  if (c.output.binary) formats.push_back("binary");
  if (c.output.csv) formats.push_back("csv");
  j["output"] = {{"directory", c.output.directory}, {"formats", formats}};
  j["budget"] = {{"max_points", c.budget.max_points}};
  return j;
}

}  // namespace cgh
