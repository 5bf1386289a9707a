#pragma once

#include <cgh/evolution.hpp>
#include <cgh/hydro.hpp>
#include <cgh/madelung.hpp>
#include <cgh/parallel.hpp>
#include <cgh/projector.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cgh {

// ---------------------------------------------------------------------------------------------
// Temperature map.

enum class UnitMode { natural, si };

inline constexpr double hbar_si = 1.054571817e-34;
inline constexpr double boltzmann_si = 1.380649e-23;

/// T = hbar^2 / (2 m l_av^2 k_B). l_av = 0 returns +infinity (the infinite-temperature limit).
inline double temperature(double l_av, double mass, UnitMode units = UnitMode::natural) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("physics.m must be positive");
  if (!(l_av >= 0.0)) throw ConfigError("temperature: l_av must be >= 0");
  if (l_av == 0.0) return std::numeric_limits<double>::infinity();
  if (std::isinf(l_av)) return 0.0;
  const double hbar = units == UnitMode::natural ? 1.0 : hbar_si;
  const double kb = units == UnitMode::natural ? 1.0 : boltzmann_si;
  return hbar * hbar / (2.0 * mass * l_av * l_av * kb);
}

inline bool is_infinite_temperature(double t) { return std::isinf(t) && t > 0.0; }

// ---------------------------------------------------------------------------------------------
// Nodal regions.

struct NodalComponent {
  std::vector<std::size_t> points;  ///< flat configuration indices
  double volume = 0.0;
};

struct NodalSet {
  Grid grid;
  Mask mask;
  std::vector<NodalComponent> components;
  double threshold = 0.0;  ///< absolute amplitude threshold eps_node * max|a|

  bool empty() const { return components.empty(); }
  bool contains(std::size_t flat) const { return flat < mask.size() && mask[flat] != 0; }
};

namespace detail {

inline std::size_t axis_stride(const Grid& g, int axis) {
  std::size_t s = 1;
  for (int a = g.rank() - 1; a > axis; --a) s *= g.points_per_dim;
  return s;
}

inline std::size_t periodic_neighbor(const Grid& g, std::size_t flat, int axis, int step) {
  const std::size_t M = g.points_per_dim;
  const std::size_t s = axis_stride(g, axis);
  const std::size_t i = g.axis_index(flat, axis);
  const std::size_t j = step > 0 ? (i + 1) % M : (i + M - 1) % M;
  return flat - i * s + j * s;
}

}  // namespace detail

/// Nodal set of an amplitude already on the coarse level. A point is nodal when |a| is below
/// eps_node * max|a|, or when the straight segment to a lattice neighbour passes below that level
/// (a sign change between samples); in the latter case the endpoint with smaller |a| is marked.
inline NodalSet nodal_set(const WaveFunction& a, double eps_node) {
  if (!(eps_node >= 0.0)) throw ConfigError("physics.eps_node must be >= 0");
  const WaveFunction pos = as_position(a);
  const Grid& g = pos.grid;
  const auto& v = pos.values;
  const std::size_t n = v.size();
  double amax = 0.0;
  for (const auto& z : v) amax = std::max(amax, std::abs(z));
  NodalSet ns{g, Mask(n, 0), {}, eps_node * amax};
  const double thr = ns.threshold;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(v[i]) < thr || amax == 0.0) ns.mask[i] = 1;
  if (g.points_per_dim > 1 && amax > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (int ax = 0; ax < g.rank(); ++ax) {
        const std::size_t j = detail::periodic_neighbor(g, i, ax, 1);
        const Complex d = v[j] - v[i];
        const double dd = std::norm(d);
        if (dd == 0.0) continue;
        const double s = std::clamp(-(std::conj(v[i]) * d).real() / dd, 0.0, 1.0);
        if (std::abs(v[i] + s * d) < thr) ns.mask[std::abs(v[i]) <= std::abs(v[j]) ? i : j] = 1;
      }
  }
  std::vector<std::uint8_t> seen(n, 0);
  const double cell = g.cell_volume();
  for (std::size_t start = 0; start < n; ++start) {
    if (!ns.mask[start] || seen[start]) continue;
    NodalComponent comp;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      comp.points.push_back(i);
      for (int ax = 0; ax < g.rank(); ++ax)
        for (int step : {-1, 1}) {
          const std::size_t j = detail::periodic_neighbor(g, i, ax, step);
          if (ns.mask[j] && !seen[j]) {
            seen[j] = 1;
            queue.push_back(j);
          }
        }
    }
    std::sort(comp.points.begin(), comp.points.end());
    comp.volume = static_cast<double>(comp.points.size()) * cell;
    ns.components.push_back(std::move(comp));
  }
  return ns;
}

/// Omega = nodal set of P w.
inline NodalSet nodal_regions(const WaveFunction& w, const ProjectorSymbol& symbol, double eps_node) {
  return nodal_set(coarse_grain(as_position(w), symbol), eps_node);
}

struct NodeScan {
  std::vector<double> l_grid;
  std::vector<std::uint8_t> node_free;  ///< per l: no nodes at any sampled time
  std::vector<double> first_node_time;  ///< per l: earliest sampled time with nodes, NaN if none
  std::vector<double> times;            ///< sampled times
  std::optional<double> l_prime;        ///< smallest node-free l
};

namespace detail {

inline void require_increasing(std::span<const double> l_grid, bool positive, std::size_t min_size) {
  if (l_grid.size() < min_size)
    throw ConfigError("sweep.l_grid needs at least " + std::to_string(min_size) + " values");
  for (std::size_t i = 0; i < l_grid.size(); ++i) {
    const double l = l_grid[i];
    if (!std::isfinite(l) || l < 0.0 || (positive && l == 0.0))
      throw ConfigError(positive ? "sweep.l_grid values must be positive" : "sweep.l_grid values must be >= 0");
    if (i > 0 && !(l > l_grid[i - 1])) throw ConfigError("sweep.l_grid must be strictly increasing");
  }
}

inline std::vector<double> sample_times(double horizon, std::size_t samples) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("sweep.horizon must be >= 0");
  if (samples < 1) throw ConfigError("sweep.time_samples must be >= 1");
  std::vector<double> t(samples, 0.0);
  for (std::size_t s = 1; s < samples; ++s)
    t[s] = horizon * static_cast<double>(s) / static_cast<double>(samples - 1);
  return t;
}

}  // namespace detail

/// Smallest l in the grid whose coarse-grained free evolution P exp(-iHt) w0 has no nodes at any
/// sampled time in [0, horizon]. The microscopic state evolves under the free Hamiltonian, which
/// commutes with P.
inline NodeScan min_l_no_nodes(const WaveFunction& w0, double mass, std::span<const double> l_grid, double horizon,
                               std::size_t time_samples, double eps_node, double exponent_factor = 0.5,
                               int threads = 1) {
  detail::require_increasing(l_grid, false, 1);
  NodeScan scan;
  scan.l_grid.assign(l_grid.begin(), l_grid.end());
  scan.times = detail::sample_times(horizon, time_samples);
  std::vector<WaveFunction> states;
  for (double t : scan.times) states.push_back(schrodinger_reference(w0, mass, t));
  const std::size_t nl = l_grid.size();
  scan.node_free.assign(nl, 0);
  scan.first_node_time.assign(nl, std::numeric_limits<double>::quiet_NaN());
  parallel_for(nl, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t li = begin; li < end; ++li) {
      const ProjectorSymbol sym = build_symbol(w0.grid, l_grid[li], exponent_factor);
      bool free = true;
      for (std::size_t s = 0; s < states.size() && free; ++s)
        if (!nodal_regions(states[s], sym, eps_node).empty()) {
          free = false;
          scan.first_node_time[li] = scan.times[s];
        }
      scan.node_free[li] = free ? 1 : 0;
    }
  });
  for (std::size_t li = 0; li < nl; ++li)
    if (scan.node_free[li]) {
      scan.l_prime = l_grid[li];
      break;
    }
  return scan;
}

// ---------------------------------------------------------------------------------------------
// Observation length.

/// l_obs = 2 pi / k95, k95 the smallest |k| such that modes with |k| <= k95 carry `fraction` of
/// the non-DC spectral weight of rho. Returns +infinity when the non-DC weight is below
/// (floor * |rho_0|)^2, i.e. rho is constant up to roundoff.
inline double observation_length(const Grid& g1, std::span<const double> rho, double fraction = 0.95,
                                 double floor = 1e-12) {
  detail::require_single(g1, rho.size());
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("observation_length: fraction must be in (0, 1]");
  WaveFunction w = make_wavefunction(g1, Representation::position);
  for (std::size_t i = 0; i < rho.size(); ++i) w.values[i] = rho[i];
  const WaveFunction s = to_spectral(w);
  const auto k2 = total_k_squared(g1);
  std::vector<std::pair<double, double>> weights;
  double total = 0.0, dc = 0.0;
  for (std::size_t i = 0; i < k2.size(); ++i) {
    const double p = std::norm(s.values[i]);
    if (k2[i] == 0.0) {
      dc += p;
      continue;
    }
    weights.emplace_back(k2[i], p);
    total += p;
  }
  if (!(total > floor * floor * dc) || total == 0.0) return std::numeric_limits<double>::infinity();
  std::sort(weights.begin(), weights.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i].second;
    const bool last_of_shell = i + 1 == weights.size() || weights[i + 1].first != weights[i].first;
    if (last_of_shell && acc >= fraction * total) return 2.0 * std::numbers::pi / std::sqrt(weights[i].first);
  }
  return 2.0 * std::numbers::pi / std::sqrt(weights.back().first);
}

// ---------------------------------------------------------------------------------------------
// Quantum-force bound.

struct BoundOptions {
  DerivativeScheme scheme = DerivativeScheme::spectral;
  KappaReading kappa_reading = KappaReading::gradient_of_product;
  /// Absolute slack on lhs <= rhs, so that lhs = rhs = 0 up to roundoff counts as satisfied.
  double floor = 1e-10;
};

struct BoundReport {
  ResidualNorms lhs;  ///< |rho grad dE_qm/drho|
  ResidualNorms rhs;  ///< |coarse-graining force bracket applied to E_P|
  bool satisfied_l2 = false;
  bool satisfied_sup = false;
  double margin_l2 = 0.0;  ///< rhs / lhs, +inf when lhs = 0
  double margin_sup = 0.0;

  bool satisfied(bool use_sup = false) const { return use_sup ? satisfied_sup : satisfied_l2; }
};

/// Force fields entering the bound: lhs = rho grad(dE_qm/drho) and
/// rhs = rho grad((kappa/2 rho) dE_P/dkappa) + grad(rho dE_P/drho) - sum_{s != kappa} grad(s) dE_P/ds.
struct BoundForces {
  VectorField lhs, rhs;
  Mask mask;
};

inline BoundForces bound_forces(const HydroFields& hf, const EnergyGradients& eg, const BoundOptions& opt = {}) {
  const Grid g1 = hf.one_particle();
  const std::size_t n = g1.particle_size();
  const auto D = static_cast<std::size_t>(g1.dims);
  const Field& rho = hf.rho;
  const Field rho_q = eg.rho_qm_rho.empty() ? detail::times(rho, eg.qm_rho) : eg.rho_qm_rho;
  Field rho_p(n), kappa_term(n), kappa_coef(n);
  for (std::size_t i = 0; i < n; ++i) {
    rho_p[i] = rho[i] * eg.p_rho[i];
    const double kappa = std::sqrt(std::max(0.0, hf.kappa_sq[i]));
    const double c = hf.mask[i] || !(rho[i] > 0.0) ? 0.0 : kappa / (2.0 * rho[i]);
    kappa_coef[i] = c;
    kappa_term[i] = c * eg.p_kappa[i];
  }
  const auto grad_rho = gradient(g1, rho, opt.scheme);
  const auto grad_rho_q = gradient(g1, rho_q, opt.scheme);
  const auto grad_rho_p = gradient(g1, rho_p, opt.scheme);
  const auto grad_kappa_term = gradient(g1, kappa_term, opt.scheme);
  const auto grad_kappa_coef = gradient(g1, kappa_coef, opt.scheme);
  BoundForces bf{VectorField(D, Field(n, 0.0)), VectorField(D, Field(n, 0.0)), hf.mask};
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t i = 0; i < n; ++i) {
      if (hf.mask[i]) continue;
      bf.lhs[a][i] = grad_rho_q[a][i] - eg.qm_rho[i] * grad_rho[a][i];
      const double kappa_force = opt.kappa_reading == KappaReading::gradient_of_product
                                     ? rho[i] * grad_kappa_term[a][i]
                                     : rho[i] * grad_kappa_coef[a][i] * eg.p_kappa[i];
      const double sum = grad_rho[a][i] * eg.p_rho[i] + hf.grad_varphi[a][i] * eg.p_varphi[i] +
                         hf.grad_lambda[a][i] * eg.p_lambda[i] + hf.grad_mu[a][i] * eg.p_mu[i];
      bf.rhs[a][i] = kappa_force + grad_rho_p[a][i] - sum;
    }
  return bf;
}

inline BoundReport quantum_force_bound(const HydroFields& hf, const EnergyGradients& eg, const BoundOptions& opt = {}) {
  const Grid g1 = hf.one_particle();
  const BoundForces bf = bound_forces(hf, eg, opt);
  BoundReport br;
  br.lhs = detail::vector_norms_of(g1, bf.lhs, bf.mask);
  br.rhs = detail::vector_norms_of(g1, bf.rhs, bf.mask);
  br.satisfied_l2 = br.lhs.l2 <= br.rhs.l2 + opt.floor;
  br.satisfied_sup = br.lhs.sup <= br.rhs.sup + opt.floor;
  const double inf = std::numeric_limits<double>::infinity();
  br.margin_l2 = br.lhs.l2 > 0.0 ? br.rhs.l2 / br.lhs.l2 : inf;
  br.margin_sup = br.lhs.sup > 0.0 ? br.rhs.sup / br.lhs.sup : inf;
  return br;
}

// ---------------------------------------------------------------------------------------------
// Stationarity sweep in l_av.

struct FluctuationSpec {
  FluctuationMode mode = FluctuationMode::deterministic;
  std::uint64_t seed = 0;
  double irrelevant_amplitude = 0.0;
  double threshold = 1e-3;
  double sign = 1.0;
};

struct SweepOptions {
  double mass = 1.0;
  double t_probe = 0.0;
  double dt = 1e-3;
  double exponent_factor = 0.5;
  double sign_h = -1.0;
  double tol = 1e-3;
  /// Absolute slack on the stationarity tests for fields that vanish identically.
  double floor = 1e-12;
  FluctuationSpec fluctuation{};
  HydroOptions hydro{};
  GradientOptions gradients{};
  BoundOptions bound{};
  int threads = 1;
};

struct SweepLeg {
  double l = 0.0;
  bool ok = false;
  std::string error;
  HydroFields fields;
  Field kappa;
  double e_qm = 0.0;
  Complex e_p{};
  double norm_drift = 0.0;  ///< ||a(t_probe)|| / ||a(0)|| - 1
  double initial_projection_defect = 0.0;
  double l_obs = 0.0;
  BoundReport bound;
};

/// Centered differences in l at an interior grid point. Norms are L2 over the unmasked
/// one-particle lattice; phase-like fields are compared after removing their mean.
struct DerivativeRow {
  double l = 0.0;
  bool valid = false;
  double d_rho = 0.0, d_varphi = 0.0, d_lambda = 0.0, d_mu = 0.0, d_kappa = 0.0;
  double s_rho = 0.0, s_varphi = 0.0, s_lambda = 0.0, s_mu = 0.0, s_kappa = 0.0;
  double d_energy = 0.0;         ///< d(E_qm + Re E_P)/dl
  double d_coarse_energy = 0.0;  ///< d Re E_P / dl
  double energy_scale = 0.0;     ///< |E_qm| + |E_P| at l
  bool stationary = false;
};

struct SweepReport {
  std::vector<double> l_grid;
  double mass = 1.0;
  double tol = 1e-3;
  double floor = 1e-12;
  std::vector<SweepLeg> legs;
  std::vector<DerivativeRow> derivatives;  ///< |l_grid| - 2 rows, for l_grid[1..n-2]
  std::vector<double> stationary_candidates;
};

namespace detail {

inline double masked_mean(std::span<const double> f, std::span<const std::uint8_t> mask) {
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!mask[i]) {
      s += f[i];
      ++c;
    }
  return c ? s / static_cast<double>(c) : 0.0;
}

inline double centered_norm(const Grid& g1, std::span<const double> f, std::span<const std::uint8_t> mask) {
  const double mean = masked_mean(f, mask);
  Field c(f.begin(), f.end());
  for (double& v : c) v -= mean;
  return l2_norm(g1, c, mask);
}

inline bool row_passes(const DerivativeRow& r, double tol, double floor) {
  if (!r.valid) return false;
  if (std::isinf(tol) && tol > 0.0) return true;
  auto ok = [&](double d, double s) { return d <= tol * s + floor; };
  return ok(r.d_rho, r.s_rho) && ok(r.d_varphi, r.s_varphi) && ok(r.d_lambda, r.s_lambda) &&
         ok(r.d_mu, r.s_mu) && ok(r.d_kappa, r.s_kappa) && ok(std::abs(r.d_energy), r.energy_scale) &&
         ok(std::abs(r.d_coarse_energy), r.energy_scale);
}

inline SweepLeg run_leg(const WaveFunction& w0, double l, const SweepOptions& opt) {
  SweepLeg leg;
  leg.l = l;
  try {
    const Grid& g = w0.grid;
    const ProjectorSymbol sym = build_symbol(g, l, opt.exponent_factor);
    const KernelSet kernels = build_kernels(g, l, opt.mass, opt.exponent_factor);
    const WaveFunction a0 = coarse_grain(as_spectral(w0), sym);
    const auto& fl = opt.fluctuation;
    const FluctuationSource src =
        make_fluctuation_source(w0, sym, fl.mode, fl.seed, fl.irrelevant_amplitude, fl.threshold, fl.sign);
    EvolutionOptions eo;
    eo.dt = opt.dt;
    eo.t_final = opt.t_probe;
    eo.sign_h = opt.sign_h;
    const auto steps = static_cast<std::size_t>(std::llround(opt.t_probe / opt.dt));
    eo.snapshot_stride = std::max<std::size_t>(steps, 1);
    const Trajectory traj = evolve_zwanzig(a0, src, kernels, eo);
    const std::size_t last = traj.states.size() - 1;
    leg.norm_drift = traj.norm_ratio.back() - 1.0;
    leg.initial_projection_defect = traj.initial_projection_defect;
    leg.fields = extract_hydro(traj.states[last], opt.mass, opt.hydro);
    const CoarseEnergyState st = coarse_energy_state(traj, kernels, src, last);
    const EnergyGradients eg = energy_gradients(leg.fields, st, opt.gradients);
    leg.e_qm = eg.e_qm;
    leg.e_p = eg.e_p;
    leg.kappa.resize(leg.fields.kappa_sq.size());
    for (std::size_t i = 0; i < leg.kappa.size(); ++i) leg.kappa[i] = std::sqrt(std::max(0.0, leg.fields.kappa_sq[i]));
    leg.l_obs = observation_length(leg.fields.one_particle(), leg.fields.rho);
    leg.bound = quantum_force_bound(leg.fields, eg, opt.bound);
    leg.ok = true;
  } catch (const Error& e) {
    leg.ok = false;
    leg.error = e.what();
  }
  return leg;
}

inline DerivativeRow derivative_row(const SweepLeg& lo, const SweepLeg& mid, const SweepLeg& hi) {
  DerivativeRow r;
  r.l = mid.l;
  if (!lo.ok || !mid.ok || !hi.ok) return r;
  const Grid g1 = mid.fields.one_particle();
  const std::size_t n = g1.particle_size();
  const double span = hi.l - lo.l;
  Mask mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = (lo.fields.mask[i] || mid.fields.mask[i] || hi.fields.mask[i]) ? 1 : 0;
  const double quantum = 2.0 * std::numbers::pi / mid.fields.mass;
  auto diff = [&](const Field& a, const Field& b, bool wrap) {
    Field d(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = b[i] - a[i];
      if (wrap) v -= quantum * std::round(v / quantum);
      d[i] = v / span;
    }
    return d;
  };
  r.d_rho = l2_norm(g1, diff(lo.fields.rho, hi.fields.rho, false), mask);
  r.d_lambda = l2_norm(g1, diff(lo.fields.lambda, hi.fields.lambda, false), mask);
  r.d_kappa = l2_norm(g1, diff(lo.kappa, hi.kappa, false), mask);
  r.d_varphi = centered_norm(g1, diff(lo.fields.varphi, hi.fields.varphi, true), mask);
  r.d_mu = centered_norm(g1, diff(lo.fields.mu, hi.fields.mu, false), mask);
  r.s_rho = l2_norm(g1, mid.fields.rho, mask);
  r.s_lambda = l2_norm(g1, mid.fields.lambda, mask);
  r.s_kappa = l2_norm(g1, mid.kappa, mask);
  r.s_varphi = centered_norm(g1, mid.fields.varphi, mask);
  r.s_mu = centered_norm(g1, mid.fields.mu, mask);
  r.d_energy = ((hi.e_qm + hi.e_p.real()) - (lo.e_qm + lo.e_p.real())) / span;
  r.d_coarse_energy = (hi.e_p.real() - lo.e_p.real()) / span;
  r.energy_scale = std::abs(mid.e_qm) + std::abs(mid.e_p);
  r.valid = true;
  return r;
}

}  // namespace detail

/// Interior l values whose rows pass every stationarity test within tol (relative to the field
/// and energy scales at that l) plus the absolute floor.
inline std::vector<double> find_stationary_l(const SweepReport& report, double tol,
                                             std::optional<double> floor = std::nullopt) {
  if (!(tol >= 0.0)) throw ConfigError("sweep.tol must be >= 0");
  const double f = floor.value_or(report.floor);
  std::vector<double> out;
  for (const auto& r : report.derivatives)
    if (detail::row_passes(r, tol, f)) out.push_back(r.l);
  return out;
}

/// For each l: coarse-grain w0, evolve to t_probe, extract fields and energies. Legs are
/// independent; a failing leg is recorded and the sweep continues.
inline SweepReport sweep_l(const WaveFunction& w0, std::span<const double> l_grid, const SweepOptions& opt) {
  detail::require_increasing(l_grid, true, 3);
  if (!(opt.mass > 0.0)) throw ConfigError("physics.m must be positive");
  if (!(opt.dt > 0.0)) throw ConfigError("time.dt must be positive");
  if (!(opt.t_probe >= 0.0)) throw ConfigError("sweep.t_probe must be >= 0");
  if (!(opt.tol >= 0.0)) throw ConfigError("sweep.tol must be >= 0");
  SweepReport rep;
  rep.l_grid.assign(l_grid.begin(), l_grid.end());
  rep.mass = opt.mass;
  rep.tol = opt.tol;
  rep.floor = opt.floor;
  rep.legs.resize(l_grid.size());
  SweepOptions inner = opt;
  inner.gradients.threads = 1;
  parallel_for(l_grid.size(), opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) rep.legs[i] = detail::run_leg(w0, l_grid[i], inner);
  });
  for (std::size_t i = 1; i + 1 < rep.legs.size(); ++i)
    rep.derivatives.push_back(detail::derivative_row(rep.legs[i - 1], rep.legs[i], rep.legs[i + 1]));
  for (auto& r : rep.derivatives) r.stationary = detail::row_passes(r, opt.tol, opt.floor);
  rep.stationary_candidates = find_stationary_l(rep, opt.tol);
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Verdict.

struct VerdictOptions {
  double ratio_threshold = 0.1;  ///< l_av / l_obs must be below this
  bool use_sup = false;          ///< bound compared in sup norm instead of L2
  UnitMode units = UnitMode::natural;
};

struct Verdict {
  bool stationary_l_exists = false;
  bool nodes_absent = false;
  bool bound_satisfied = false;
  bool scale_separation = false;
  std::optional<double> chosen_l;
  std::optional<double> temperature;
};

namespace detail {

inline std::optional<std::size_t> find_l(std::span<const double> grid, double l) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - l) <= 1e-12 * std::max(1.0, std::abs(l))) return i;
  return std::nullopt;
}

}  // namespace detail

inline bool scale_separated(double l, double l_obs, double ratio_threshold) {
  if (std::isinf(l_obs)) return true;
  return l_obs > 0.0 && l / l_obs < ratio_threshold;
}

/// Each boolean says whether some grid l satisfies that condition; chosen_l is the smallest l
/// satisfying all four at once.
inline Verdict classicality_verdict(const SweepReport& sweep, const NodeScan& nodes, const VerdictOptions& opt = {}) {
  if (!(opt.ratio_threshold > 0.0)) throw ConfigError("sweep.ratio_threshold must be positive");
  Verdict v;
  v.stationary_l_exists = !sweep.stationary_candidates.empty();
  for (std::size_t i = 0; i < nodes.node_free.size(); ++i) v.nodes_absent = v.nodes_absent || nodes.node_free[i];
  for (const auto& leg : sweep.legs) {
    if (!leg.ok) continue;
    v.bound_satisfied = v.bound_satisfied || leg.bound.satisfied(opt.use_sup);
    v.scale_separation = v.scale_separation || scale_separated(leg.l, leg.l_obs, opt.ratio_threshold);
  }
  for (double l : sweep.stationary_candidates) {
    const auto li = detail::find_l(sweep.l_grid, l);
    const auto ni = detail::find_l(nodes.l_grid, l);
    if (!li || !ni) continue;
    const SweepLeg& leg = sweep.legs[*li];
    if (!leg.ok || !nodes.node_free[*ni]) continue;
    if (!leg.bound.satisfied(opt.use_sup) || !scale_separated(l, leg.l_obs, opt.ratio_threshold)) continue;
    v.chosen_l = l;
    v.temperature = temperature(l, sweep.mass, opt.units);
    break;
  }
  return v;
}

}  // namespace cgh
