#pragma once

// Amplitude/phase decomposition a = phi exp(i m S), the pair-phase ansatz
//   S(1..N) = sum_i varphi_i(x_i) + 1/2 sum_{i != j} mu_i(x_i) mu_j(x_j),
// reduced moments and the one-particle hydrodynamic fields derived from them.

#include <cgh/error.hpp>
#include <cgh/field_ops.hpp>
#include <cgh/grid.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace cgh {

struct MadelungDecomposition {
  Grid grid;
  double mass = 1.0;
  std::vector<double> amplitude;  ///< phi = |a|
  std::vector<double> phase;      ///< S = unwrapped arg(a) / m
  Mask node_mask;                 ///< |a| < node_threshold
  double node_threshold = 0.0;
};

/// `eps_node` is relative to max |a|. Phase unwrapping sweeps the lattice in storage order; each
/// point is healed against its predecessor along the last axis with a non-zero index.
inline MadelungDecomposition decompose(const WaveFunction& w, double mass, double eps_node = 1e-6) {
  if (w.representation != Representation::position)
    throw ConfigError("decompose: input must be in position representation");
  if (!(mass > 0.0)) throw ConfigError("physics.m must be positive");
  const Grid& g = w.grid;
  const std::size_t n = w.values.size();
  MadelungDecomposition d{g, mass, std::vector<double>(n), std::vector<double>(n), Mask(n, 0), 0.0};
  double amax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.amplitude[i] = std::abs(w.values[i]);
    amax = std::max(amax, d.amplitude[i]);
  }
  if (!(amax > 0.0) || !(w.norm_squared() > 0.0))
    throw NumericError("decompose: wavefunction vanishes everywhere");
  d.node_threshold = eps_node * amax;
  const double quantum = 2.0 * std::numbers::pi / mass;
  const int r = g.rank();
  for (std::size_t i = 0; i < n; ++i) {
    d.node_mask[i] = d.amplitude[i] < d.node_threshold ? 1 : 0;
    const double raw = std::arg(w.values[i]) / mass;
    std::size_t ref = n;
    for (int a = r - 1; a >= 0; --a) {
      if (g.axis_index(i, a) > 0) {
        ref = i - ipow(g.points_per_dim, r - 1 - a);
        break;
      }
    }
    d.phase[i] = ref == n ? raw : raw + quantum * std::round((d.phase[ref] - raw) / quantum);
  }
  return d;
}

inline WaveFunction recompose(const MadelungDecomposition& d) {
  WaveFunction w = make_wavefunction(d.grid, Representation::position);
  for (std::size_t i = 0; i < w.values.size(); ++i)
    w.values[i] = std::polar(d.amplitude[i], d.mass * d.phase[i]);
  return w;
}

// ---------------------------------------------------------------------------------------------

struct PhaseStructure {
  std::vector<Field> varphi;  ///< one-body phases, one per particle
  std::vector<Field> mu;      ///< pair factors, one per particle
  double fit_residual = 0.0;  ///< sqrt(sum (S - model)^2 h^(Nd)) over unmasked points
  int iterations = 0;
  bool converged = true;
};

struct FitOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;  ///< relative residual decrease that stops the iteration
  std::uint64_t seed = 20240917;
};

namespace detail {

inline std::vector<std::size_t> particle_index_table(const Grid& g) {
  const std::size_t n = g.size();
  const auto np = static_cast<std::size_t>(g.particles);
  std::vector<std::size_t> t(n * np);
  for (std::size_t i = 0; i < n; ++i)
    for (int p = 0; p < g.particles; ++p) t[i * np + static_cast<std::size_t>(p)] = g.particle_index(i, p);
  return t;
}

inline double pair_sum(const std::vector<Field>& mu, const std::size_t* idx, int np, int skip = -1) {
  double s = 0.0;
  for (int i = 0; i < np; ++i) {
    if (i == skip) continue;
    for (int j = i + 1; j < np; ++j) {
      if (j == skip) continue;
      s += mu[static_cast<std::size_t>(i)][idx[i]] * mu[static_cast<std::size_t>(j)][idx[j]];
    }
  }
  return s;
}

inline double mean_of(const Field& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return f.empty() ? 0.0 : s / static_cast<double>(f.size());
}

// Fixes the gauge freedoms of the ansatz without changing the model S:
//   mu_i -> mu_i + a_i (compensated in varphi), zero-mean mu_i;
//   N = 2: mu_1 -> c mu_1, mu_2 -> mu_2 / c with equal norms;
//   global sign of all mu_i so that the largest |mu_1| entry is positive;
//   equal means of the varphi_i.
inline void fix_gauge(PhaseStructure& ps) {
  const std::size_t np = ps.mu.size();
  if (np < 2) return;
  std::vector<double> shift(np);
  for (std::size_t i = 0; i < np; ++i) {
    shift[i] = mean_of(ps.mu[i]);
    for (auto& v : ps.mu[i]) v -= shift[i];
  }
  double constant = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    double others = 0.0;
    for (std::size_t j = 0; j < np; ++j)
      if (j != i) others += shift[j];
    for (std::size_t x = 0; x < ps.mu[i].size(); ++x) ps.varphi[i][x] += others * ps.mu[i][x];
    for (std::size_t j = i + 1; j < np; ++j) constant += shift[i] * shift[j];
  }
  for (auto& v : ps.varphi[0]) v += constant;
  if (np == 2) {
    double n0 = 0.0, n1 = 0.0;
    for (double v : ps.mu[0]) n0 += v * v;
    for (double v : ps.mu[1]) n1 += v * v;
    if (n0 > 0.0 && n1 > 0.0) {
      const double c = std::pow(n1 / n0, 0.25);
      for (auto& v : ps.mu[0]) v *= c;
      for (auto& v : ps.mu[1]) v /= c;
    }
  }
  std::size_t imax = 0;
  for (std::size_t x = 0; x < ps.mu[0].size(); ++x)
    if (std::abs(ps.mu[0][x]) > std::abs(ps.mu[0][imax])) imax = x;
  if (ps.mu[0][imax] < 0.0)
    for (auto& f : ps.mu)
      for (auto& v : f) v = -v;
  double total = 0.0;
  std::vector<double> means(np);
  for (std::size_t i = 0; i < np; ++i) {
    means[i] = mean_of(ps.varphi[i]);
    total += means[i];
  }
  for (std::size_t i = 0; i < np; ++i)
    for (auto& v : ps.varphi[i]) v += total / static_cast<double>(np) - means[i];
}

}  // namespace detail

/// Evaluates the ansatz on the configuration lattice.
inline std::vector<double> phase_model(const PhaseStructure& ps, const Grid& g) {
  const auto idx = detail::particle_index_table(g);
  const int np = g.particles;
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t* pi = &idx[i * static_cast<std::size_t>(np)];
    double s = 0.0;
    for (int p = 0; p < np; ++p) s += ps.varphi[static_cast<std::size_t>(p)][pi[p]];
    out[i] = s + detail::pair_sum(ps.mu, pi, np);
  }
  return out;
}

/// Alternating least squares for the pair-phase ansatz. Masked points are excluded. The mu_i
/// start from a small seeded random field: an exactly zero start is a fixed point of the
/// bilinear updates and would never leave mu = 0.
inline PhaseStructure fit_phase_structure(std::span<const double> S, std::span<const std::uint8_t> mask,
                                          const Grid& g, const FitOptions& opt = {}) {
  if (S.size() != g.size() || (!mask.empty() && mask.size() != g.size()))
    throw ConfigError("fit_phase_structure: field size mismatch");
  const int np = g.particles;
  const std::size_t m1 = g.particle_size();
  PhaseStructure ps;
  ps.varphi.assign(static_cast<std::size_t>(np), Field(m1, 0.0));
  ps.mu.assign(static_cast<std::size_t>(np), Field(m1, 0.0));
  auto used = [&](std::size_t i) { return mask.empty() || !mask[i]; };
  if (np == 1) {
    ps.varphi[0].assign(S.begin(), S.end());
    return ps;
  }
  const auto idx = detail::particle_index_table(g);
  const double vol = g.cell_volume();

  double s_scale = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < S.size(); ++i)
    if (used(i)) {
      s_scale += S[i] * S[i];
      ++count;
    }
  if (count == 0) throw NumericError("fit_phase_structure: every point is masked");
  s_scale = std::sqrt(s_scale / static_cast<double>(count));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& f : ps.mu)
    for (auto& v : f) v = 1e-2 * (s_scale + 1e-3) * normal(rng);

  auto residual_norm = [&] {
    double r = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (!used(i)) continue;
      const std::size_t* pi = &idx[i * static_cast<std::size_t>(np)];
      double model = detail::pair_sum(ps.mu, pi, np);
      for (int p = 0; p < np; ++p) model += ps.varphi[static_cast<std::size_t>(p)][pi[p]];
      r += (S[i] - model) * (S[i] - model);
    }
    return std::sqrt(r * vol);
  };

  std::vector<double> num(m1), den(m1);
  double prev = residual_norm();
  ps.converged = false;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (int p = 0; p < np; ++p) {
      auto& vp = ps.varphi[static_cast<std::size_t>(p)];
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (!used(i)) continue;
        const std::size_t* pi = &idx[i * static_cast<std::size_t>(np)];
        double rest = detail::pair_sum(ps.mu, pi, np);
        for (int q = 0; q < np; ++q)
          if (q != p) rest += ps.varphi[static_cast<std::size_t>(q)][pi[q]];
        num[pi[p]] += S[i] - rest;
        den[pi[p]] += 1.0;
      }
      for (std::size_t x = 0; x < m1; ++x)
        if (den[x] > 0.0) vp[x] = num[x] / den[x];
    }
    for (int p = 0; p < np; ++p) {
      auto& mp = ps.mu[static_cast<std::size_t>(p)];
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (!used(i)) continue;
        const std::size_t* pi = &idx[i * static_cast<std::size_t>(np)];
        double c = 0.0, rest = detail::pair_sum(ps.mu, pi, np, p);
        for (int q = 0; q < np; ++q) {
          rest += ps.varphi[static_cast<std::size_t>(q)][pi[q]];
          if (q != p) c += ps.mu[static_cast<std::size_t>(q)][pi[q]];
        }
        num[pi[p]] += (S[i] - rest) * c;
        den[pi[p]] += c * c;
      }
      for (std::size_t x = 0; x < m1; ++x)
        if (den[x] > 1e-300) mp[x] = num[x] / den[x];
    }
    const double cur = residual_norm();
    ps.iterations = it;
    ps.fit_residual = cur;
    if (cur == 0.0 || (prev > 0.0 && (prev - cur) / prev < opt.tolerance)) {
      ps.converged = true;
      break;
    }
    prev = cur;
  }
  detail::fix_gauge(ps);
  ps.fit_residual = residual_norm();
  return ps;
}

// ---------------------------------------------------------------------------------------------

struct Moments {
  Grid grid;    ///< configuration grid the moments were taken from
  Field rho;    ///< M^d
  Field rho2;   ///< M^(2d), empty for N = 1
  Field rho3;   ///< M^(3d), empty for N < 3
};

/// rho^(i) = N!/(N-i)! int phi^2 d(i+1)..dN for i = 1..min(N, 3).
inline Moments moments(std::span<const double> amplitude_sq, const Grid& g) {
  if (amplitude_sq.size() != g.size()) throw ConfigError("moments: field size mismatch");
  for (double v : amplitude_sq)
    if (v < 0.0) throw ConfigError("moments: phi^2 must be non-negative");
  Moments m{g, {}, {}, {}};
  const std::size_t m1 = g.particle_size();
  const double h_d = std::pow(g.spacing, g.dims);
  auto marginal = [&](int keep) {
    const std::size_t outer = ipow(m1, keep);
    const std::size_t inner = ipow(m1, g.particles - keep);
    double factor = 1.0;
    for (int i = 0; i < keep; ++i) factor *= static_cast<double>(g.particles - i);
    const double w = factor * std::pow(h_d, g.particles - keep);
    Field f(outer, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t in = 0; in < inner; ++in) s += amplitude_sq[o * inner + in];
      f[o] = s * w;
    }
    return f;
  };
  m.rho = marginal(1);
  if (g.particles >= 2) m.rho2 = marginal(2);
  if (g.particles >= 3) m.rho3 = marginal(3);
  return m;
}

struct CorrelationFields {
  Field lambda;
  Field kappa_sq;
  Mask mask;                  ///< one-particle points with rho below the floor
  double min_raw_kappa_sq = 0.0;
  double clamp_magnitude = 0.0;  ///< largest |kappa^2| removed by clamping at 0
};

inline Mask density_mask(std::span<const double> rho, double rel_floor) {
  double rmax = 0.0;
  for (double v : rho) rmax = std::max(rmax, v);
  Mask m(rho.size(), 0);
  for (std::size_t i = 0; i < rho.size(); ++i) m[i] = !(rho[i] > rel_floor * rmax) ? 1 : 0;
  return m;
}

namespace detail {
inline void finish_kappa(CorrelationFields& c) {
  c.min_raw_kappa_sq = 0.0;
  for (std::size_t i = 0; i < c.kappa_sq.size(); ++i) {
    if (c.mask[i]) continue;
    c.min_raw_kappa_sq = std::min(c.min_raw_kappa_sq, c.kappa_sq[i]);
    if (c.kappa_sq[i] < 0.0) {
      c.clamp_magnitude = std::max(c.clamp_magnitude, -c.kappa_sq[i]);
      c.kappa_sq[i] = 0.0;
    }
  }
}
}  // namespace detail

/// Moment form with a single pair field mu:
///   rho lambda  = int rho2(1,2) mu(2) d2
///   rho kappa^2 = int rho3(1,2,3) mu(2) mu(3) d2 d3 + int rho2(1,2) mu(2)^2 d2 - rho lambda^2
/// Points with rho <= rho_floor * max rho are masked (fields set to 0).
inline CorrelationFields correlation_fields(const Moments& mom, std::span<const double> mu,
                                           double rho_floor = 1e-12) {
  const Grid& g = mom.grid;
  const std::size_t m1 = g.particle_size();
  if (mu.size() != m1 || mom.rho.size() != m1) throw ConfigError("correlation_fields: grid mismatch");
  const double h_d = std::pow(g.spacing, g.dims);
  CorrelationFields c{Field(m1, 0.0), Field(m1, 0.0), density_mask(mom.rho, rho_floor), 0.0, 0.0};
  for (std::size_t x = 0; x < m1; ++x) {
    if (c.mask[x]) continue;
    const double rho = mom.rho[x];
    double rl = 0.0, second = 0.0, third = 0.0;
    if (!mom.rho2.empty()) {
      for (std::size_t y = 0; y < m1; ++y) {
        const double r2 = mom.rho2[x * m1 + y];
        rl += r2 * mu[y];
        second += r2 * mu[y] * mu[y];
      }
      rl *= h_d;
      second *= h_d;
    }
    if (!mom.rho3.empty()) {
      for (std::size_t y = 0; y < m1; ++y)
        for (std::size_t z = 0; z < m1; ++z) third += mom.rho3[(x * m1 + y) * m1 + z] * mu[y] * mu[z];
      third *= h_d * h_d;
    }
    if (!(rho > 0.0)) throw NumericError("correlation_fields: rho = 0 on an unmasked point");
    c.lambda[x] = rl / rho;
    c.kappa_sq[x] = (third + second - rl * c.lambda[x]) / rho;
  }
  detail::finish_kappa(c);
  return c;
}

/// Variance form with per-particle pair fields, particle 1 as the reference:
///   rho lambda  = N int phi^2 sum_{j>1} mu_j(x_j) d2..dN
///   rho kappa^2 = N int phi^2 [sum_{j>1} mu_j(x_j) - lambda]^2 d2..dN
/// Equal to the moment form when the state is symmetric and all mu_j coincide.
inline CorrelationFields correlation_fields_direct(std::span<const double> amplitude_sq,
                                                  const PhaseStructure& ps, const Grid& g,
                                                  double rho_floor = 1e-12) {
  const std::size_t m1 = g.particle_size();
  const Moments mom = moments(amplitude_sq, g);
  CorrelationFields c{Field(m1, 0.0), Field(m1, 0.0), density_mask(mom.rho, rho_floor), 0.0, 0.0};
  if (g.particles == 1) return c;
  const std::size_t inner = g.size() / m1;
  const double w = static_cast<double>(g.particles) * std::pow(g.spacing, g.dims * (g.particles - 1));
  std::vector<double> pair_total(inner);
  for (std::size_t in = 0; in < inner; ++in) {
    double s = 0.0;
    for (int p = 1; p < g.particles; ++p) s += ps.mu[static_cast<std::size_t>(p)][g.particle_index(in, p)];
    pair_total[in] = s;
  }
  for (std::size_t x = 0; x < m1; ++x) {
    if (c.mask[x]) continue;
    double rl = 0.0;
    for (std::size_t in = 0; in < inner; ++in) rl += amplitude_sq[x * inner + in] * pair_total[in];
    const double lam = rl * w / mom.rho[x];
    double var = 0.0;
    for (std::size_t in = 0; in < inner; ++in) {
      const double d = pair_total[in] - lam;
      var += amplitude_sq[x * inner + in] * d * d;
    }
    c.lambda[x] = lam;
    c.kappa_sq[x] = var * w / mom.rho[x];
  }
  detail::finish_kappa(c);
  return c;
}

// ---------------------------------------------------------------------------------------------

struct Flow {
  VectorField u;
  VectorField grad_varphi;
  VectorField grad_lambda;
  VectorField grad_mu;
  /// grad lambda x grad mu: d = 1 one zero component, d = 2 the scalar z component, d = 3 three.
  VectorField vorticity;
};

inline VectorField cross(const VectorField& a, const VectorField& b, int dims) {
  const std::size_t n = a.empty() ? 0 : a.front().size();
  if (dims == 1) return VectorField{Field(n, 0.0)};
  if (dims == 2) {
    Field z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = a[0][i] * b[1][i] - a[1][i] * b[0][i];
    return VectorField{z};
  }
  VectorField c(3, Field(n));
  for (std::size_t i = 0; i < n; ++i) {
    c[0][i] = a[1][i] * b[2][i] - a[2][i] * b[1][i];
    c[1][i] = a[2][i] * b[0][i] - a[0][i] * b[2][i];
    c[2][i] = a[0][i] * b[1][i] - a[1][i] * b[0][i];
  }
  return c;
}

/// Gradient of a phase field. With the spectral scheme the phase is differentiated through the
/// smooth periodic field psi = sqrt(rho) exp(i m varphi), grad varphi = Im(conj(psi) grad psi) /
/// (m |psi|^2), which tolerates 2 pi / m wraps and linear ramps. Empty `rho` means rho = 1.
inline VectorField phase_gradient(const Grid& g, std::span<const double> varphi, std::span<const double> rho,
                                  double mass, DerivativeScheme scheme = DerivativeScheme::spectral,
                                  std::span<const std::uint8_t> mask = {}) {
  if (scheme == DerivativeScheme::finite_difference) return gradient(g, varphi, scheme);
  const std::size_t n = varphi.size();
  std::vector<Complex> psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double amp = rho.empty() ? 1.0 : std::sqrt(std::max(rho[i], 0.0));
    psi[i] = std::polar(amp, mass * varphi[i]);
  }
  const auto grads = complex_gradient(g, psi);
  VectorField out(grads.size(), Field(n, 0.0));
  for (std::size_t a = 0; a < grads.size(); ++a)
    for (std::size_t i = 0; i < n; ++i) {
      const double p2 = std::norm(psi[i]);
      if ((!mask.empty() && mask[i]) || !(p2 > 0.0)) continue;
      out[a][i] = (std::conj(psi[i]) * grads[a][i]).imag() / (mass * p2);
    }
  return out;
}

/// u = grad varphi + lambda grad mu and the vorticity grad lambda x grad mu.
inline Flow velocity_and_vorticity(const Grid& g, std::span<const double> varphi,
                                   std::span<const double> lambda, std::span<const double> mu,
                                   std::span<const double> rho, double mass,
                                   DerivativeScheme scheme = DerivativeScheme::spectral,
                                   std::span<const std::uint8_t> mask = {}) {
  const Grid g1 = g.single_particle();
  Flow f;
  f.grad_varphi = phase_gradient(g1, varphi, rho, mass, scheme, mask);
  f.grad_lambda = gradient(g1, lambda, scheme);
  f.grad_mu = gradient(g1, mu, scheme);
  f.u = f.grad_varphi;
  for (std::size_t a = 0; a < f.u.size(); ++a)
    for (std::size_t i = 0; i < f.u[a].size(); ++i) {
      if (!mask.empty() && mask[i]) {
        f.u[a][i] = 0.0;
        continue;
      }
      f.u[a][i] += lambda[i] * f.grad_mu[a][i];
    }
  f.vorticity = cross(f.grad_lambda, f.grad_mu, g1.dims);
  return f;
}

// ---------------------------------------------------------------------------------------------

struct HydroOptions {
  double eps_node = 1e-6;  ///< relative amplitude threshold; density floor is eps_node^2
  DerivativeScheme scheme = DerivativeScheme::spectral;
  FitOptions fit{};
};

/// One-particle hydrodynamic fields of an N-particle state. Particle 1 is the reference particle:
/// varphi and mu are its fitted fields and the moments integrate out particles 2..N.
struct HydroFields {
  Grid grid;  ///< configuration grid
  double mass = 1.0;
  double time = 0.0;
  Field rho, rho2, rho3;
  Field varphi, lambda, mu, kappa_sq;
  VectorField u, grad_varphi, grad_lambda, grad_mu, vorticity;
  Mask mask;  ///< one-particle density mask
  PhaseStructure phase;
  double fit_residual = 0.0;
  bool fit_converged = true;
  double min_raw_kappa_sq = 0.0;
  double kappa_clamp = 0.0;

  Grid one_particle() const { return grid.single_particle(); }
};

inline HydroFields extract_hydro(const WaveFunction& w, double mass, const HydroOptions& opt = {}) {
  const WaveFunction pos = as_position(w);
  const Grid& g = pos.grid;
  const MadelungDecomposition dec = decompose(pos, mass, opt.eps_node);
  HydroFields hf;
  hf.grid = g;
  hf.mass = mass;
  hf.time = w.time;
  hf.phase = fit_phase_structure(dec.phase, dec.node_mask, g, opt.fit);
  hf.fit_residual = hf.phase.fit_residual;
  hf.fit_converged = hf.phase.converged;
  std::vector<double> amp2(dec.amplitude.size());
  for (std::size_t i = 0; i < amp2.size(); ++i) amp2[i] = dec.amplitude[i] * dec.amplitude[i];
  Moments mom = moments(amp2, g);
  const double floor = opt.eps_node * opt.eps_node;
  CorrelationFields corr = correlation_fields_direct(amp2, hf.phase, g, floor);
  hf.rho = std::move(mom.rho);
  hf.rho2 = std::move(mom.rho2);
  hf.rho3 = std::move(mom.rho3);
  hf.mask = density_mask(hf.rho, floor);
  hf.varphi = hf.phase.varphi[0];
  hf.mu = hf.phase.mu[0];
  hf.lambda = std::move(corr.lambda);
  hf.kappa_sq = std::move(corr.kappa_sq);
  hf.min_raw_kappa_sq = corr.min_raw_kappa_sq;
  hf.kappa_clamp = corr.clamp_magnitude;
  Flow flow = velocity_and_vorticity(g, hf.varphi, hf.lambda, hf.mu, hf.rho, mass, opt.scheme, hf.mask);
  hf.u = std::move(flow.u);
  hf.grad_varphi = std::move(flow.grad_varphi);
  hf.grad_lambda = std::move(flow.grad_lambda);
  hf.grad_mu = std::move(flow.grad_mu);
  hf.vorticity = std::move(flow.vorticity);
  return hf;
}

}  // namespace cgh
