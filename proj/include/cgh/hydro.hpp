#pragma once

// Energies, functional derivatives and equation-of-motion residuals of the hydrodynamic fields.
//
//   r_varphi = d_t rho + div(rho u) + (1/m) dE_P/dvarphi
//   r_lambda = rho (d_t mu + u.grad mu) + (1/m) dE_P/dlambda
//   r_mu     = d_t(rho lambda) + div(rho lambda u + rho kappa^2 grad mu) + (1/m) dE_P/dmu
//   r_rho    = d_t varphi + lambda d_t mu + u^2/2 + kappa^2 |grad mu|^2 / 2 + (1/m) d(E_qm + E_P)/drho
//   r_kappa  = rho kappa |grad mu|^2 + (1/m) dE_P/dkappa
//
// Euler form, E = E_qm + E_P:
//   d_t(rho u) + div(rho u u + rho kappa^2 grad mu grad mu)
//     = -(1/m) [ rho grad((kappa / 2 rho) dE/dkappa) + grad(rho dE/drho) - sum_s (grad s) dE/ds ]
// with s over rho, varphi, lambda, mu.

#include <cgh/error.hpp>
#include <cgh/evolution.hpp>
#include <cgh/field_ops.hpp>
#include <cgh/grid.hpp>
#include <cgh/madelung.hpp>
#include <cgh/parallel.hpp>
#include <cgh/projector.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace cgh {

enum class PrefactorMode {
  standard,      ///< 1/(2m)
  mass_squared,  ///< m/2, i.e. standard scaled by m^2
};

enum class KappaReading {
  gradient_of_product,    ///< rho grad[(kappa / 2 rho) dE/dkappa]
  product_with_gradient,  ///< rho grad(kappa / 2 rho) dE/dkappa
};

inline double prefactor(PrefactorMode mode, double mass) {
  return mode == PrefactorMode::standard ? 1.0 / (2.0 * mass) : mass / 2.0;
}

struct QuantumEnergy {
  double energy = 0.0;
  Field potential;  ///< dE_qm/drho, zero on masked points
  Field rho_potential;  ///< rho dE_qm/drho = -c sqrt(rho) Lap(sqrt rho), on every point
  PrefactorMode mode = PrefactorMode::standard;
};

/// E_qm = c int |grad sqrt(rho)|^2 and dE_qm/drho = -c Lap(sqrt rho) / sqrt(rho), c = prefactor.
/// The Laplacian is div(grad), so the potential is the exact lattice derivative of the energy.
/// An empty mask masks rho <= 1e-12 max rho.
inline QuantumEnergy quantum_energy(const Grid& g, std::span<const double> rho, double mass,
                                    PrefactorMode mode = PrefactorMode::standard,
                                    std::span<const std::uint8_t> mask = {}) {
  const Grid g1 = g.single_particle();
  detail::require_single(g1, rho.size());
  if (!(mass > 0.0)) throw ConfigError("physics.m must be positive");
  for (double r : rho)
    if (r < 0.0) throw ConfigError("quantum_energy: rho must be non-negative");
  const double c = prefactor(mode, mass);
  Field s(rho.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(rho[i]);
  const Mask own = mask.empty() ? density_mask(rho, 1e-12) : Mask(mask.begin(), mask.end());
  const auto grad = gradient(g1, s);
  QuantumEnergy q{0.0, Field(rho.size(), 0.0), Field(rho.size()), mode};
  const double vol = std::pow(g1.spacing, g1.dims);
  for (std::size_t i = 0; i < s.size(); ++i) q.energy += dot_at(grad, grad, i);
  q.energy *= c * vol;
  const Field lap = divergence(g1, grad);
  for (std::size_t i = 0; i < s.size(); ++i) {
    q.rho_potential[i] = -c * lap[i] * s[i];
    if (!own[i] && s[i] > 0.0) q.potential[i] = -c * lap[i] / s[i];
  }
  return q;
}

// ---------------------------------------------------------------------------------------------
// Gateaux derivatives by central differences.

/// Bump of unit integral: a lattice delta 1/h^d when width = 0, else a periodic Gaussian of the
/// given width normalized on the lattice.
inline Field bump(const Grid& g, std::size_t center, double width) {
  const Grid g1 = g.single_particle();
  const std::size_t n = g1.particle_size();
  Field b(n, 0.0);
  const double vol = std::pow(g1.spacing, g1.dims);
  if (width <= 0.0) {
    b[center] = 1.0 / vol;
    return b;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (int a = 0; a < g1.dims; ++a) {
      double d = g1.coordinate(g1.axis_index(i, a)) - g1.coordinate(g1.axis_index(center, a));
      d -= g1.box_length * std::round(d / g1.box_length);
      r2 += d * d;
    }
    b[i] = std::exp(-r2 / (2.0 * width * width));
    total += b[i] * vol;
  }
  for (auto& v : b) v /= total;
  return b;
}

/// (F[sigma + eps b] - F[sigma - eps b]) / (2 eps) for the bump b at `center`.
template <class Functional>
double gateaux(Functional&& functional, std::span<const double> sigma, const Grid& g, std::size_t center,
               double width, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("gateaux: eps must be positive");
  const Field b = bump(g, center, width);
  Field plus(sigma.begin(), sigma.end()), minus(sigma.begin(), sigma.end());
  for (std::size_t i = 0; i < b.size(); ++i) {
    plus[i] += eps * b[i];
    minus[i] -= eps * b[i];
  }
  const double fp = functional(std::span<const double>(plus));
  const double fm = functional(std::span<const double>(minus));
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw NumericError("gateaux: functional evaluation failed at perturbed field");
  return (fp - fm) / (2.0 * eps);
}

/// Full derivative field by scanning the bump over every lattice point.
template <class Functional>
Field gateaux_field(Functional&& functional, std::span<const double> sigma, const Grid& g, double width,
                    double eps, int threads = 1) {
  Field out(sigma.size());
  parallel_for(sigma.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) out[c] = gateaux(functional, sigma, g, c, width, eps);
  });
  return out;
}

// ---------------------------------------------------------------------------------------------
// Coarse-graining energy E_P = <a| G a> - <a|zeta>, where G a = -i int_0^t G(tau) a(t - tau) dtau
// is the memory operator as it enters the evolution equation and zeta the fluctuation term.
// Inner products are <u|v> = L^(Nd) sum conj(u_k) v_k.

struct CoarseEnergyState {
  const KernelSet* kernels = nullptr;
  WaveFunction state;   ///< a(t), spectral
  WaveFunction memory;  ///< int_0^t G(tau) a(t - tau) dtau, spectral
  WaveFunction zeta;    ///< zeta(t), spectral
  double dt = 0.0;
  /// True when t > 0: the memory quadrature then weights a(t) itself by g dt alpha, so a
  /// perturbation of a(t) also perturbs the memory.
  bool current_slot = false;
};

inline CoarseEnergyState coarse_energy_state(const Trajectory& traj, const KernelSet& kernels,
                                             const FluctuationSource& src, std::size_t snapshot) {
  if (snapshot >= traj.states.size() || traj.memory.size() != traj.states.size())
    throw ConfigError("coarse_energy: missing history for the requested snapshot");
  const double t = traj.times[snapshot] - traj.times.front();
  return CoarseEnergyState{&kernels, traj.states[snapshot], traj.memory[snapshot],
                           fluctuation_term(src, kernels, t), traj.dt, snapshot > 0};
}

/// E_P for a (possibly perturbed) state a' at the time of `st`.
inline Complex coarse_energy(const CoarseEnergyState& st, const WaveFunction& a) {
  const KernelSet& k = *st.kernels;
  const WaveFunction s = as_spectral(a);
  if (!s.grid.same_lattice(k.grid())) throw ConfigError("coarse_energy: grid mismatch");
  Complex acc{};
  const Complex mi{0.0, -1.0};
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double gk = k.g_amplitude[i];
    Complex mem = st.memory.values[i];
    if (st.current_slot && gk != 0.0) {
      const auto w = detail::product_weights(k.omega.values[i] * st.dt);
      mem += gk * st.dt * w.alpha * (s.values[i] - st.state.values[i]);
    }
    acc += std::conj(s.values[i]) * (mi * mem - st.zeta.values[i]);
  }
  return acc * s.grid.volume();
}

inline Complex coarse_energy(const CoarseEnergyState& st) { return coarse_energy(st, st.state); }

inline Complex coarse_energy(const Trajectory& traj, const KernelSet& kernels, const FluctuationSource& src,
                             std::size_t snapshot) {
  return coarse_energy(coarse_energy_state(traj, kernels, src, snapshot));
}

/// Derivatives of E_qm + E_P with respect to the one-particle fields, evaluated by Gateaux bumps
/// on the wavefunction a = phi exp(i m S) (the chain rule through the fitted fields is avoided).
///   rho:    phi^2 -> phi^2 (1 + eps sum_i b(x_i) / (N rho(x_i)))   (exact shift of rho for N = 1)
///   varphi: S -> S + eps sum_i b(x_i)
///   mu:     mu_i -> mu_i + eps b in the pair term of S
/// lambda and kappa are moments, not coordinates of a, so the E_P derivatives in those
/// directions are zero. Forces use Re E_P.
struct EnergyGradients {
  double e_qm = 0.0;
  Complex e_p{};
  Field qm_rho;  ///< dE_qm/drho (quantum potential)
  Field rho_qm_rho;  ///< rho qm_rho, unmasked
  Field p_rho, p_varphi, p_lambda, p_mu, p_kappa;

  Field total_rho() const {
    Field f = qm_rho;
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += p_rho[i];
    return f;
  }
};

struct GradientOptions {
  PrefactorMode prefactor_mode = PrefactorMode::standard;
  double bump_width = 0.0;
  double eps = 1e-6;
  int threads = 1;
};

namespace detail {

enum class Direction { rho, varphi, mu };

inline WaveFunction perturb(const WaveFunction& a, const HydroFields& hf, std::span<const double> b,
                            Direction dir, double eps) {
  const Grid& g = a.grid;
  const int np = g.particles;
  WaveFunction out = a;
  std::vector<std::size_t> idx(static_cast<std::size_t>(np));
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double bsum = 0.0, rsum = 0.0, pair = 0.0;
    for (int p = 0; p < np; ++p) idx[static_cast<std::size_t>(p)] = g.particle_index(i, p);
    for (int p = 0; p < np; ++p) {
      const std::size_t x = idx[static_cast<std::size_t>(p)];
      bsum += b[x];
      if (dir == Direction::rho && !hf.mask[x] && hf.rho[x] > 0.0) rsum += b[x] / (np * hf.rho[x]);
    }
    if (dir == Direction::mu) {
      for (int p = 0; p < np; ++p)
        for (int q = 0; q < np; ++q) {
          if (p == q) continue;
          const std::size_t xp = idx[static_cast<std::size_t>(p)], xq = idx[static_cast<std::size_t>(q)];
          const double mp = hf.phase.mu[static_cast<std::size_t>(p)][xp];
          const double mq = hf.phase.mu[static_cast<std::size_t>(q)][xq];
          pair += 0.5 * ((mp + eps * b[xp]) * (mq + eps * b[xq]) - mp * mq);
        }
    }
    switch (dir) {
      case Direction::rho:
        if (rsum != 0.0) out.values[i] *= std::sqrt(std::max(0.0, 1.0 + eps * rsum));
        break;
      case Direction::varphi:
        if (bsum != 0.0) out.values[i] *= std::polar(1.0, hf.mass * eps * bsum);
        break;
      case Direction::mu:
        if (pair != 0.0) out.values[i] *= std::polar(1.0, hf.mass * pair);
        break;
    }
  }
  return out;
}

}  // namespace detail

inline EnergyGradients energy_gradients(const HydroFields& hf, const CoarseEnergyState& st,
                                        const GradientOptions& opt = {}) {
  const Grid g1 = hf.one_particle();
  const std::size_t n = g1.particle_size();
  const auto qe = quantum_energy(g1, hf.rho, hf.mass, opt.prefactor_mode, hf.mask);
  EnergyGradients eg;
  eg.e_qm = qe.energy;
  eg.qm_rho = qe.potential;
  eg.rho_qm_rho = qe.rho_potential;
  eg.e_p = coarse_energy(st);
  eg.p_rho.assign(n, 0.0);
  eg.p_varphi.assign(n, 0.0);
  eg.p_lambda.assign(n, 0.0);
  eg.p_mu.assign(n, 0.0);
  eg.p_kappa.assign(n, 0.0);
  bool trivial = true;
  for (std::size_t i = 0; i < st.kernels->g_amplitude.size(); ++i)
    if (st.kernels->g_amplitude[i] != 0.0 || st.kernels->f_amplitude[i] != 0.0) trivial = false;
  if (trivial) return eg;  // l_av = 0: E_P vanishes identically

  const WaveFunction a = as_position(st.state);
  const bool pairs = hf.grid.particles > 1;
  parallel_for(n, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      if (hf.mask[c]) continue;
      const Field b = bump(g1, c, opt.bump_width);
      auto diff = [&](detail::Direction dir) {
        const double ep = coarse_energy(st, detail::perturb(a, hf, b, dir, opt.eps)).real();
        const double em = coarse_energy(st, detail::perturb(a, hf, b, dir, -opt.eps)).real();
        if (!std::isfinite(ep) || !std::isfinite(em))
          throw NumericError("energy_gradients: functional evaluation failed at perturbed field");
        return (ep - em) / (2.0 * opt.eps);
      };
      eg.p_rho[c] = diff(detail::Direction::rho);
      eg.p_varphi[c] = diff(detail::Direction::varphi);
      if (pairs) eg.p_mu[c] = diff(detail::Direction::mu);
    }
  });
  return eg;
}

/// Energy gradients for the free case (no coarse graining): only the quantum term.
inline EnergyGradients quantum_gradients(const HydroFields& hf, PrefactorMode mode = PrefactorMode::standard) {
  const std::size_t n = hf.rho.size();
  const auto qe = quantum_energy(hf.one_particle(), hf.rho, hf.mass, mode, hf.mask);
  EnergyGradients eg;
  eg.e_qm = qe.energy;
  eg.qm_rho = qe.potential;
  eg.rho_qm_rho = qe.rho_potential;
  eg.p_rho.assign(n, 0.0);
  eg.p_varphi.assign(n, 0.0);
  eg.p_lambda.assign(n, 0.0);
  eg.p_mu.assign(n, 0.0);
  eg.p_kappa.assign(n, 0.0);
  return eg;
}

// ---------------------------------------------------------------------------------------------

struct ResidualNorms {
  double l2 = 0.0;
  double sup = 0.0;
};

struct ResidualSet {
  Field r_varphi, r_lambda, r_mu, r_rho, r_kappa;
  VectorField r_euler;        ///< LHS - RHS of the Euler form
  VectorField perfect_fluid;  ///< LHS alone
  VectorField quantum_force;  ///< -(1/m) rho grad(dE_qm/drho)
  Mask mask;                  ///< union of the snapshot masks
  ResidualNorms n_varphi, n_lambda, n_mu, n_rho, n_kappa, n_euler, n_perfect_fluid, n_quantum_force;
};

struct ResidualOptions {
  DerivativeScheme scheme = DerivativeScheme::spectral;
  KappaReading kappa_reading = KappaReading::gradient_of_product;
  double max_mask_fraction = 0.5;
};

namespace detail {

inline Field centered(std::span<const double> prev, std::span<const double> next, double span) {
  Field d(prev.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (next[i] - prev[i]) / span;
  return d;
}

inline Field times(std::span<const double> a, std::span<const double> b) {
  Field f(a.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = a[i] * b[i];
  return f;
}

inline ResidualNorms norms_of(const Grid& g1, std::span<const double> f, std::span<const std::uint8_t> mask) {
  return {l2_norm(g1, f, mask), sup_norm(f, mask)};
}

inline ResidualNorms vector_norms_of(const Grid& g1, const VectorField& v, std::span<const std::uint8_t> mask) {
  return {vector_l2_norm(g1, v, mask), vector_sup_norm(v, mask)};
}

}  // namespace detail

/// Residuals at the middle snapshot of three consecutive ones spaced by dt.
inline ResidualSet eom_residuals(const HydroFields& prev, const HydroFields& cur, const HydroFields& next,
                                 double dt, const EnergyGradients& eg, const ResidualOptions& opt = {}) {
  if (!(dt > 0.0)) throw ConfigError("eom_residuals: need three consecutive snapshots with dt > 0");
  const Grid g1 = cur.one_particle();
  const std::size_t n = g1.particle_size();
  const int dims = g1.dims;
  const double m = cur.mass;
  const auto scheme = opt.scheme;
  for (const HydroFields* h : {&prev, &next})
    if (h->rho.size() != n) throw ConfigError("eom_residuals: snapshot grid mismatch");

  ResidualSet rs;
  rs.mask.assign(n, 0);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rs.mask[i] = (prev.mask[i] || cur.mask[i] || next.mask[i]) ? 1 : 0;
    masked += rs.mask[i];
  }
  if (static_cast<double>(masked) > opt.max_mask_fraction * static_cast<double>(n))
    throw NumericError("eom_residuals: " + std::to_string(masked) + " of " + std::to_string(n) +
                       " points are masked (rho below the node floor)");

  const double span = 2.0 * dt;
  const Field& rho = cur.rho;
  const Field kappa_sq = cur.kappa_sq;
  Field kappa(n);
  for (std::size_t i = 0; i < n; ++i) kappa[i] = std::sqrt(std::max(0.0, kappa_sq[i]));

  const Field drho = detail::centered(prev.rho, next.rho, span);
  const Field dmu = detail::centered(prev.mu, next.mu, span);
  Field dvarphi(n);
  const double quantum = 2.0 * std::numbers::pi / m;
  for (std::size_t i = 0; i < n; ++i) {
    double d = next.varphi[i] - prev.varphi[i];
    d -= quantum * std::round(d / quantum);
    dvarphi[i] = d / span;
  }
  const Field rl_prev = detail::times(prev.rho, prev.lambda), rl_next = detail::times(next.rho, next.lambda);
  const Field drl = detail::centered(rl_prev, rl_next, span);

  // Fluxes.
  VectorField rho_u(static_cast<std::size_t>(dims)), flux_mu(static_cast<std::size_t>(dims));
  for (int a = 0; a < dims; ++a) {
    const auto A = static_cast<std::size_t>(a);
    rho_u[A] = detail::times(rho, cur.u[A]);
    flux_mu[A].resize(n);
    for (std::size_t i = 0; i < n; ++i)
      flux_mu[A][i] = rho[i] * cur.lambda[i] * cur.u[A][i] + rho[i] * kappa_sq[i] * cur.grad_mu[A][i];
  }
  const Field div_rho_u = divergence(g1, rho_u, scheme);
  const Field div_flux_mu = divergence(g1, flux_mu, scheme);

  rs.r_varphi.assign(n, 0.0);
  rs.r_lambda.assign(n, 0.0);
  rs.r_mu.assign(n, 0.0);
  rs.r_rho.assign(n, 0.0);
  rs.r_kappa.assign(n, 0.0);
  const Field d_rho_total = eg.total_rho();
  for (std::size_t i = 0; i < n; ++i) {
    if (rs.mask[i]) continue;
    const double u2 = dot_at(cur.u, cur.u, i);
    const double gm2 = dot_at(cur.grad_mu, cur.grad_mu, i);
    const double u_gm = dot_at(cur.u, cur.grad_mu, i);
    rs.r_varphi[i] = drho[i] + div_rho_u[i] + eg.p_varphi[i] / m;
    rs.r_lambda[i] = rho[i] * (dmu[i] + u_gm) + eg.p_lambda[i] / m;
    rs.r_mu[i] = drl[i] + div_flux_mu[i] + eg.p_mu[i] / m;
    rs.r_rho[i] = dvarphi[i] + cur.lambda[i] * dmu[i] + 0.5 * u2 + 0.5 * kappa_sq[i] * gm2 + d_rho_total[i] / m;
    rs.r_kappa[i] = rho[i] * kappa[i] * gm2 + eg.p_kappa[i] / m;
  }

  // Euler form.
  const auto D = static_cast<std::size_t>(dims);
  rs.perfect_fluid.assign(D, Field(n, 0.0));
  rs.r_euler.assign(D, Field(n, 0.0));
  rs.quantum_force.assign(D, Field(n, 0.0));
  const Field d_kappa_total = eg.p_kappa;
  Field rho_drho(n), kappa_term(n), kappa_coef(n);
  for (std::size_t i = 0; i < n; ++i) {
    rho_drho[i] = eg.rho_qm_rho.empty() ? rho[i] * d_rho_total[i] : eg.rho_qm_rho[i] + rho[i] * eg.p_rho[i];
    const double c = rs.mask[i] || !(rho[i] > 0.0) ? 0.0 : kappa[i] / (2.0 * rho[i]);
    kappa_coef[i] = c;
    kappa_term[i] = c * d_kappa_total[i];
  }
  const VectorField grad_rho_drho = gradient(g1, rho_drho, scheme);
  const VectorField grad_kappa_term = gradient(g1, kappa_term, scheme);
  const VectorField grad_kappa_coef = gradient(g1, kappa_coef, scheme);
  const VectorField grad_rho = gradient(g1, rho, scheme);
  // rho grad Q written as grad(rho Q) - Q grad rho: Q is zeroed on masked points, rho Q is smooth.
  const VectorField grad_rho_q =
      gradient(g1, eg.rho_qm_rho.empty() ? detail::times(rho, eg.qm_rho) : eg.rho_qm_rho, scheme);
  for (std::size_t a = 0; a < D; ++a) {
    Field rho_u_prev = detail::times(prev.rho, prev.u[a]);
    Field rho_u_next = detail::times(next.rho, next.u[a]);
    const Field d_rho_u = detail::centered(rho_u_prev, rho_u_next, span);
    VectorField stress(D, Field(n));
    for (std::size_t b = 0; b < D; ++b)
      for (std::size_t i = 0; i < n; ++i)
        stress[b][i] = rho[i] * cur.u[b][i] * cur.u[a][i] + rho[i] * kappa_sq[i] * cur.grad_mu[b][i] * cur.grad_mu[a][i];
    const Field div_stress = divergence(g1, stress, scheme);
    for (std::size_t i = 0; i < n; ++i) {
      if (rs.mask[i]) continue;
      const double lhs = d_rho_u[i] + div_stress[i];
      const double kappa_force = opt.kappa_reading == KappaReading::gradient_of_product
                                     ? rho[i] * grad_kappa_term[a][i]
                                     : rho[i] * grad_kappa_coef[a][i] * d_kappa_total[i];
      const double sum = grad_rho[a][i] * d_rho_total[i] + cur.grad_varphi[a][i] * eg.p_varphi[i] +
                         cur.grad_lambda[a][i] * eg.p_lambda[i] + cur.grad_mu[a][i] * eg.p_mu[i];
      const double rhs = -(kappa_force + grad_rho_drho[a][i] - sum) / m;
      rs.perfect_fluid[a][i] = lhs;
      rs.r_euler[a][i] = lhs - rhs;
      rs.quantum_force[a][i] = -(grad_rho_q[a][i] - eg.qm_rho[i] * grad_rho[a][i]) / m;
    }
  }

  rs.n_varphi = detail::norms_of(g1, rs.r_varphi, rs.mask);
  rs.n_lambda = detail::norms_of(g1, rs.r_lambda, rs.mask);
  rs.n_mu = detail::norms_of(g1, rs.r_mu, rs.mask);
  rs.n_rho = detail::norms_of(g1, rs.r_rho, rs.mask);
  rs.n_kappa = detail::norms_of(g1, rs.r_kappa, rs.mask);
  rs.n_euler = detail::vector_norms_of(g1, rs.r_euler, rs.mask);
  rs.n_perfect_fluid = detail::vector_norms_of(g1, rs.perfect_fluid, rs.mask);
  rs.n_quantum_force = detail::vector_norms_of(g1, rs.quantum_force, rs.mask);
  return rs;
}

/// Euler-form residual alone: {LHS - RHS, LHS}.
inline std::pair<VectorField, VectorField> euler_residual(const HydroFields& prev, const HydroFields& cur,
                                                         const HydroFields& next, double dt,
                                                         const EnergyGradients& eg, const ResidualOptions& opt = {}) {
  auto rs = eom_residuals(prev, cur, next, dt, eg, opt);
  return {std::move(rs.r_euler), std::move(rs.perfect_fluid)};
}

// ---------------------------------------------------------------------------------------------

/// L = -m int rho (d_t varphi + lambda d_t mu) - m/2 int rho (u^2 + kappa^2 |grad mu|^2) - E_qm - Re E_P
/// at the middle of three snapshots.
inline double lagrangian(const HydroFields& prev, const HydroFields& cur, const HydroFields& next, double dt,
                         const EnergyGradients& eg) {
  const Grid g1 = cur.one_particle();
  const std::size_t n = g1.particle_size();
  const double m = cur.mass, span = 2.0 * dt;
  const double quantum = 2.0 * std::numbers::pi / m;
  double kinetic = 0.0, temporal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cur.mask[i]) continue;
    double d = next.varphi[i] - prev.varphi[i];
    d -= quantum * std::round(d / quantum);
    temporal += cur.rho[i] * (d / span + cur.lambda[i] * (next.mu[i] - prev.mu[i]) / span);
    kinetic += cur.rho[i] * (dot_at(cur.u, cur.u, i) + cur.kappa_sq[i] * dot_at(cur.grad_mu, cur.grad_mu, i));
  }
  const double vol = std::pow(g1.spacing, g1.dims);
  return -m * temporal * vol - 0.5 * m * kinetic * vol - eg.e_qm - eg.e_p.real();
}

// ---------------------------------------------------------------------------------------------

struct ThermalPressure {
  int dims = 1;
  /// d*d components, row-major: components[a * d + b][i] = rho kappa^2 d_a mu d_b mu.
  std::vector<Field> components;
  Field min_eigenvalue;
  Field max_eigenvalue;
};

inline ThermalPressure thermal_pressure_from_gradient(const Grid& g1, std::span<const double> rho,
                                                      std::span<const double> kappa_sq, const VectorField& grad_mu) {
  const std::size_t n = rho.size();
  const int d = g1.dims;
  const auto D = static_cast<std::size_t>(d);
  ThermalPressure tp{d, std::vector<Field>(D * D, Field(n)), Field(n), Field(n)};
  Eigen::MatrixXd p(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rho[i] * kappa_sq[i];
    for (std::size_t a = 0; a < D; ++a)
      for (std::size_t b = 0; b < D; ++b) {
        const double v = w * grad_mu[a][i] * grad_mu[b][i];
        tp.components[a * D + b][i] = v;
        p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
    tp.min_eigenvalue[i] = es.eigenvalues().minCoeff();
    tp.max_eigenvalue[i] = es.eigenvalues().maxCoeff();
  }
  return tp;
}

inline ThermalPressure thermal_pressure(const Grid& g, std::span<const double> rho, std::span<const double> kappa_sq,
                                        std::span<const double> mu,
                                        DerivativeScheme scheme = DerivativeScheme::spectral) {
  const Grid g1 = g.single_particle();
  const std::size_t n = g1.particle_size();
  if (rho.size() != n || kappa_sq.size() != n || mu.size() != n)
    throw ConfigError("thermal_pressure: field size mismatch");
  const auto gm = gradient(g1, mu, scheme);
  return thermal_pressure_from_gradient(g1, rho, kappa_sq, gm);
}

}  // namespace cgh
