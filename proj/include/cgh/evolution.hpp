#pragma once

// Per-mode integration of the coarse-grained evolution equation
//
//   i d/dt a_k + s_H H_k a_k = zeta_k(t) - i int_0^t G_k(tau) a_k(t - tau) dtau
//
// with zeta_k(t) = s_zeta F_k(t) a_full_k(0). Spectral modes are independent, so every mode is
// a scalar Volterra integro-differential equation.

#include <cgh/error.hpp>
#include <cgh/grid.hpp>
#include <cgh/parallel.hpp>
#include <cgh/projector.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cgh {

enum class FluctuationMode { deterministic, ensemble };

struct FluctuationSource {
  FluctuationMode mode = FluctuationMode::deterministic;
  /// Unsmeared initial state a(.;0), spectral. In ensemble mode it already carries the sampled
  /// irrelevant components.
  WaveFunction initial_full;
  std::uint64_t seed = 0;
  double irrelevant_amplitude = 0.0;
  /// Noise is added only where 1 - P exceeds this value.
  double threshold = 1e-3;
  double sign = 1.0;  ///< s_zeta
};

inline FluctuationSource make_fluctuation_source(const WaveFunction& initial_full,
                                                 const ProjectorSymbol& symbol,
                                                 FluctuationMode mode = FluctuationMode::deterministic,
                                                 std::uint64_t seed = 0, double irrelevant_amplitude = 0.0,
                                                 double threshold = 1e-3, double sign = 1.0) {
  if (!initial_full.grid.same_lattice(symbol.grid))
    throw ConfigError("fluctuation source: grid mismatch");
  FluctuationSource src{mode, as_spectral(initial_full), seed, irrelevant_amplitude, threshold, sign};
  if (mode == FluctuationMode::ensemble) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = irrelevant_amplitude / std::sqrt(2.0);
    for (std::size_t i = 0; i < src.initial_full.values.size(); ++i) {
      // Draw for every mode so the stream does not depend on l_av.
      const double re = normal(rng), im = normal(rng);
      if (1.0 - symbol.values[i] > threshold) src.initial_full.values[i] += Complex{re, im} * scale;
    }
  }
  return src;
}

/// Exact free propagation a_k(t) = a_k(0) exp(-i omega_k t); keeps the input's representation.
inline WaveFunction schrodinger_reference(const WaveFunction& w0, double mass, double t) {
  if (!(t >= 0.0)) throw ConfigError("schrodinger_reference: t must be >= 0");
  const OmegaTable omega = dispersion(w0.grid, mass);
  WaveFunction s = as_spectral(w0);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] *= std::polar(1.0, -omega.values[i] * t);
  s.time = w0.time + t;
  return w0.representation == Representation::position ? to_position(s) : s;
}

/// zeta_k(t) = s_zeta F_k(t) a_full_k(0), spectral.
inline WaveFunction fluctuation_term(const FluctuationSource& src, const KernelSet& kernels, double t) {
  if (!(t >= 0.0)) throw ConfigError("fluctuation_term: t must be >= 0");
  if (!src.initial_full.grid.same_lattice(kernels.grid()))
    throw ConfigError("fluctuation_term: grid mismatch");
  WaveFunction z = make_wavefunction(kernels.grid(), Representation::spectral, t);
  for (std::size_t i = 0; i < z.values.size(); ++i)
    z.values[i] = src.sign * kernels.f(i, t) * src.initial_full.values[i];
  return z;
}

namespace detail {

/// Product-trapezoid weights over one step for the kernel exp(-i theta s), s in [0, 1]:
/// alpha = int (1 - s) e^{-i theta s} ds, beta = int s e^{-i theta s} ds.
struct TrapezoidWeights {
  Complex alpha;
  Complex beta;
};

inline TrapezoidWeights product_weights(double theta) {
  const Complex mi{0.0, -theta};  // -i theta
  if (std::abs(theta) < 1e-2) {
    // Series: int s^p e^{x s} ds = sum_n x^n / (n! (n + p + 1)).
    Complex a0{}, b{};
    Complex term{1.0, 0.0};
    for (int n = 0; n < 14; ++n) {
      a0 += term / static_cast<double>(n + 1);
      b += term / static_cast<double>(n + 2);
      term *= mi / static_cast<double>(n + 1);
    }
    return {a0 - b, b};
  }
  const Complex e = std::exp(mi);
  const Complex ith{0.0, theta};
  const Complex a0 = (1.0 - e) / ith;
  const Complex b = (a0 - e) / ith;
  return {a0 - b, b};
}

}  // namespace detail

struct Trajectory {
  Grid grid;
  double dt = 0.0;
  std::size_t snapshot_stride = 1;
  std::vector<double> times;
  std::vector<WaveFunction> states;  ///< spectral snapshots
  /// Memory integral int_0^t G(tau) a(t - tau) dtau at each snapshot, spectral.
  std::vector<WaveFunction> memory;
  std::vector<double> norm_ratio;  ///< ||a(t)|| / ||a(0)|| per snapshot
  /// ||P w0 - w0|| / ||w0||: how far the initial state is from a fixed point of P.
  double initial_projection_defect = 0.0;
};

/// Product-trapezoid quadrature of int_0^t G_k(tau) a_k(t - tau) dtau from a uniformly sampled
/// history a(0), a(dt), ..., a(t) (spectral). Direct O(n) sum over the whole history.
inline WaveFunction memory_increment(std::span<const WaveFunction> history, const KernelSet& kernels,
                                     double dt) {
  if (history.empty()) throw ConfigError("memory_increment: insufficient history");
  if (!(dt > 0.0)) throw ConfigError("memory_increment: dt must be positive");
  const std::size_t n = history.size() - 1;
  for (const auto& h : history) {
    if (h.representation != Representation::spectral || !h.grid.same_lattice(kernels.grid()))
      throw ConfigError("memory_increment: history must be spectral on the kernel grid");
  }
  WaveFunction out = make_wavefunction(kernels.grid(), Representation::spectral, history.back().time);
  if (n == 0) return out;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double g = kernels.g_amplitude[i];
    if (g == 0.0) continue;
    const double w = kernels.omega.values[i];
    const auto [alpha, beta] = detail::product_weights(w * dt);
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const Complex ph = std::polar(1.0, -w * static_cast<double>(j) * dt);
      acc += ph * (alpha * history[n - j].values[i] + beta * history[n - j - 1].values[i]);
    }
    out.values[i] = g * dt * acc;
  }
  return out;
}

inline WaveFunction memory_increment(const Trajectory& traj, const KernelSet& kernels, std::size_t step) {
  if (traj.snapshot_stride != 1)
    throw ConfigError("memory_increment: trajectory must retain every step (stride 1)");
  if (step >= traj.states.size()) throw ConfigError("memory_increment: insufficient history");
  return memory_increment(std::span<const WaveFunction>(traj.states.data(), step + 1), kernels, traj.dt);
}

struct EvolutionOptions {
  double dt = 1e-3;
  double t_final = 1.0;
  std::size_t snapshot_stride = 1;
  /// Sign of the H term on the left-hand side. -1 makes the l_av -> 0 limit exp(-i omega t).
  double sign_h = -1.0;
  int threads = 1;
  /// Guard dt * max|H| <= stability_limit.
  double stability_limit = 0.5;
  /// Also record this many steps before the last one (for centered time derivatives at T).
  std::size_t tail_snapshots = 0;
};

/// Integrates the per-mode Volterra equation with an integrating factor exp(-i s H t) and the
/// implicit trapezoid rule on the remainder; the memory term uses product-trapezoid quadrature
/// (exact for piecewise-linear histories). Because G_k(tau) = g_k exp(-i omega_k tau), the
/// history sum obeys a one-term recurrence, so each step costs O(1) per mode while producing
/// the same quadrature as memory_increment.
inline Trajectory evolve_zwanzig(const WaveFunction& w0, const FluctuationSource& src,
                                 const KernelSet& kernels, const EvolutionOptions& opt) {
  const Grid& g = kernels.grid();
  if (!w0.grid.same_lattice(g) || !src.initial_full.grid.same_lattice(g))
    throw ConfigError("evolve_zwanzig: grid mismatch");
  if (!(opt.dt > 0.0)) throw ConfigError("time.dt must be positive");
  if (!(opt.t_final >= 0.0)) throw ConfigError("time.T must be >= 0");
  if (opt.snapshot_stride < 1) throw ConfigError("time.snapshot_stride must be >= 1");
  if (opt.dt * kernels.max_h() > opt.stability_limit)
    throw NumericError("stability guard violated: dt * max(H) = " +
                       std::to_string(opt.dt * kernels.max_h()) + " > " +
                       std::to_string(opt.stability_limit));
  const double steps_real = opt.t_final / opt.dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
    throw ConfigError("time.T must be an integer multiple of time.dt");

  const WaveFunction a0 = as_spectral(w0);
  const std::size_t modes = a0.values.size();
  const double dt = opt.dt;

  Trajectory traj;
  traj.grid = g;
  traj.dt = dt;
  traj.snapshot_stride = opt.snapshot_stride;
  std::vector<std::size_t> snap_steps;
  for (std::size_t n = 0; n <= steps; ++n)
    if (n % opt.snapshot_stride == 0 || n + opt.tail_snapshots >= steps) snap_steps.push_back(n);
  for (std::size_t n : snap_steps) {
    const double t = a0.time + static_cast<double>(n) * dt;
    traj.times.push_back(t);
    traj.states.push_back(make_wavefunction(g, Representation::spectral, t));
    traj.memory.push_back(make_wavefunction(g, Representation::spectral, t));
  }

  {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < modes; ++i) {
      num += std::norm(a0.values[i] * (kernels.symbol.values[i] - 1.0));
      den += std::norm(a0.values[i]);
    }
    traj.initial_projection_defect = den > 0.0 ? std::sqrt(num / den) : 0.0;
  }

  parallel_for(modes, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double freq = -opt.sign_h * kernels.h[i];
      const double w = kernels.omega.values[i];
      const double gk = kernels.g_amplitude[i];
      const Complex drive = -Complex{0.0, 1.0} * src.sign * kernels.f_amplitude[i] * src.initial_full.values[i];
      const auto [alpha, beta] = detail::product_weights(w * dt);
      const Complex implicit = 1.0 + 0.5 * dt * gk * dt * alpha;

      // -i zeta(t) = drive * exp(-i omega t)
      auto forcing = [&](double t) { return drive * std::polar(1.0, -w * t); };

      Complex y = a0.values[i];
      Complex b = y;
      Complex hist{};   // C_n = sum_{m=1}^n e^{i w t_m} (alpha y_m + beta y_{m-1})
      Complex mem{};    // I_n
      std::size_t next_snap = 0;
      auto record = [&](std::size_t n) {
        if (next_snap < snap_steps.size() && snap_steps[next_snap] == n) {
          traj.states[next_snap].values[i] = y;
          traj.memory[next_snap].values[i] = mem;
          ++next_snap;
        }
      };
      record(0);
      for (std::size_t n = 0; n < steps; ++n) {
        const double tn = static_cast<double>(n) * dt;
        const double tn1 = static_cast<double>(n + 1) * dt;
        const Complex rn = std::polar(1.0, freq * tn) * (forcing(tn) - mem);
        const Complex explicit_mem = gk == 0.0 ? Complex{} : gk * dt * (std::polar(1.0, -w * tn1) * hist + beta * y);
        const Complex rhs = b + 0.5 * dt * rn + 0.5 * dt * std::polar(1.0, freq * tn1) * (forcing(tn1) - explicit_mem);
        b = rhs / implicit;
        const Complex y_next = std::polar(1.0, -freq * tn1) * b;
        if (gk != 0.0) {
          hist += std::polar(1.0, w * tn1) * (alpha * y_next + beta * y);
          mem = gk * dt * std::polar(1.0, -w * tn1) * hist;
        }
        y = y_next;
        record(n + 1);
      }
      if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
        throw NumericError("evolve_zwanzig: non-finite amplitude in spectral mode " + std::to_string(i));
    }
  });

  const double n0 = a0.norm();
  for (const auto& s : traj.states) {
    const double n = s.norm();
    if (!std::isfinite(n)) throw NumericError("evolve_zwanzig: non-finite norm");
    traj.norm_ratio.push_back(n0 > 0.0 ? n / n0 : 1.0);
  }
  return traj;
}

}  // namespace cgh
