#pragma once

// Periodic lattice for N particles in d dimensions, wavefunctions on it, spectral transforms
// and the free non-relativistic dispersion.
//
// Layout: a configuration-space array has rank N*d; axis a belongs to particle a / d and
// spatial direction a % d. Storage is row-major with axis 0 slowest, so the d axes of one
// particle form a contiguous block of digits of the flat index.
//
// Spectral arrays are Fourier coefficients in FFT order: a(x) = sum_k a_k exp(i k.x), with
// lattice points x_j = -L/2 + j*h. The origin therefore sits on the lattice at j = M/2.

#include <cgh/error.hpp>
#include <cgh/fft.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace cgh {

using Complex = std::complex<double>;

/// Default cap on configuration-space points (2^24, about 256 MiB per complex array).
inline constexpr std::size_t default_memory_budget = std::size_t{1} << 24;

constexpr std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

struct Grid {
  double box_length = 0.0;
  std::size_t points_per_dim = 0;
  int dims = 1;
  int particles = 1;
  double spacing = 0.0;
  std::size_t memory_budget = default_memory_budget;

  int rank() const { return dims * particles; }
  std::size_t size() const { return ipow(points_per_dim, rank()); }
  /// Number of points of the one-particle (d-dimensional) lattice.
  std::size_t particle_size() const { return ipow(points_per_dim, dims); }
  /// Lattice volume element h^(N d).
  double cell_volume() const { return std::pow(spacing, rank()); }
  /// Box volume L^(N d).
  double volume() const { return std::pow(box_length, rank()); }

  /// Signed mode number n in {-M/2, ..., M/2-1} of an FFT-ordered axis index.
  long mode_number(std::size_t axis_index) const {
    const auto m = static_cast<long>(points_per_dim);
    const auto i = static_cast<long>(axis_index);
    return i < m / 2 ? i : i - m;
  }
  double wavenumber(std::size_t axis_index) const {
    return 2.0 * std::numbers::pi * static_cast<double>(mode_number(axis_index)) / box_length;
  }
  bool is_nyquist(std::size_t axis_index) const { return axis_index == points_per_dim / 2; }
  /// Ascending wavenumbers k_n = 2 pi n / L for n = -M/2 .. M/2-1.
  std::vector<double> wavenumbers() const {
    std::vector<double> k(points_per_dim);
    const long half = static_cast<long>(points_per_dim) / 2;
    for (std::size_t i = 0; i < points_per_dim; ++i)
      k[i] = 2.0 * std::numbers::pi * static_cast<double>(static_cast<long>(i) - half) / box_length;
    return k;
  }
  double coordinate(std::size_t axis_index) const {
    return -0.5 * box_length + static_cast<double>(axis_index) * spacing;
  }

  /// Index along `axis` of flat configuration index `flat`.
  std::size_t axis_index(std::size_t flat, int axis) const {
    return (flat / ipow(points_per_dim, rank() - 1 - axis)) % points_per_dim;
  }
  /// Flat one-particle index of particle `p` within configuration index `flat`.
  std::size_t particle_index(std::size_t flat, int p) const {
    return (flat / ipow(points_per_dim, (particles - 1 - p) * dims)) % particle_size();
  }

  /// The d-dimensional lattice of a single particle.
  Grid single_particle() const {
    Grid g = *this;
    g.particles = 1;
    return g;
  }
  Grid with_particles(int n) const {
    Grid g = *this;
    g.particles = n;
    return g;
  }

  bool same_lattice(const Grid& o) const {
    return box_length == o.box_length && points_per_dim == o.points_per_dim && dims == o.dims &&
           particles == o.particles;
  }
};

/// Builds a lattice; fails when M is not a power of two, d or N is out of range, or the
/// configuration space exceeds `memory_budget` points.
inline Grid make_grid(double box_length, std::size_t points_per_dim, int dims, int particles,
                      std::size_t memory_budget = default_memory_budget) {
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw ConfigError("grid.box_length must be positive");
  if (points_per_dim < 2 || (points_per_dim & (points_per_dim - 1)) != 0)
    throw ConfigError("grid.M must be a power of two >= 2");
  if (dims < 1 || dims > 3) throw ConfigError("grid.d must be 1, 2 or 3");
  if (particles < 1 || particles > 3) throw ConfigError("grid.N must be 1, 2 or 3");
  // Overflow-safe check of M^(N d) <= budget.
  std::size_t total = 1;
  for (int a = 0; a < dims * particles; ++a) {
    if (total > memory_budget / points_per_dim)
      throw ConfigError("memory budget exceeded: M^(N*d) points do not fit in " +
                        std::to_string(memory_budget));
    total *= points_per_dim;
  }
  Grid g;
  g.box_length = box_length;
  g.points_per_dim = points_per_dim;
  g.dims = dims;
  g.particles = particles;
  g.spacing = box_length / static_cast<double>(points_per_dim);
  g.memory_budget = memory_budget;
  return g;
}

/// Sum over particles and directions of k^2 at every spectral point (FFT order).
inline std::vector<double> total_k_squared(const Grid& g) {
  const std::size_t n = g.size();
  const int r = g.rank();
  std::vector<double> k2axis(g.points_per_dim);
  for (std::size_t i = 0; i < g.points_per_dim; ++i) {
    const double k = g.wavenumber(i);
    k2axis[i] = k * k;
  }
  std::vector<double> out(n);
  std::vector<std::size_t> digit(static_cast<std::size_t>(r), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    double s = 0.0;
    for (int a = 0; a < r; ++a) s += k2axis[digit[static_cast<std::size_t>(a)]];
    out[flat] = s;
    for (int a = r - 1; a >= 0; --a) {
      auto& d = digit[static_cast<std::size_t>(a)];
      if (++d < g.points_per_dim) break;
      d = 0;
    }
  }
  return out;
}

enum class Representation { position, spectral };

struct WaveFunction {
  Grid grid;
  Representation representation = Representation::position;
  std::vector<Complex> values;
  double time = 0.0;

  /// ||a||^2: sum |a|^2 h^(Nd) in position space, L^(Nd) sum |a_k|^2 in spectral space.
  double norm_squared() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * (representation == Representation::position ? grid.cell_volume() : grid.volume());
  }
  double norm() const { return std::sqrt(norm_squared()); }
};

inline WaveFunction make_wavefunction(const Grid& g, Representation rep, double time = 0.0) {
  return WaveFunction{g, rep, std::vector<Complex>(g.size()), time};
}

namespace detail {

// Per-point sign (-1)^(sum of mode numbers) that moves the DFT origin to x = -L/2.
inline void apply_origin_shift(const Grid& g, std::span<Complex> values) {
  const int r = g.rank();
  std::vector<std::size_t> digit(static_cast<std::size_t>(r), 0);
  std::vector<int> parity(g.points_per_dim);
  for (std::size_t i = 0; i < g.points_per_dim; ++i)
    parity[i] = static_cast<int>(std::abs(g.mode_number(i)) % 2);
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    int p = 0;
    for (int a = 0; a < r; ++a) p += parity[digit[static_cast<std::size_t>(a)]];
    if (p % 2 != 0) values[flat] = -values[flat];
    for (int a = r - 1; a >= 0; --a) {
      auto& d = digit[static_cast<std::size_t>(a)];
      if (++d < g.points_per_dim) break;
      d = 0;
    }
  }
}

}  // namespace detail

inline WaveFunction to_spectral(const WaveFunction& w) {
  if (w.representation != Representation::position)
    throw ConfigError("to_spectral: input is not in position representation");
  WaveFunction out = make_wavefunction(w.grid, Representation::spectral, w.time);
  fft::transform(w.values, out.values, w.grid.rank(), static_cast<int>(w.grid.points_per_dim),
                 fft::Direction::forward);
  const double scale = 1.0 / static_cast<double>(w.grid.size());
  for (auto& v : out.values) v *= scale;
  detail::apply_origin_shift(w.grid, out.values);
  return out;
}

inline WaveFunction to_position(const WaveFunction& w) {
  if (w.representation != Representation::spectral)
    throw ConfigError("to_position: input is not in spectral representation");
  WaveFunction shifted = w;
  detail::apply_origin_shift(w.grid, shifted.values);
  WaveFunction out = make_wavefunction(w.grid, Representation::position, w.time);
  fft::transform(shifted.values, out.values, w.grid.rank(),
                 static_cast<int>(w.grid.points_per_dim), fft::Direction::backward);
  return out;
}

inline WaveFunction as_spectral(const WaveFunction& w) {
  return w.representation == Representation::spectral ? w : to_spectral(w);
}
inline WaveFunction as_position(const WaveFunction& w) {
  return w.representation == Representation::position ? w : to_position(w);
}

/// Free non-relativistic eigenfrequencies omega = sum_j |k_j|^2 / 2m (hbar = 1), FFT order.
struct OmegaTable {
  Grid grid;
  double mass = 1.0;
  std::vector<double> values;

  double max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

inline OmegaTable dispersion(const Grid& g, double mass) {
  if (!(mass > 0.0)) throw ConfigError("physics.m must be positive");
  OmegaTable t{g, mass, total_k_squared(g)};
  for (auto& v : t.values) v /= 2.0 * mass;
  return t;
}

}  // namespace cgh
