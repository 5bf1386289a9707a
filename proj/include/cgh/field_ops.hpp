#pragma once

// Calculus on real fields over the one-particle lattice (d dimensions, M^d points).

#include <cgh/grid.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cgh {

using Field = std::vector<double>;
/// d components of a vector field, each a Field over the one-particle lattice.
using VectorField = std::vector<Field>;
using Mask = std::vector<std::uint8_t>;

enum class DerivativeScheme {
  spectral,           ///< Fourier differentiation, periodic fields.
  finite_difference,  ///< Second-order centred stencil, one-sided at the box faces.
};

namespace detail {

inline void require_single(const Grid& g, std::size_t n) {
  if (n != g.particle_size())
    throw ConfigError("field size does not match the one-particle lattice");
}

inline std::vector<Complex> spectral_of(const Grid& g1, std::span<const Complex> f) {
  std::vector<Complex> out(f.size());
  fft::transform(f, out, g1.dims, static_cast<int>(g1.points_per_dim), fft::Direction::forward);
  return out;
}

inline std::vector<Complex> position_of(const Grid& g1, std::span<const Complex> f) {
  std::vector<Complex> out(f.size());
  fft::transform(f, out, g1.dims, static_cast<int>(g1.points_per_dim), fft::Direction::backward);
  const double s = 1.0 / static_cast<double>(f.size());
  for (auto& v : out) v *= s;
  return out;
}

// Multiplies spectral values by i k_axis; the Nyquist mode is dropped so the derivative of a
// real field stays real.
inline void multiply_ik(const Grid& g1, std::span<Complex> spec, int axis) {
  for (std::size_t flat = 0; flat < spec.size(); ++flat) {
    const std::size_t i = (flat / ipow(g1.points_per_dim, g1.dims - 1 - axis)) % g1.points_per_dim;
    spec[flat] *= g1.is_nyquist(i) ? Complex{} : Complex{0.0, g1.wavenumber(i)};
  }
}

inline std::size_t stride_of(const Grid& g1, int axis) {
  return ipow(g1.points_per_dim, g1.dims - 1 - axis);
}

}  // namespace detail

/// Spectral derivative of a complex one-particle field along each axis.
inline std::vector<std::vector<Complex>> complex_gradient(const Grid& g, std::span<const Complex> f) {
  const Grid g1 = g.single_particle();
  detail::require_single(g1, f.size());
  const auto spec = detail::spectral_of(g1, f);
  std::vector<std::vector<Complex>> out;
  for (int a = 0; a < g1.dims; ++a) {
    auto s = spec;
    detail::multiply_ik(g1, s, a);
    out.push_back(detail::position_of(g1, s));
  }
  return out;
}

inline VectorField gradient(const Grid& g, std::span<const double> f,
                            DerivativeScheme scheme = DerivativeScheme::spectral) {
  const Grid g1 = g.single_particle();
  detail::require_single(g1, f.size());
  VectorField out(static_cast<std::size_t>(g1.dims), Field(f.size()));
  if (scheme == DerivativeScheme::spectral) {
    std::vector<Complex> c(f.begin(), f.end());
    const auto grads = complex_gradient(g1, c);
    for (int a = 0; a < g1.dims; ++a)
      for (std::size_t i = 0; i < f.size(); ++i)
        out[static_cast<std::size_t>(a)][i] = grads[static_cast<std::size_t>(a)][i].real();
    return out;
  }
  const std::size_t m = g1.points_per_dim;
  const double h = g1.spacing;
  for (int a = 0; a < g1.dims; ++a) {
    const std::size_t st = detail::stride_of(g1, a);
    auto& o = out[static_cast<std::size_t>(a)];
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
      const std::size_t i = (flat / st) % m;
      if (i == 0)
        o[flat] = (-3.0 * f[flat] + 4.0 * f[flat + st] - f[flat + 2 * st]) / (2.0 * h);
      else if (i == m - 1)
        o[flat] = (3.0 * f[flat] - 4.0 * f[flat - st] + f[flat - 2 * st]) / (2.0 * h);
      else
        o[flat] = (f[flat + st] - f[flat - st]) / (2.0 * h);
    }
  }
  return out;
}

inline Field divergence(const Grid& g, const VectorField& v,
                        DerivativeScheme scheme = DerivativeScheme::spectral) {
  const Grid g1 = g.single_particle();
  if (v.size() != static_cast<std::size_t>(g1.dims))
    throw ConfigError("divergence: component count does not match dimension");
  Field out(g1.particle_size(), 0.0);
  for (int a = 0; a < g1.dims; ++a) {
    const auto grad = gradient(g1, v[static_cast<std::size_t>(a)], scheme);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += grad[static_cast<std::size_t>(a)][i];
  }
  return out;
}

/// Laplacian as the divergence of the gradient, so that it is the exact adjoint square of the
/// discrete gradient (the Nyquist mode contributes nothing).
inline Field laplacian(const Grid& g, std::span<const double> f,
                       DerivativeScheme scheme = DerivativeScheme::spectral) {
  return divergence(g, gradient(g, f, scheme), scheme);
}

inline double dot_at(const VectorField& a, const VectorField& b, std::size_t i) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c][i] * b[c][i];
  return s;
}

/// Discrete L2 norm sqrt(sum f^2 h^d) over unmasked points (mask empty = all points).
inline double l2_norm(const Grid& g, std::span<const double> f, std::span<const std::uint8_t> mask = {}) {
  const double vol = std::pow(g.spacing, g.dims);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (mask.empty() || !mask[i]) s += f[i] * f[i];
  return std::sqrt(s * vol);
}

inline double sup_norm(std::span<const double> f, std::span<const std::uint8_t> mask = {}) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (mask.empty() || !mask[i]) s = std::max(s, std::abs(f[i]));
  return s;
}

inline double vector_l2_norm(const Grid& g, const VectorField& v, std::span<const std::uint8_t> mask = {}) {
  if (v.empty()) return 0.0;
  const double vol = std::pow(g.spacing, g.dims);
  double s = 0.0;
  for (std::size_t i = 0; i < v.front().size(); ++i)
    if (mask.empty() || !mask[i]) s += dot_at(v, v, i);
  return std::sqrt(s * vol);
}

inline double vector_sup_norm(const VectorField& v, std::span<const std::uint8_t> mask = {}) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < v.front().size(); ++i)
    if (mask.empty() || !mask[i]) s = std::max(s, std::sqrt(dot_at(v, v, i)));
  return s;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericError("loglog_slope: non-positive sample");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw NumericError("loglog_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / den;
}

}  // namespace cgh
