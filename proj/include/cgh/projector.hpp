#pragma once

// Gaussian coarse-graining symbol and the exact spectral kernels derived from it.
//
//   P(k_1..k_N) = exp(-c_P * sum_j |k_j|^2 * l_av^2)
//   H   = omega P^2
//   G(t) = omega^2 (P - P^2)^2 exp(-i omega t)
//   F(t) = omega P (1 - P)^2 exp(-i omega t)

#include <cgh/field_ops.hpp>
#include <cgh/grid.hpp>

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace cgh {

struct ProjectorSymbol {
  Grid grid;
  double l_av = 0.0;
  double exponent_factor = 0.5;
  std::vector<double> k_squared;  ///< sum_j |k_j|^2 per spectral point
  std::vector<double> values;
};

inline ProjectorSymbol build_symbol(const Grid& g, double l_av, double exponent_factor = 0.5) {
  if (!(l_av >= 0.0) || !std::isfinite(l_av)) throw ConfigError("physics.l_av must be >= 0");
  if (!(exponent_factor > 0.0)) throw ConfigError("physics.c_P must be positive");
  ProjectorSymbol s{g, l_av, exponent_factor, total_k_squared(g), {}};
  s.values.resize(s.k_squared.size());
  const double a = exponent_factor * l_av * l_av;
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = std::exp(-a * s.k_squared[i]);
  return s;
}

/// Applies P pointwise in spectral space; the result has the input's representation.
inline WaveFunction coarse_grain(const WaveFunction& w, const ProjectorSymbol& symbol) {
  if (!w.grid.same_lattice(symbol.grid)) throw ConfigError("coarse_grain: grid mismatch");
  WaveFunction spec = as_spectral(w);
  for (std::size_t i = 0; i < spec.values.size(); ++i) spec.values[i] *= symbol.values[i];
  return w.representation == Representation::position ? to_position(spec) : spec;
}

/// max |P^2 - P| over spectral points with |k| <= k_max.
inline double projector_defect(const ProjectorSymbol& symbol, double k_max) {
  double d = 0.0;
  const double k2max = k_max * k_max * (1.0 + 1e-12);
  for (std::size_t i = 0; i < symbol.values.size(); ++i) {
    if (symbol.k_squared[i] > k2max) continue;
    const double p = symbol.values[i];
    d = std::max(d, std::abs(p * p - p));
  }
  return d;
}

struct KernelSet {
  ProjectorSymbol symbol;
  OmegaTable omega;
  std::vector<double> h;            ///< omega P^2
  std::vector<double> g_amplitude;  ///< omega^2 (P - P^2)^2 = |G(tau)|
  std::vector<double> f_amplitude;  ///< omega P (1 - P)^2 = |F(tau)|

  const Grid& grid() const { return symbol.grid; }

  Complex g(std::size_t i, double tau) const {
    return g_amplitude[i] * std::polar(1.0, -omega.values[i] * tau);
  }
  Complex f(std::size_t i, double tau) const {
    return f_amplitude[i] * std::polar(1.0, -omega.values[i] * tau);
  }
  std::vector<Complex> g_table(double tau) const {
    std::vector<Complex> t(h.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = g(i, tau);
    return t;
  }
  std::vector<Complex> f_table(double tau) const {
    std::vector<Complex> t(h.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = f(i, tau);
    return t;
  }
  double max_h() const {
    double m = 0.0;
    for (double v : h) m = std::max(m, std::abs(v));
    return m;
  }
};

inline KernelSet build_kernels(const Grid& g, double l_av, double mass, double exponent_factor = 0.5) {
  KernelSet k{build_symbol(g, l_av, exponent_factor), dispersion(g, mass), {}, {}, {}};
  const std::size_t n = g.size();
  k.h.resize(n);
  k.g_amplitude.resize(n);
  k.f_amplitude.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = k.symbol.values[i];
    const double w = k.omega.values[i];
    const double q = 1.0 - p;
    k.h[i] = w * p * p;
    k.g_amplitude[i] = w * w * (p * q) * (p * q);
    k.f_amplitude[i] = w * p * q * q;
  }
  return k;
}

// ---------------------------------------------------------------------------------------------
// Low-order expansion diagnostics.
//
// With s = sum_j |k_j|^2 and c = c_P the series in l_av are
//   1 - P       = c s l^2 + O(l^4)
//   H - omega   = -2 c s l^2 omega + O(l^4)
//   G           = c^2 s^2 l^4 omega^2 + O(l^6)
//   F           = c^2 s^2 l^4 omega P + O(l^6)   (P kept, as in the printed form)
// The printed reference forms are G_ref = l^8/64 s^4 omega^2 and F_ref = l^4/16 s^2 omega P,
// with (k_1 + ... + k_N) read as s.

struct ExpansionRow {
  double l_av = 0.0;
  double h_error = 0.0;         ///< sup |omega P^2 - omega|
  double g_norm = 0.0;          ///< sup |G|
  double f_norm = 0.0;          ///< sup |F|
  double g_series_error = 0.0;  ///< sup |G - c^2 s^2 l^4 omega^2|
  double f_series_error = 0.0;  ///< sup |F - c^2 s^2 l^4 omega P|
  double g_reference_discrepancy = 0.0;  ///< sup |G - G_ref| / sup |G|
  double f_reference_discrepancy = 0.0;  ///< sup |F - F_ref| / sup |F|
};

struct ExpansionReport {
  double exponent_factor = 0.5;
  double k_max = 0.0;
  std::vector<ExpansionRow> rows;
  double h_error_slope = 0.0;  ///< expected 2
  double g_slope = 0.0;        ///< leading order of G, expected 4
  double f_slope = 0.0;        ///< leading order of F, expected 4
  double g_series_error_slope = 0.0;
  double f_series_error_slope = 0.0;
  double g_reference_order = 8.0;
  double f_reference_order = 4.0;
  /// True when the fitted leading order differs from the printed reference order by > 0.2.
  bool g_reference_order_mismatch = false;
  bool f_reference_order_mismatch = false;
};

inline ExpansionReport expansion_report(const Grid& g, double mass, std::span<const double> l_values,
                                        double k_max, double exponent_factor = 0.5) {
  if (l_values.size() < 3) throw ConfigError("expansion_report: need at least 3 l_av values");
  for (double l : l_values)
    if (!(l > 0.0) || l * k_max > 1.0)
      throw ConfigError("expansion_report: require 0 < l_av and l_av * k_max <= 1");
  ExpansionReport rep;
  rep.exponent_factor = exponent_factor;
  rep.k_max = k_max;
  const double c = exponent_factor;
  const double k2max = k_max * k_max * (1.0 + 1e-12);
  for (double l : l_values) {
    const KernelSet ks = build_kernels(g, l, mass, exponent_factor);
    ExpansionRow row;
    row.l_av = l;
    double g_ref_err = 0.0, f_ref_err = 0.0;
    const double l2 = l * l, l4 = l2 * l2, l8 = l4 * l4;
    for (std::size_t i = 0; i < ks.h.size(); ++i) {
      const double s = ks.symbol.k_squared[i];
      if (s > k2max) continue;
      const double w = ks.omega.values[i];
      const double p = ks.symbol.values[i];
      const double gs = c * c * s * s * l4 * w * w;
      const double fs = c * c * s * s * l4 * w * p;
      const double gref = l8 / 64.0 * s * s * s * s * w * w;
      const double fref = l4 / 16.0 * s * s * w * p;
      row.h_error = std::max(row.h_error, std::abs(ks.h[i] - w));
      row.g_norm = std::max(row.g_norm, ks.g_amplitude[i]);
      row.f_norm = std::max(row.f_norm, ks.f_amplitude[i]);
      row.g_series_error = std::max(row.g_series_error, std::abs(ks.g_amplitude[i] - gs));
      row.f_series_error = std::max(row.f_series_error, std::abs(ks.f_amplitude[i] - fs));
      g_ref_err = std::max(g_ref_err, std::abs(ks.g_amplitude[i] - gref));
      f_ref_err = std::max(f_ref_err, std::abs(ks.f_amplitude[i] - fref));
    }
    if (row.g_norm == 0.0 || row.f_norm == 0.0)
      throw NumericError("expansion_report: band |k| <= k_max holds no non-zero mode");
    row.g_reference_discrepancy = g_ref_err / row.g_norm;
    row.f_reference_discrepancy = f_ref_err / row.f_norm;
    rep.rows.push_back(row);
  }
  std::vector<double> ls, he, gn, fn, ge, fe;
  for (const auto& r : rep.rows) {
    ls.push_back(r.l_av);
    he.push_back(r.h_error);
    gn.push_back(r.g_norm);
    fn.push_back(r.f_norm);
    ge.push_back(r.g_series_error);
    fe.push_back(r.f_series_error);
  }
  rep.h_error_slope = loglog_slope(ls, he);
  rep.g_slope = loglog_slope(ls, gn);
  rep.f_slope = loglog_slope(ls, fn);
  rep.g_series_error_slope = loglog_slope(ls, ge);
  rep.f_series_error_slope = loglog_slope(ls, fe);
  rep.g_reference_order_mismatch = std::abs(rep.g_slope - rep.g_reference_order) > 0.2;
  rep.f_reference_order_mismatch = std::abs(rep.f_slope - rep.f_reference_order) > 0.2;
  return rep;
}

}  // namespace cgh
