#include <cgh/evolution.hpp>

#include <gtest/gtest.h>

#include "free_packet.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace {

using cgh::Complex;
using cgh::Representation;

cgh::WaveFunction gaussian(const cgh::Grid& g, double sigma, double k0, double x0 = 0.0) {
  auto w = cgh::make_wavefunction(g, Representation::position);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.coordinate(j) - x0;
    w.values[j] = std::exp(-x * x / (4.0 * sigma * sigma)) * std::polar(1.0, k0 * x);
  }
  const double n = w.norm();
  for (auto& v : w.values) v /= n;
  return w;
}

double max_diff(const cgh::WaveFunction& a, const cgh::WaveFunction& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) e = std::max(e, std::abs(a.values[i] - b.values[i]));
  return e;
}

// Laplace-domain solution of y' = -i phi y - i s f A e^{-i w t} - g int_0^t e^{-i w tau} y(t - tau):
// Y(p) = [y0 (p + i w) + c] / [(p + i phi)(p + i w) + g], c = -i s f A.
Complex mode_oracle(Complex y0, double phi, double w, double g, Complex c, double t) {
  const Complex i{0.0, 1.0};
  const Complex b = i * (phi + w);
  const Complex disc = std::sqrt(b * b - 4.0 * (g - phi * w));
  const Complex p1 = (-b + disc) / 2.0, p2 = (-b - disc) / 2.0;
  auto num = [&](Complex p) { return y0 * (p + i * w) + c; };
  return num(p1) / (p1 - p2) * std::exp(p1 * t) + num(p2) / (p2 - p1) * std::exp(p2 * t);
}

TEST(Schrodinger, PhaseAndIdentity) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 8, 1, 1);
  auto w = cgh::make_wavefunction(g, Representation::spectral);
  w.values[2] = 1.0;  // k = 2, m = 1: omega = 2
  const auto r = cgh::schrodinger_reference(w, 1.0, std::numbers::pi / 2.0);
  EXPECT_NEAR(std::abs(r.values[2] + 1.0), 0.0, 1e-15);
  EXPECT_EQ(max_diff(cgh::schrodinger_reference(w, 1.0, 0.0), w), 0.0);
  EXPECT_THROW(cgh::schrodinger_reference(w, 0.0, 1.0), cgh::ConfigError);
}

TEST(Schrodinger, GaussianSpreading) {
  const auto g = cgh::make_grid(40.0, 256, 1, 1);
  const auto w0 = gaussian(g, 1.0, 0.0);
  const auto w = cgh::schrodinger_reference(w0, 1.0, 2.0);
  EXPECT_EQ(w.representation, Representation::position);
  double m2 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) m2 += std::norm(w.values[j]) * g.coordinate(j) * g.coordinate(j) * g.spacing;
  EXPECT_NEAR(std::sqrt(m2), std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(w.norm(), 1.0, 1e-13);
}

TEST(Schrodinger, MatchesAnalyticPacket) {
  const auto g = cgh::make_grid(20.0, 128, 1, 1);
  const auto w0 = testing_support::packet(g, 1.0, 1.0, 1.3, 1.0, 0.0);
  const auto w = cgh::as_position(cgh::schrodinger_reference(w0, 1.3, 0.8));
  const auto ref = testing_support::packet(g, 1.0, 1.0, 1.3, 1.0, 0.8);
  double err = 0.0;
  for (std::size_t j = 0; j < 128; ++j) err = std::max(err, std::abs(w.values[j] - ref.values[j]));
  EXPECT_LT(err, 1e-12);
}

TEST(Fluctuation, Values) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 8, 1, 1);
  auto full = cgh::make_wavefunction(g, Representation::spectral);
  full.values[2] = 1.0;
  const auto k0 = cgh::build_kernels(g, 0.0, 1.0);
  auto src = cgh::make_fluctuation_source(full, k0.symbol);
  for (const auto& v : cgh::fluctuation_term(src, k0, 0.3).values) EXPECT_EQ(v, Complex{});

  const auto ks = cgh::build_kernels(g, std::sqrt(std::log(2.0) / 2.0), 1.0);
  src = cgh::make_fluctuation_source(full, ks.symbol);
  EXPECT_NEAR(std::abs(cgh::fluctuation_term(src, ks, 0.0).values[2]), 0.25, 1e-15);

  auto dc = cgh::make_wavefunction(g, Representation::spectral);
  dc.values[0] = 1.0;
  src = cgh::make_fluctuation_source(dc, ks.symbol);
  for (const auto& v : cgh::fluctuation_term(src, ks, 1.0).values) EXPECT_EQ(v, Complex{});
}

TEST(Fluctuation, EnsembleOnlyTouchesIrrelevantModes) {
  const auto g = cgh::make_grid(10.0, 32, 1, 1);
  const auto full = cgh::to_spectral(gaussian(g, 1.0, 0.0));
  const auto ks = cgh::build_kernels(g, 0.3, 1.0);
  const auto a = cgh::make_fluctuation_source(full, ks.symbol, cgh::FluctuationMode::ensemble, 5, 0.1);
  const auto b = cgh::make_fluctuation_source(full, ks.symbol, cgh::FluctuationMode::ensemble, 5, 0.1);
  const auto c = cgh::make_fluctuation_source(full, ks.symbol, cgh::FluctuationMode::ensemble, 6, 0.1);
  EXPECT_EQ(a.initial_full.values, b.initial_full.values);
  EXPECT_NE(a.initial_full.values, c.initial_full.values);
  for (std::size_t i = 0; i < full.values.size(); ++i)
    if (1.0 - ks.symbol.values[i] <= 1e-3) {
      EXPECT_EQ(a.initial_full.values[i], full.values[i]);
    }
}

TEST(Memory, ProductWeightsSeriesAgreesWithClosedForm) {
  for (double th : {1e-2, 2e-2}) {
    const auto exact = cgh::detail::product_weights(th);
    const auto near = cgh::detail::product_weights(th * (1.0 - 1e-9));
    EXPECT_LT(std::abs(exact.alpha - near.alpha), 1e-9);
    EXPECT_LT(std::abs(exact.beta - near.beta), 1e-9);
  }
  const auto z = cgh::detail::product_weights(0.0);
  EXPECT_NEAR(z.alpha.real(), 0.5, 1e-16);
  EXPECT_NEAR(z.beta.real(), 0.5, 1e-16);
}

TEST(Memory, ConstantHistoryClosedForm) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 8, 1, 1);
  const auto ks = cgh::build_kernels(g, 0.4, 1.0);
  const double dt = 0.01;
  std::vector<cgh::WaveFunction> hist;
  for (int n = 0; n <= 150; ++n) {
    auto w = cgh::make_wavefunction(g, Representation::spectral, n * dt);
    for (auto& v : w.values) v = 1.0;
    hist.push_back(w);
  }
  EXPECT_EQ(cgh::memory_increment(std::span(hist.data(), 1), ks, dt).values, std::vector<Complex>(8));
  const auto mem = cgh::memory_increment(hist, ks, dt);
  const double t = 150 * dt;
  for (std::size_t i = 0; i < 8; ++i) {
    const double w = ks.omega.values[i];
    const Complex oracle = w == 0.0 ? ks.g_amplitude[i] * t
                                    : ks.g_amplitude[i] * (1.0 - std::polar(1.0, -w * t)) / Complex{0.0, w};
    EXPECT_NEAR(std::abs(mem.values[i] - oracle), 0.0, 1e-13);
  }
  const auto k0 = cgh::build_kernels(g, 0.0, 1.0);
  for (const auto& v : cgh::memory_increment(hist, k0, dt).values) EXPECT_EQ(v, Complex{});
  EXPECT_THROW(cgh::memory_increment(std::span<const cgh::WaveFunction>{}, ks, dt), cgh::ConfigError);
}

TEST(Evolve, FreeLimitMatchesReference) {
  const auto g = cgh::make_grid(20.0, 64, 1, 1);
  const auto w0 = gaussian(g, 1.0, 1.5, -2.0);
  const auto ks = cgh::build_kernels(g, 0.0, 1.0);
  const auto src = cgh::make_fluctuation_source(w0, ks.symbol);
  cgh::EvolutionOptions opt;
  opt.dt = 1e-3;
  opt.t_final = 1.0;
  opt.snapshot_stride = 100;
  const auto traj = cgh::evolve_zwanzig(w0, src, ks, opt);
  ASSERT_EQ(traj.states.size(), 11u);
  EXPECT_NEAR(traj.times.back(), 1.0, 1e-12);
  const auto ref = cgh::schrodinger_reference(cgh::to_spectral(w0), 1.0, 1.0);
  EXPECT_LT(max_diff(traj.states.back(), ref), 1e-8);
  EXPECT_NEAR(traj.norm_ratio.back(), 1.0, 1e-12);
}

TEST(Evolve, ZeroModeIsStationary) {
  const auto g = cgh::make_grid(5.0, 16, 2, 1);
  auto w0 = cgh::make_wavefunction(g, Representation::spectral);
  w0.values[0] = {0.7, 0.1};
  for (double l : {0.0, 0.3, 1.0}) {
    const auto ks = cgh::build_kernels(g, l, 1.0);
    cgh::EvolutionOptions opt;
    opt.dt = 2e-3;
    opt.t_final = 0.1;
    const auto traj = cgh::evolve_zwanzig(w0, cgh::make_fluctuation_source(w0, ks.symbol), ks, opt);
    for (const auto& s : traj.states) EXPECT_EQ(s.values, w0.values);
  }
}

TEST(Evolve, MatchesPerModeLaplaceOracle) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 16, 1, 1);
  auto w0 = cgh::make_wavefunction(g, Representation::spectral);
  for (std::size_t i = 0; i < 16; ++i) w0.values[i] = Complex{1.0, 0.5} / (1.0 + static_cast<double>(i));
  auto full = w0;
  for (std::size_t i = 0; i < 16; ++i) full.values[i] *= 1.3;
  const auto ks = cgh::build_kernels(g, 0.35, 1.0);
  const auto src = cgh::make_fluctuation_source(full, ks.symbol);
  cgh::EvolutionOptions opt;
  opt.dt = 2.5e-4;
  opt.t_final = 1.0;
  opt.snapshot_stride = 4000;
  const auto traj = cgh::evolve_zwanzig(w0, src, ks, opt);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    const Complex c = Complex{0.0, -1.0} * ks.f_amplitude[i] * full.values[i];
    const Complex y = mode_oracle(w0.values[i], ks.h[i], ks.omega.values[i], ks.g_amplitude[i], c, 1.0);
    err = std::max(err, std::abs(traj.states.back().values[i] - y));
  }
  EXPECT_LT(err, 1e-6);
}

TEST(Evolve, SecondOrderStepHalving) {
  const auto g = cgh::make_grid(10.0, 32, 1, 1);
  const auto w0 = cgh::coarse_grain(gaussian(g, 0.7, 2.0), cgh::build_symbol(g, 0.3));
  const auto ks = cgh::build_kernels(g, 0.3, 1.0);
  const auto src = cgh::make_fluctuation_source(gaussian(g, 0.7, 2.0), ks.symbol);
  auto run = [&](double dt) {
    cgh::EvolutionOptions opt;
    opt.dt = dt;
    opt.t_final = 1.0;
    opt.snapshot_stride = 1000000;
    return cgh::evolve_zwanzig(w0, src, ks, opt).states.back();
  };
  const auto a = run(4e-3), b = run(2e-3), c = run(1e-3);
  const double ratio = max_diff(a, b) / max_diff(b, c);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(Evolve, LinearityAndRecurrenceAgreement) {
  const auto g = cgh::make_grid(6.0, 16, 1, 1);
  const auto ks = cgh::build_kernels(g, 0.4, 1.0);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  auto rnd = [&] {
    auto w = cgh::make_wavefunction(g, Representation::spectral);
    for (auto& v : w.values) v = {nd(rng), nd(rng)};
    return w;
  };
  const auto u = rnd(), v = rnd(), fu = rnd(), fv = rnd();
  auto sum = u, fsum = fu;
  for (std::size_t i = 0; i < 16; ++i) {
    sum.values[i] += v.values[i];
    fsum.values[i] += fv.values[i];
  }
  cgh::EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 0.5;
  const auto tu = cgh::evolve_zwanzig(u, cgh::make_fluctuation_source(fu, ks.symbol), ks, opt);
  const auto tv = cgh::evolve_zwanzig(v, cgh::make_fluctuation_source(fv, ks.symbol), ks, opt);
  const auto ts = cgh::evolve_zwanzig(sum, cgh::make_fluctuation_source(fsum, ks.symbol), ks, opt);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i)
    err = std::max(err, std::abs(ts.states.back().values[i] - tu.states.back().values[i] - tv.states.back().values[i]));
  EXPECT_LT(err, 1e-12);

  double merr = 0.0;
  for (std::size_t n : {std::size_t{1}, std::size_t{7}, std::size_t{50}}) {
    const auto direct = cgh::memory_increment(ts, ks, n);
    merr = std::max(merr, max_diff(direct, ts.memory[n]));
  }
  EXPECT_LT(merr, 1e-12);
}

TEST(Evolve, ThreadCountDoesNotChangeResult) {
  const auto g = cgh::make_grid(6.0, 16, 2, 1);
  auto w0 = cgh::make_wavefunction(g, Representation::position);
  for (std::size_t i = 0; i < g.size(); ++i) w0.values[i] = std::exp(-0.3 * static_cast<double>(i % 17));
  const auto ks = cgh::build_kernels(g, 0.2, 1.0);
  const auto src = cgh::make_fluctuation_source(w0, ks.symbol, cgh::FluctuationMode::ensemble, 3, 0.05);
  cgh::EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 0.2;
  const auto a = cgh::evolve_zwanzig(w0, src, ks, opt);
  opt.threads = 4;
  const auto b = cgh::evolve_zwanzig(w0, src, ks, opt);
  EXPECT_EQ(a.states.back().values, b.states.back().values);
}

TEST(Evolve, TailSnapshotsKeepLastSteps) {
  const auto g = cgh::make_grid(6.0, 32, 1, 1);
  const auto w0 = gaussian(g, 0.7, 1.0);
  const auto ks = cgh::build_kernels(g, 0.2, 1.0);
  const auto src = cgh::make_fluctuation_source(w0, ks.symbol);
  cgh::EvolutionOptions opt;
  opt.dt = 1e-3;
  opt.t_final = 0.05;
  opt.snapshot_stride = 20;
  const auto plain = cgh::evolve_zwanzig(w0, src, ks, opt);
  opt.tail_snapshots = 2;
  const auto tail = cgh::evolve_zwanzig(w0, src, ks, opt);
  const std::vector<double> steps_plain{0, 20, 40, 50};
  const std::vector<double> steps_tail{0, 20, 40, 48, 49, 50};
  ASSERT_EQ(plain.times.size(), steps_plain.size());
  ASSERT_EQ(tail.times.size(), steps_tail.size());
  for (std::size_t s = 0; s < steps_tail.size(); ++s) EXPECT_NEAR(tail.times[s], steps_tail[s] * opt.dt, 1e-15);
  EXPECT_EQ(tail.states.back().values, plain.states.back().values);
  EXPECT_EQ(tail.memory.size(), tail.states.size());
}

TEST(Evolve, Guards) {
  const auto g = cgh::make_grid(1.0, 64, 1, 1);
  const auto ks = cgh::build_kernels(g, 0.0, 1.0);
  auto w0 = cgh::make_wavefunction(g, Representation::spectral);
  const auto src = cgh::make_fluctuation_source(w0, ks.symbol);
  cgh::EvolutionOptions opt;
  opt.dt = 1e-2;
  EXPECT_THROW(cgh::evolve_zwanzig(w0, src, ks, opt), cgh::NumericError);
  opt.dt = 1e-5;
  opt.t_final = 1.5e-5;
  EXPECT_THROW(cgh::evolve_zwanzig(w0, src, ks, opt), cgh::ConfigError);
}

}  // namespace
