#include <cgh/madelung.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace {

using cgh::Complex;
using cgh::Representation;

double gauss(double x, double s) { return std::exp(-x * x / (2.0 * s * s)); }

TEST(Decompose, PlaneWave) {
  const double m = 2.0, v = 0.5;
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 32, 1, 1);
  auto w = cgh::make_wavefunction(g, Representation::position);
  for (std::size_t j = 0; j < 32; ++j) w.values[j] = std::polar(1.0, m * v * g.coordinate(j));
  const auto d = cgh::decompose(w, m);
  for (std::size_t j = 0; j < 32; ++j) {
    EXPECT_NEAR(d.amplitude[j], 1.0, 1e-15);
    EXPECT_FALSE(d.node_mask[j]);
  }
  // Unwrapped phase is linear: S_j - S_0 = v (x_j - x_0).
  for (std::size_t j = 0; j < 32; ++j)
    EXPECT_NEAR(d.phase[j] - d.phase[0], v * (g.coordinate(j) - g.coordinate(0)), 1e-12);
}

TEST(Decompose, PositiveGaussianAndOddPacket) {
  const auto g = cgh::make_grid(10.0, 64, 1, 1);
  auto w = cgh::make_wavefunction(g, Representation::position);
  for (std::size_t j = 0; j < 64; ++j) w.values[j] = gauss(g.coordinate(j), 1.5);
  auto d = cgh::decompose(w, 1.0);
  for (double s : d.phase) EXPECT_EQ(s, 0.0);

  for (std::size_t j = 0; j < 64; ++j) {
    const double x = g.coordinate(j);
    w.values[j] = x * std::exp(-x * x / 2.0);
  }
  d = cgh::decompose(w, 1.0);
  EXPECT_TRUE(d.node_mask[32]);  // x = 0
  EXPECT_FALSE(d.node_mask[31]);
  EXPECT_FALSE(d.node_mask[33]);

  auto zero = cgh::make_wavefunction(g, Representation::position);
  EXPECT_THROW(cgh::decompose(zero, 1.0), cgh::NumericError);
  EXPECT_THROW(cgh::decompose(cgh::to_spectral(w), 1.0), cgh::ConfigError);
}

TEST(Decompose, RoundTripProperty) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int dims = 1 + trial % 2, n = 1 + (trial / 2) % 2;
    const auto g = cgh::make_grid(4.0, 8, dims, n);
    auto w = cgh::make_wavefunction(g, Representation::position);
    for (auto& v : w.values) v = {nd(rng), nd(rng)};
    const double m = 0.5 + 0.25 * trial;
    const auto d = cgh::decompose(w, m);
    const auto back = cgh::recompose(d);
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      if (d.node_mask[i]) continue;
      EXPECT_LT(std::abs(back.values[i] - w.values[i]), 1e-10 * std::abs(w.values[i]));
      EXPECT_GE(d.amplitude[i], 0.0);
    }
  }
}

cgh::Grid pair_grid() { return cgh::make_grid(2.0 * std::numbers::pi, 16, 1, 2); }

TEST(PhaseFit, SingleParticleIsIdentity) {
  const auto g = cgh::make_grid(3.0, 16, 2, 1);
  std::vector<double> S(g.size());
  for (std::size_t i = 0; i < S.size(); ++i) S[i] = std::sin(0.1 * static_cast<double>(i));
  const auto ps = cgh::fit_phase_structure(S, {}, g);
  EXPECT_EQ(ps.varphi[0], S);
  for (double v : ps.mu[0]) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(ps.fit_residual, 0.0);
}

TEST(PhaseFit, SeparablePhase) {
  const auto g = pair_grid();
  std::vector<double> S(g.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double x1 = g.coordinate(g.axis_index(i, 0)), x2 = g.coordinate(g.axis_index(i, 1));
    S[i] = std::cos(x1) + 0.3 * x1 + std::cos(x2) + 0.3 * x2;
  }
  const auto ps = cgh::fit_phase_structure(S, {}, g);
  EXPECT_LE(ps.fit_residual, 1e-8);
  for (const auto& mu : ps.mu) EXPECT_LT(cgh::sup_norm(mu), 1e-4);
}

TEST(PhaseFit, ProductPhaseRecoversPairField) {
  const auto g = pair_grid();
  auto gx = [](double x) { return std::sin(x) + 0.5 * std::cos(2.0 * x); };
  std::vector<double> S(g.size());
  for (std::size_t i = 0; i < S.size(); ++i)
    S[i] = 0.7 * gx(g.coordinate(g.axis_index(i, 0))) * gx(g.coordinate(g.axis_index(i, 1)));
  const auto ps = cgh::fit_phase_structure(S, {}, g);
  EXPECT_TRUE(ps.converged);
  EXPECT_LE(ps.fit_residual, 1e-6);
  // mu_1 proportional to g: normalized correlation of magnitude 1.
  double sgg = 0.0, smm = 0.0, sgm = 0.0;
  for (std::size_t x = 0; x < 16; ++x) {
    const double a = gx(g.coordinate(x)), b = ps.mu[0][x];
    sgg += a * a;
    smm += b * b;
    sgm += a * b;
  }
  EXPECT_NEAR(std::abs(sgm) / std::sqrt(sgg * smm), 1.0, 1e-6);
  // Balanced gauge: mu_1 mu_2 = 0.7 g g with equal norms.
  double s2 = 0.0;
  for (double b : ps.mu[1]) s2 += b * b;
  EXPECT_NEAR(smm, s2, 1e-8 * smm);
  EXPECT_NEAR(smm, 0.7 * sgg, 1e-6 * sgg);
  const auto model = cgh::phase_model(ps, g);
  double err = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) err = std::max(err, std::abs(model[i] - S[i]));
  EXPECT_LT(err, 1e-6);
}

TEST(PhaseFit, NonRepresentableResidualIsReported) {
  const auto g = pair_grid();
  std::vector<double> S(g.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double x1 = g.coordinate(g.axis_index(i, 0)), x2 = g.coordinate(g.axis_index(i, 1));
    S[i] = std::sin(x1) * std::sin(x2) + std::sin(x1 * x2 * x2);
  }
  const auto ps = cgh::fit_phase_structure(S, {}, g);
  EXPECT_GT(ps.fit_residual, 1e-2);
  // The reported residual is the distance between S and the returned model.
  const auto model = cgh::phase_model(ps, g);
  double r = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) r += (S[i] - model[i]) * (S[i] - model[i]);
  EXPECT_NEAR(ps.fit_residual, std::sqrt(r * g.cell_volume()), 1e-12);
}

TEST(PhaseFit, MaskedPointsAreIgnored) {
  const auto g = pair_grid();
  std::vector<double> S(g.size());
  cgh::Mask mask(g.size(), 0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    S[i] = std::cos(g.coordinate(g.axis_index(i, 0))) + std::cos(g.coordinate(g.axis_index(i, 1)));
    if (i % 7 == 0) {
      S[i] = 1e3;
      mask[i] = 1;
    }
  }
  const auto ps = cgh::fit_phase_structure(S, mask, g);
  EXPECT_LE(ps.fit_residual, 1e-8);
}

cgh::Moments product_moments(const cgh::Grid& g, const std::vector<double>& f) {
  std::vector<double> phi2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = 1.0;
    for (int p = 0; p < g.particles; ++p) v *= f[g.particle_index(i, p)];
    phi2[i] = v;
  }
  return cgh::moments(phi2, g);
}

std::vector<double> normalized_profile(const cgh::Grid& g) {
  std::vector<double> f(g.particle_size());
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    f[x] = gauss(g.coordinate(x) - 0.3, 0.8) + 0.01;
    s += f[x] * g.spacing;
  }
  for (auto& v : f) v /= s;
  return f;
}

TEST(Moments, ProductStateAndNormalization) {
  const auto g = cgh::make_grid(8.0, 32, 1, 2);
  const auto f = normalized_profile(g);
  const auto mom = product_moments(g, f);
  double total = 0.0;
  for (std::size_t x = 0; x < 32; ++x) {
    EXPECT_NEAR(mom.rho[x], 2.0 * f[x], 1e-12);
    total += mom.rho[x] * g.spacing;
  }
  EXPECT_NEAR(total, 2.0, 1e-12);
  for (std::size_t x = 0; x < 32; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < 32; ++y) s += mom.rho2[x * 32 + y] * g.spacing;
    EXPECT_NEAR(s, mom.rho[x], 1e-8);  // (N - 1) rho
  }
  EXPECT_TRUE(mom.rho3.empty());
  const auto g1 = cgh::make_grid(8.0, 32, 1, 1);
  const auto m1 = product_moments(g1, normalized_profile(g1));
  EXPECT_TRUE(m1.rho2.empty());
  std::vector<double> neg(32, 1.0);
  neg[3] = -1.0;
  EXPECT_THROW(cgh::moments(neg, g1), cgh::ConfigError);
}

TEST(Moments, ThreeParticleChain) {
  const auto g = cgh::make_grid(6.0, 8, 1, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> phi2(g.size());
  for (auto& v : phi2) v = u(rng);
  const auto mom = cgh::moments(phi2, g);
  for (std::size_t xy = 0; xy < 64; ++xy) {
    double s = 0.0;
    for (std::size_t z = 0; z < 8; ++z) s += mom.rho3[xy * 8 + z] * g.spacing;
    EXPECT_NEAR(s, mom.rho2[xy], 1e-8 * mom.rho2[xy]);  // (N - 2) rho2
  }
  for (std::size_t x = 0; x < 8; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < 8; ++y) s += mom.rho2[x * 8 + y] * g.spacing;
    EXPECT_NEAR(s, 2.0 * mom.rho[x], 1e-8 * mom.rho[x]);
  }
}

TEST(Correlation, ZeroAndConstantPairField) {
  const auto g = cgh::make_grid(8.0, 32, 1, 2);
  const auto mom = product_moments(g, normalized_profile(g));
  auto c = cgh::correlation_fields(mom, std::vector<double>(32, 0.0));
  for (std::size_t x = 0; x < 32; ++x) {
    EXPECT_EQ(c.lambda[x], 0.0);
    EXPECT_EQ(c.kappa_sq[x], 0.0);
  }
  c = cgh::correlation_fields(mom, std::vector<double>(32, 1.7));
  for (std::size_t x = 0; x < 32; ++x) {
    EXPECT_NEAR(c.lambda[x], 1.7, 1e-12);
    EXPECT_NEAR(c.kappa_sq[x], 0.0, 1e-11);
  }
}

// phi^2 = [G(x1 - a) G(x2 - a) + G(x1 + a) G(x2 + a)], mu(x) = x: at x1 the partner sits near
// +a or -a, so mu(x2) has non-zero spread.
TEST(Correlation, MixtureHasPositiveVarianceAndFormsAgree) {
  const auto g = cgh::make_grid(12.0, 32, 1, 2);
  const double a = 1.5;
  std::vector<double> phi2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x1 = g.coordinate(g.axis_index(i, 0)), x2 = g.coordinate(g.axis_index(i, 1));
    phi2[i] = gauss(x1 - a, 1.0) * gauss(x2 - a, 1.0) + gauss(x1 + a, 1.0) * gauss(x2 + a, 1.0);
  }
  std::vector<double> mu(32);
  for (std::size_t x = 0; x < 32; ++x) mu[x] = g.coordinate(x);
  const auto mom = cgh::moments(phi2, g);
  const auto c = cgh::correlation_fields(mom, mu);

  cgh::PhaseStructure ps;
  ps.varphi.assign(2, cgh::Field(32, 0.0));
  ps.mu = {mu, mu};
  const auto d = cgh::correlation_fields_direct(phi2, ps, g);
  double kmax = 0.0;
  for (std::size_t x = 0; x < 32; ++x) {
    // Brute-force weighted variance of mu(x2) at fixed x1.
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t y = 0; y < 32; ++y) {
      const double p = phi2[x * 32 + y];
      w += p;
      m1 += p * mu[y];
      m2 += p * mu[y] * mu[y];
    }
    const double lam = m1 / w, var = m2 / w - lam * lam;
    EXPECT_NEAR(c.lambda[x], lam, 1e-10);
    EXPECT_NEAR(c.kappa_sq[x], var, 1e-9);
    EXPECT_NEAR(d.lambda[x], lam, 1e-10);
    EXPECT_NEAR(d.kappa_sq[x], var, 1e-9);
    EXPECT_GE(d.kappa_sq[x], 0.0);
    kmax = std::max(kmax, c.kappa_sq[x]);
  }
  EXPECT_GT(kmax, 0.1);
  EXPECT_LE(c.clamp_magnitude, 1e-8);
}

TEST(Velocity, UniformPhaseGradientAndOneDimension) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 32, 1, 1);
  const double m = 1.0, v = 3.0;
  std::vector<double> varphi(32), zero(32, 0.0), rho(32, 1.0), mu(32);
  for (std::size_t x = 0; x < 32; ++x) {
    varphi[x] = v * g.coordinate(x);
    mu[x] = std::sin(g.coordinate(x));
  }
  const auto f = cgh::velocity_and_vorticity(g, varphi, zero, mu, rho, m);
  for (std::size_t x = 0; x < 32; ++x) EXPECT_NEAR(f.u[0][x], v, 1e-12);
  ASSERT_EQ(f.vorticity.size(), 1u);
  for (double w : f.vorticity[0]) EXPECT_EQ(w, 0.0);
}

TEST(Velocity, RampsInTwoDimensions) {
  const auto g = cgh::make_grid(4.0, 16, 2, 1);
  std::vector<double> varphi(g.size(), 0.0), lambda(g.size()), mu(g.size()), rho(g.size(), 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    lambda[i] = g.coordinate(g.axis_index(i, 0));
    mu[i] = g.coordinate(g.axis_index(i, 1));
  }
  const auto f = cgh::velocity_and_vorticity(g, varphi, lambda, mu, rho, 1.0,
                                             cgh::DerivativeScheme::finite_difference);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(f.u[0][i], 0.0, 1e-12);
    EXPECT_NEAR(f.u[1][i], lambda[i], 1e-12);
    EXPECT_NEAR(f.vorticity[0][i], 1.0, 1e-12);
  }
}

TEST(Velocity, CurlOfVelocityIsVorticity) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 32, 2, 1);
  std::vector<double> varphi(g.size()), lambda(g.size()), mu(g.size()), rho(g.size(), 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(g.axis_index(i, 0)), y = g.coordinate(g.axis_index(i, 1));
    varphi[i] = std::sin(x + y);
    lambda[i] = std::cos(x) * std::sin(2.0 * y);
    mu[i] = std::sin(x - y);
  }
  const auto f = cgh::velocity_and_vorticity(g, varphi, lambda, mu, rho, 1.0);
  const auto dux = cgh::gradient(g, f.u[1]);
  const auto duy = cgh::gradient(g, f.u[0]);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(dux[0][i] - duy[1][i] - f.vorticity[0][i]));
  EXPECT_LT(err, 1e-10);
}

cgh::WaveFunction entangled_pair(const cgh::Grid& g, double strength) {
  auto w = cgh::make_wavefunction(g, Representation::position);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x1 = g.coordinate(g.axis_index(i, 0)), x2 = g.coordinate(g.axis_index(i, 1));
    const double S = (x1 + x2) + strength * std::sin(x1) * std::sin(x2);
    const double amp = gauss(x1, 1.2) * gauss(x2, 1.2) + 0.5 * gauss(x1 - 1.0, 0.8) * gauss(x2 + 1.0, 0.8) +
                       0.5 * gauss(x1 + 1.0, 0.8) * gauss(x2 - 1.0, 0.8);
    w.values[i] = std::polar(amp, S);
  }
  return w;
}

TEST(Extract, PairStateFieldsAndGaugeFlip) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 32, 1, 2);
  const auto w = entangled_pair(g, 0.3);
  const auto hf = cgh::extract_hydro(w, 1.0);
  EXPECT_LT(hf.fit_residual, 1e-6);
  double total = 0.0;
  for (double r : hf.rho) total += r * g.spacing;
  EXPECT_NEAR(total, 2.0 * w.norm_squared(), 1e-8 * total);
  for (double k : hf.kappa_sq) EXPECT_GE(k, 0.0);
  double kmax = 0.0;
  for (double k : hf.kappa_sq) kmax = std::max(kmax, k);
  EXPECT_GT(kmax, 1e-3);

  // Flip the sign of every pair field: the model phase and u are unchanged.
  auto flipped = hf.phase;
  for (auto& f : flipped.mu)
    for (auto& v : f) v = -v;
  std::vector<double> amp2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) amp2[i] = std::norm(w.values[i]);
  const auto corr = cgh::correlation_fields_direct(amp2, flipped, g, 1e-12);
  const auto flow = cgh::velocity_and_vorticity(g, flipped.varphi[0], corr.lambda, flipped.mu[0], hf.rho, 1.0,
                                                cgh::DerivativeScheme::spectral, hf.mask);
  for (std::size_t x = 0; x < 32; ++x) EXPECT_NEAR(flow.u[0][x], hf.u[0][x], 1e-10);

  // Symmetric state with identical pair fields: moment form and variance form coincide.
  const auto mom = cgh::moments(amp2, g);
  const auto cm = cgh::correlation_fields(mom, hf.mu, 1e-12);
  for (std::size_t x = 0; x < 32; ++x) {
    if (hf.mask[x]) continue;
    EXPECT_NEAR(cm.lambda[x], hf.lambda[x], 1e-6);
    EXPECT_NEAR(cm.kappa_sq[x], hf.kappa_sq[x], 1e-6);
  }
}

}  // namespace
