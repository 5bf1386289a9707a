#include <cgh/grid.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace {

using cgh::Complex;

std::vector<Complex> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<Complex> v(n);
  for (auto& x : v) x = {d(rng), d(rng)};
  return v;
}

// a_k = M^-r sum_x a(x) exp(-i k.x), x_j = -L/2 + j h, evaluated term by term.
std::vector<Complex> direct_dft(const cgh::Grid& g, const std::vector<Complex>& a) {
  const int r = g.rank();
  std::vector<Complex> out(a.size());
  for (std::size_t kf = 0; kf < a.size(); ++kf) {
    Complex s{};
    for (std::size_t xf = 0; xf < a.size(); ++xf) {
      double phase = 0.0;
      for (int ax = 0; ax < r; ++ax)
        phase += g.wavenumber(g.axis_index(kf, ax)) * g.coordinate(g.axis_index(xf, ax));
      s += a[xf] * std::polar(1.0, -phase);
    }
    out[kf] = s / static_cast<double>(a.size());
  }
  return out;
}

TEST(Grid, SpacingAndCoordinates) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 8, 1, 1);
  EXPECT_DOUBLE_EQ(g.spacing, 2.0 * std::numbers::pi / 8.0);
  EXPECT_DOUBLE_EQ(g.coordinate(4), 0.0);
  EXPECT_DOUBLE_EQ(g.coordinate(0), -std::numbers::pi);
  EXPECT_EQ(g.mode_number(3), 3);
  EXPECT_EQ(g.mode_number(4), -4);
  EXPECT_EQ(g.mode_number(7), -1);
  const auto k = g.wavenumbers();
  EXPECT_DOUBLE_EQ(k.front(), -4.0);
  EXPECT_DOUBLE_EQ(k.back(), 3.0);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(cgh::make_grid(1.0, 6, 1, 1), cgh::ConfigError);
  EXPECT_THROW(cgh::make_grid(1.0, 8, 4, 1), cgh::ConfigError);
  EXPECT_THROW(cgh::make_grid(1.0, 8, 1, 0), cgh::ConfigError);
  EXPECT_THROW(cgh::make_grid(-1.0, 8, 1, 1), cgh::ConfigError);
  try {
    cgh::make_grid(1.0, 256, 3, 3);
    FAIL();
  } catch (const cgh::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("memory budget"), std::string::npos);
  }
  EXPECT_NO_THROW(cgh::make_grid(1.0, 64, 1, 3));
}

TEST(Grid, ParticleIndexDigits) {
  const auto g = cgh::make_grid(1.0, 4, 2, 2);
  // axes: (p0 x, p0 y, p1 x, p1 y), flat = ((a*4 + b)*4 + c)*4 + d
  const std::size_t flat = ((1 * 4 + 2) * 4 + 3) * 4 + 0;
  EXPECT_EQ(g.particle_index(flat, 0), 1u * 4 + 2);
  EXPECT_EQ(g.particle_index(flat, 1), 3u * 4 + 0);
  EXPECT_EQ(g.axis_index(flat, 2), 3u);
}

TEST(Grid, ForwardTransformMatchesDirectSum) {
  for (auto [d, n] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
    const auto g = cgh::make_grid(3.7, 8, d, n);
    auto w = cgh::make_wavefunction(g, cgh::Representation::position);
    w.values = random_values(g.size(), 7);
    const auto s = cgh::to_spectral(w);
    const auto oracle = direct_dft(g, w.values);
    double err = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) err = std::max(err, std::abs(s.values[i] - oracle[i]));
    EXPECT_LT(err, 1e-12) << "d=" << d << " N=" << n;
  }
}

TEST(Grid, RoundTripAndParseval) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 2);
    const int n = 1 + static_cast<int>(rng() % 2);
    const std::size_t m = std::size_t{4} << (rng() % 3);
    const double L = 1.0 + static_cast<double>(rng() % 100) / 10.0;
    const auto g = cgh::make_grid(L, m, d, n);
    auto w = cgh::make_wavefunction(g, cgh::Representation::position);
    w.values = random_values(g.size(), static_cast<unsigned>(trial));
    const auto s = cgh::to_spectral(w);
    const auto back = cgh::to_position(s);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      err = std::max(err, std::abs(back.values[i] - w.values[i]));
      scale = std::max(scale, std::abs(w.values[i]));
    }
    EXPECT_LT(err, 1e-12 * scale);
    EXPECT_NEAR(s.norm_squared(), w.norm_squared(), 1e-12 * w.norm_squared());
  }
}

TEST(Grid, PlaneWaveLandsOnItsMode) {
  const auto g = cgh::make_grid(5.0, 16, 1, 1);
  auto w = cgh::make_wavefunction(g, cgh::Representation::position);
  for (std::size_t j = 0; j < 16; ++j) w.values[j] = std::polar(1.0, g.wavenumber(3) * g.coordinate(j));
  const auto s = cgh::to_spectral(w);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(s.values[i]), i == 3 ? 1.0 : 0.0, 1e-13);
}

TEST(Grid, RepresentationMisuse) {
  const auto g = cgh::make_grid(1.0, 8, 1, 1);
  const auto p = cgh::make_wavefunction(g, cgh::Representation::position);
  EXPECT_THROW(cgh::to_position(p), cgh::ConfigError);
  EXPECT_THROW(cgh::to_spectral(cgh::to_spectral(p)), cgh::ConfigError);
}

TEST(Grid, Dispersion) {
  const auto g = cgh::make_grid(2.0 * std::numbers::pi, 8, 1, 2);
  const auto om = cgh::dispersion(g, 0.5);
  // k = (2, -1): omega = (4 + 1) / (2 * 0.5)
  EXPECT_DOUBLE_EQ(om.values[2 * 8 + 7], 5.0);
  EXPECT_DOUBLE_EQ(om.values[0], 0.0);
  EXPECT_THROW(cgh::dispersion(g, 0.0), cgh::ConfigError);
}

}  // namespace
