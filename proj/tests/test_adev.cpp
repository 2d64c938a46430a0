#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "kmf/adev.hpp"
#include "kmf/random.hpp"

namespace {

// Two-sample differences of adjacent, overlapping m-sample averages.
double brute_force(const std::vector<double>& x, std::size_t m) {
  double acc = 0.0;
  std::size_t terms = 0;
  for (std::size_t k = 0; k + 2 * m <= x.size(); ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      a += x[k + j];
      b += x[k + m + j];
    }
    const double d = (b - a) / static_cast<double>(m);
    acc += d * d;
    ++terms;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(terms)));
}

Eigen::Map<const Eigen::VectorXd> view(const std::vector<double>& x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
  kmf::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sigma * rng.normal();
  return x;
}

TEST(Adev, MatchesBruteForce) {
  auto x = white(2000, 1.0, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 1e3 + 1e-3 * static_cast<double>(i);
  const std::vector<double> taus = {1, 2, 3, 7, 50, 333, 666};
  const auto r = kmf::overlapping_adev(view(x), 1.0, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    EXPECT_NEAR(r.sigma[i] / brute_force(x, static_cast<std::size_t>(taus[i])), 1.0, 1e-12) << taus[i];
  }
}

TEST(Adev, WhiteNoiseLaw) {
  // A single record scatters by ~20 % at tau = n/10, so the law is checked on
  // the ensemble mean of the Allan variance.
  const double sigma = 0.5, fs = 10.0;
  const std::size_t n = 20000;
  const auto taus = kmf::default_tau_grid(n, fs, 0.1);
  std::vector<double> avar(taus.size(), 0.0);
  const int records = 100;
  for (int r = 0; r < records; ++r) {
    const auto x = white(n, sigma, 400 + r);
    const auto res = kmf::overlapping_adev(view(x), fs, taus);
    for (std::size_t i = 0; i < taus.size(); ++i) avar[i] += res.sigma[i] * res.sigma[i] / records;
  }
  for (std::size_t i = 0; i < taus.size() && taus[i] * fs <= n / 10.0; ++i) {
    EXPECT_NEAR(std::sqrt(avar[i]) / (sigma / std::sqrt(taus[i] * fs)), 1.0, 0.05) << taus[i];
  }

  const auto x = white(200000, sigma, 4);
  const auto fit = kmf::fit_white_noise(kmf::overlapping_adev(view(x), fs, kmf::default_tau_grid(x.size(), fs, 0.1)));
  EXPECT_NEAR(fit.slope, -0.5, 0.05);
  EXPECT_TRUE(fit.white_noise_consistent());
  EXPECT_NEAR(fit.level, sigma / std::sqrt(fs), 0.1 * sigma / std::sqrt(fs));
}

TEST(Adev, ConstantSeriesIsZero) {
  const std::vector<double> x(500, 3.25);
  const std::vector<double> taus = {1, 5, 50};
  const auto r = kmf::overlapping_adev(view(x), 1.0, taus);
  for (double s : r.sigma) EXPECT_EQ(s, 0.0);
  EXPECT_THROW(kmf::fit_white_noise(r), kmf::DomainError);
}

TEST(Adev, LinearDrift) {
  const double d = 2e-3, fs = 1.0;
  std::vector<double> x(10000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = d * static_cast<double>(i) / fs;
  const std::vector<double> taus = {1, 10, 100, 1000, 3000};
  const auto r = kmf::overlapping_adev(view(x), fs, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    EXPECT_NEAR(r.sigma[i] / (d * taus[i] / std::sqrt(2.0)), 1.0, 0.01);
    EXPECT_NEAR(r.sigma[i] / brute_force(x, static_cast<std::size_t>(taus[i])), 1.0, 1e-9);
  }
  const auto fit = kmf::fit_white_noise(r);
  EXPECT_NEAR(fit.slope, 1.0, 0.05);
  EXPECT_FALSE(fit.white_noise_consistent());
}

TEST(Adev, ExactPowerLawFit) {
  kmf::AdevResult r;
  for (double tau : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
    r.taus.push_back(tau);
    r.sigma.push_back(3e-3 / std::sqrt(tau));
    r.sigma_err.push_back(1e-4 / std::sqrt(tau));
    r.edf.push_back(10.0);
  }
  const auto fit = kmf::fit_white_noise(r);
  EXPECT_NEAR(fit.slope, -0.5, 1e-6);
  EXPECT_NEAR(fit.level, 3e-3, 1e-9);
}

TEST(Adev, Extrapolate) {
  EXPECT_NEAR(kmf::extrapolate(2.0, -0.5, 4.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(kmf::extrapolate(2.0, 0.0, 1e6), 2.0);
  EXPECT_THROW(kmf::extrapolate(2.0, -0.5, 0.0), kmf::DomainError);
}

TEST(Adev, ErrorsAndEdf) {
  const auto x = white(100, 1.0, 5);
  const std::vector<double> too_long = {40};
  EXPECT_THROW(kmf::overlapping_adev(view(x), 1.0, too_long), kmf::DomainError);
  const std::vector<double> fractional = {1.5};
  EXPECT_THROW(kmf::overlapping_adev(view(x), 1.0, fractional), kmf::DomainError);
  kmf::AdevResult three;
  three.taus = {1, 2, 3};
  three.sigma = {1, 1, 1};
  three.sigma_err = {0.1, 0.1, 0.1};
  EXPECT_THROW(kmf::fit_white_noise(three), kmf::DomainError);

  // m = 1 uses every first difference: edf close to the number of differences.
  EXPECT_GT(kmf::overlapping_adev_edf(10000, 1), 5000.0);
  EXPECT_GT(kmf::overlapping_adev_edf(10000, 10), kmf::overlapping_adev_edf(10000, 100));
  const std::vector<double> taus = {1, 10};
  const auto r = kmf::overlapping_adev(view(white(1000, 1.0, 6)), 1.0, taus);
  for (std::size_t i = 0; i < r.taus.size(); ++i) {
    EXPECT_NEAR(r.sigma_err[i], r.sigma[i] / std::sqrt(2 * r.edf[i]), 1e-15);
  }
  EXPECT_TRUE(r.white_noise_error_model);
}

TEST(Adev, TauGrid) {
  const auto g = kmf::default_tau_grid(36000, 10.0, 500.0);
  ASSERT_FALSE(g.empty());
  EXPECT_NEAR(g.front(), 500.0, 0.1);
  EXPECT_LE(g.back(), 3600.0 / 3 + 1e-9);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  for (double t : g) EXPECT_NEAR(t * 10.0, std::round(t * 10.0), 1e-9);
}

}  // namespace
