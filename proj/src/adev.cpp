#include "kmf/adev.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace kmf {

double overlapping_adev_edf(std::size_t n_values, std::size_t m) {
  // White frequency-noise approximation; the value series plays the role of
  // fractional frequency, so there are n_values + 1 phase points.
  const double N = static_cast<double>(n_values) + 1.0;
  const double md = static_cast<double>(m);
  const double edf = (3.0 * (N - 1.0) / (2.0 * md) - 2.0 * (N - 2.0) / N) *
                     (4.0 * md * md) / (4.0 * md * md + 5.0);
  return std::max(1.0, edf);
}

std::vector<double> default_tau_grid(std::size_t n_values, double fs, double tau_min,
                                     int per_decade) {
  if (!(fs > 0) || per_decade < 1) throw DomainError("tau grid needs fs > 0 and per_decade >= 1");
  const std::size_t m_max = n_values / 3;
  const auto m_min = static_cast<std::size_t>(std::max(1.0, std::ceil(tau_min * fs - 1e-9)));
  if (m_max < 1 || m_min > m_max) {
    std::ostringstream msg;
    msg << "record of " << n_values << " samples is too short: largest usable tau is "
        << static_cast<double>(m_max) / fs << " s";
    throw DomainError(msg.str());
  }
  std::vector<double> taus;
  std::size_t last = 0;
  for (int i = 0;; ++i) {
    const double m_real = static_cast<double>(m_min) * std::pow(10.0, static_cast<double>(i) / per_decade);
    const auto m = static_cast<std::size_t>(std::llround(m_real));
    if (m > m_max) break;
    if (m != last) taus.push_back(static_cast<double>(m) / fs);
    last = m;
  }
  return taus;
}

namespace detail {

AdevResult overlapping_adev_impl(std::span<const double> values, double fs,
                                 std::span<const double> taus) {
  if (!(fs > 0)) throw DomainError("sample rate must be positive");
  const std::size_t n = values.size();
  const std::size_t m_max = n / 3;
  if (m_max < 1) {
    throw DomainError("series of " + std::to_string(n) + " samples is too short for any tau");
  }

  // Prefix sums of the de-meaned series; ADEV is offset invariant and this
  // keeps the running sum small.
  long double mean = 0.0L;
  for (double v : values) mean += v;
  mean /= static_cast<long double>(n);
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + (values[k] - mean);

  AdevResult r;
  double prev_tau = 0.0;
  for (double tau : taus) {
    const double m_real = tau * fs;
    const auto m = static_cast<std::size_t>(std::llround(m_real));
    if (m < 1 || std::fabs(m_real - static_cast<double>(m)) > 1e-9 * std::max(1.0, m_real)) {
      throw DomainError("tau = " + std::to_string(tau) + " s is not a whole number of samples");
    }
    if (m > m_max) {
      std::ostringstream msg;
      msg << "tau = " << tau << " s exceeds a third of the record; largest usable tau is "
          << static_cast<double>(m_max) / fs << " s";
      throw DomainError(msg.str());
    }
    if (!(tau > prev_tau)) throw DomainError("taus must be strictly increasing");
    prev_tau = tau;

    const std::size_t terms = n - 2 * m + 1;
    long double acc = 0.0L;
    for (std::size_t j = 0; j < terms; ++j) {
      const long double d = (prefix[j + 2 * m] - 2.0L * prefix[j + m] + prefix[j]) / m;
      acc += d * d;
    }
    const double sigma = static_cast<double>(std::sqrt(acc / (2.0L * terms)));
    const double edf = overlapping_adev_edf(n, m);
    r.taus.push_back(static_cast<double>(m) / fs);
    r.sigma.push_back(sigma);
    r.edf.push_back(edf);
    r.sigma_err.push_back(sigma / std::sqrt(2.0 * edf));
  }
  return r;
}

}  // namespace detail

PowerLawFit fit_white_noise(const AdevResult& result) {
  const std::size_t n = result.taus.size();
  if (n < 4) throw DomainError("power-law fit needs at least 4 tau points");
  Eigen::MatrixX2d design(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    if (!(result.sigma[k] > 0)) {
      throw DomainError("power-law fit: sigma is zero at tau = " + std::to_string(result.taus[k]));
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::log(result.taus[k]);
    y[i] = std::log(result.sigma[k]);
    // Var(log sigma) ~ (sigma_err / sigma)^2.
    const double rel = result.sigma_err[k] / result.sigma[k];
    w[i] = rel > 0 ? 1.0 / (rel * rel) : 1.0;
  }
  const Eigen::Matrix2d normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::Vector2d rhs = design.transpose() * w.asDiagonal() * y;
  const Eigen::Vector2d beta = normal.ldlt().solve(rhs);
  return PowerLawFit{std::exp(beta[0]), beta[1]};
}

}  // namespace kmf
