#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kmf/error.hpp"

namespace kmf {

/// Overlapping Allan deviation of a value series against averaging time.
struct AdevResult {
  std::vector<double> taus;
  std::vector<double> sigma;
  std::vector<double> sigma_err;
  std::vector<double> edf;
  /// Error bars assume white noise regardless of the data.
  bool white_noise_error_model = true;
};

struct PowerLawFit {
  double level = 0.0;  // sigma at tau = 1 s
  double slope = 0.0;

  bool white_noise_consistent() const { return slope >= -0.6 && slope <= -0.4; }
};

/// Equivalent degrees of freedom of an overlapping Allan variance estimate
/// for white (value-domain) noise, `n_values` samples at averaging factor m.
double overlapping_adev_edf(std::size_t n_values, std::size_t m);

/// Logarithmic tau grid, `per_decade` points per decade from `tau_min`,
/// rounded to whole samples and capped at duration / 3.
std::vector<double> default_tau_grid(std::size_t n_values, double fs, double tau_min = 0.0,
                                     int per_decade = 10);

namespace detail {
AdevResult overlapping_adev_impl(std::span<const double> values, double fs,
                                 std::span<const double> taus);
}

/// Overlapping two-sample deviation of averages of `values` (sampled at fs)
/// over each tau. Every tau must be a whole number of samples and at most a
/// third of the record.
template <typename Derived>
AdevResult overlapping_adev(const Eigen::DenseBase<Derived>& values, double fs,
                            std::span<const double> taus) {
  const Eigen::VectorXd v = values.derived().template cast<double>();
  return detail::overlapping_adev_impl(std::span<const double>(v.data(), v.size()), fs, taus);
}

/// Weighted least-squares line through (log tau, log sigma).
PowerLawFit fit_white_noise(const AdevResult& result);

inline double extrapolate(double level, double slope, double tau_total) {
  if (!(tau_total > 0)) throw DomainError("extrapolation time must be positive");
  return level * std::pow(tau_total, slope);
}

}  // namespace kmf
