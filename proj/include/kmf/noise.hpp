#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace kmf {

enum class NoiseKind { white, power_law, tone, harmonic_comb };

/// One term of a phase-noise budget.
///
/// `level` is an ASD in rad/sqrt(Hz) referenced at 1 Hz for white and
/// power-law terms, and an RMS amplitude in rad for tones and for each
/// harmonic of a comb. A power-law term has ASD = level * f^(alpha/2).
struct NoiseComponent {
  NoiseKind kind = NoiseKind::white;
  double level = 0.0;
  double exponent_alpha = 0.0;
  double frequency_hz = 0.0;
  int n_harmonics = 1;
  double phase_rad = 0.0;

  void validate() const;

  static NoiseComponent white(double asd);
  static NoiseComponent power_law(double asd_at_1hz, double alpha);
  static NoiseComponent tone(double frequency_hz, double rms, double phase_rad = 0.0);
  static NoiseComponent harmonic_comb(double fundamental_hz, double rms_each, int n_harmonics);
};

struct NoiseModel {
  std::vector<NoiseComponent> components;
  std::uint64_t seed = 0;
};

/// Seed used for component `index` of a model seeded with `model_seed`.
std::uint64_t component_seed(std::uint64_t model_seed, std::size_t index);

/// Realization of a single component, sampled at t_k = t_origin + k / fs.
Eigen::VectorXd synthesize_component(const NoiseComponent& component, std::uint64_t seed,
                                     double fs, std::size_t n_samples, double t_origin = 0.0);

/// Sum of all components of `model`, summed in component order.
Eigen::VectorXd synthesize(const NoiseModel& model, double fs, std::size_t n_samples,
                           double t_origin = 0.0);

/// Classical residual of the 50 km interferometer: random-walk phase
/// (alpha = -2) anchored at 6e-4 rad/sqrt(Hz) at 0.1 Hz, plus the 1 Hz
/// compressor comb (5 harmonics, 2e-3 rad RMS each).
NoiseModel default_paper_model(std::uint64_t seed);

/// Smallest length >= n whose only prime factors are 2, 3 and 5.
std::size_t fft_friendly_size(std::size_t n);

}  // namespace kmf
