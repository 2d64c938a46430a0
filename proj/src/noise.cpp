#include "kmf/noise.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "fft.hpp"
#include "kmf/error.hpp"
#include "kmf/random.hpp"

namespace kmf {

void NoiseComponent::validate() const {
  if (!(level >= 0) || !std::isfinite(level)) throw DomainError("noise level must be >= 0");
  switch (kind) {
    case NoiseKind::white:
      break;
    case NoiseKind::power_law:
      if (!(exponent_alpha >= -4 && exponent_alpha <= 0)) {
        throw DomainError("power-law exponent must lie in [-4, 0]");
      }
      break;
    case NoiseKind::harmonic_comb:
      if (n_harmonics < 1) throw DomainError("harmonic comb needs at least one harmonic");
      [[fallthrough]];
    case NoiseKind::tone:
      if (!(frequency_hz > 0)) throw DomainError("tone frequency must be positive");
      if (!std::isfinite(phase_rad)) throw DomainError("tone phase must be finite");
      break;
  }
}

NoiseComponent NoiseComponent::white(double asd) {
  return {NoiseKind::white, asd, 0.0, 0.0, 1, 0.0};
}

NoiseComponent NoiseComponent::power_law(double asd_at_1hz, double alpha) {
  return {NoiseKind::power_law, asd_at_1hz, alpha, 0.0, 1, 0.0};
}

NoiseComponent NoiseComponent::tone(double frequency_hz, double rms, double phase_rad) {
  return {NoiseKind::tone, rms, 0.0, frequency_hz, 1, phase_rad};
}

NoiseComponent NoiseComponent::harmonic_comb(double fundamental_hz, double rms_each,
                                             int n_harmonics) {
  return {NoiseKind::harmonic_comb, rms_each, 0.0, fundamental_hz, n_harmonics, 0.0};
}

std::uint64_t component_seed(std::uint64_t model_seed, std::size_t index) {
  return model_seed ^ mix_seed(static_cast<std::uint64_t>(index));
}

std::size_t fft_friendly_size(std::size_t n) {
  const auto smooth = [](std::size_t m) {
    for (std::size_t p : {2u, 3u, 5u}) {
      while (m % p == 0) m /= p;
    }
    return m == 1;
  };
  std::size_t m = n < 4 ? 4 : n;
  while (m % 4 != 0 || !smooth(m)) ++m;
  return m;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void add_sinusoid(Eigen::VectorXd& out, double f, double rms, double phase, double fs,
                  double t_origin) {
  const double amp = std::sqrt(2.0) * rms;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double t = t_origin + static_cast<double>(k) / fs;
    out[k] += amp * std::sin(kTwoPi * f * t + phase);
  }
}

Eigen::VectorXd shaped_noise(const NoiseComponent& c, std::uint64_t seed, double fs,
                             std::size_t n) {
  const std::size_t len = fft_friendly_size(n);
  Rng rng(seed);
  std::vector<double> white(len);
  for (auto& w : white) w = rng.normal();

  auto spectrum = detail::real_fft(white.data(), len);
  // Unit-variance white noise has one-sided PSD 2/fs; rescale to level^2 f^alpha.
  const double base = c.level * std::sqrt(fs / 2.0);
  spectrum[0] = 0.0;
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(len);
    spectrum[k] *= base * std::pow(f, c.exponent_alpha / 2.0);
  }
  Eigen::VectorXd full = detail::inverse_real_fft(spectrum, len);
  return full.head(static_cast<Eigen::Index>(n));
}

}  // namespace

Eigen::VectorXd synthesize_component(const NoiseComponent& c, std::uint64_t seed, double fs,
                                     std::size_t n, double t_origin) {
  c.validate();
  if (!(fs > 0)) throw DomainError("sample rate must be positive");
  if (n < 2) throw DomainError("need at least 2 samples");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (c.level == 0.0) return out;

  switch (c.kind) {
    case NoiseKind::white: {
      Rng rng(seed);
      const double sigma = c.level * std::sqrt(fs / 2.0);
      for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = sigma * rng.normal();
      break;
    }
    case NoiseKind::power_law:
      out = shaped_noise(c, seed, fs, n);
      break;
    case NoiseKind::tone:
      add_sinusoid(out, c.frequency_hz, c.level, c.phase_rad, fs, t_origin);
      break;
    case NoiseKind::harmonic_comb:
      // Harmonics at or above Nyquist would alias and are dropped.
      for (int h = 1; h <= c.n_harmonics; ++h) {
        const double f = h * c.frequency_hz;
        if (f >= fs / 2.0) break;
        add_sinusoid(out, f, c.level, h * c.phase_rad, fs, t_origin);
      }
      break;
  }
  return out;
}

Eigen::VectorXd synthesize(const NoiseModel& model, double fs, std::size_t n, double t_origin) {
  if (!(fs > 0)) throw DomainError("sample rate must be positive");
  if (n < 2) throw DomainError("need at least 2 samples");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < model.components.size(); ++i) {
    out += synthesize_component(model.components[i], component_seed(model.seed, i), fs, n,
                                t_origin);
  }
  return out;
}

NoiseModel default_paper_model(std::uint64_t seed) {
  // 6e-4 rad/sqrt(Hz) at 0.1 Hz with ASD ~ 1/f means 6e-5 at 1 Hz.
  return NoiseModel{{NoiseComponent::power_law(6e-5, -2.0),
                     NoiseComponent::harmonic_comb(1.0, 2e-3, 5)},
                    seed};
}

}  // namespace kmf
