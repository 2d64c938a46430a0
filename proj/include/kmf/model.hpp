#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "kmf/error.hpp"

namespace kmf {

template <typename Scalar = double>
struct PhysicalConstants {
  static constexpr Scalar c = Scalar(299792458);  // m/s, exact SI value
  Scalar g = Scalar(9.81);                        // m/s^2, local value

  void validate() const {
    if (!(g > 0) || !std::isfinite(static_cast<double>(g))) {
      throw DomainError("gravitational acceleration must be positive and finite");
    }
  }
};

/// Optical and acquisition parameters of the Mach-Zehnder interferometer.
/// Defaults describe the 50 km, 1550 nm, equal-height configuration.
struct InterferometerConfig {
  double arm_length_m = 5.0e4;
  double height_diff_m = 0.0;
  double wavelength_m = 1.55e-6;
  double refractive_index = 1.46;
  double visibility = 0.98;
  double lock_offset_rad = std::numbers::pi / 2;
  double detected_pair_rate_hz = 1.066e5;  // heralded coincidences, both ports
  double bin_rate_hz = 10.0;

  void validate() const;
};

struct LossEntry {
  std::string label;
  double loss_db = 0.0;
  double uncertainty_db = 0.0;
};

struct LossBudget {
  std::vector<LossEntry> entries;
};

struct LossTotals {
  double total_db = 0.0;
  double total_uncertainty_db = 0.0;   // root-sum-square of entries
  double linear_uncertainty_db = 0.0;  // plain sum of entries (worst case)
  double transmission = 1.0;
};

/// A sinusoidal phase modulation: value(t) = sqrt(2) * rms * sin(2 pi f t + phase).
struct SignalSpec {
  double frequency_hz = 0.0;
  double rms_amplitude_rad = 0.0;
  double phase_rad = 0.0;

  void validate() const {
    if (!(frequency_hz > 0) || !(rms_amplitude_rad >= 0) || !std::isfinite(phase_rad)) {
      throw DomainError("signal needs frequency > 0, rms amplitude >= 0 and finite phase");
    }
  }
};

namespace detail {
template <typename Scalar>
void require_positive(Scalar v, const char* name) {
  if (!(v > 0) || !std::isfinite(static_cast<double>(v))) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}
}  // namespace detail

/// Phase difference accumulated between two fiber arms of length `arm_length`
/// whose heights differ by `height`: 2 pi n g h l / (lambda c^2).
template <typename Scalar>
Scalar gravitational_phase_shift(const PhysicalConstants<Scalar>& consts, Scalar index,
                                 Scalar height, Scalar arm_length, Scalar wavelength) {
  consts.validate();
  detail::require_positive(arm_length, "arm length");
  detail::require_positive(wavelength, "wavelength");
  if (!(index >= 1) || !std::isfinite(static_cast<double>(index))) {
    throw DomainError("refractive index must be >= 1");
  }
  if (!std::isfinite(static_cast<double>(height))) throw DomainError("height must be finite");
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  return two_pi * index * consts.g * height * arm_length /
         (wavelength * PhysicalConstants<Scalar>::c * PhysicalConstants<Scalar>::c);
}

/// Same quantity under the name used by the classical/quantum differential scheme.
double classical_phase_prediction(const InterferometerConfig& cfg,
                                  const PhysicalConstants<double>& consts = {});

/// Mean heralded counts at the two output ports for total count `total`:
/// N1,2 = N/2 (1 +- V cos phi). The pair always sums to `total`.
template <typename Scalar>
std::pair<Scalar, Scalar> expected_fringe_counts(Scalar total, Scalar visibility, Scalar phase) {
  if (!(total >= 0)) throw DomainError("total counts must be non-negative");
  if (!(visibility >= 0 && visibility <= 1)) throw DomainError("visibility must lie in [0, 1]");
  const Scalar half = total / Scalar(2);
  const Scalar swing = half * visibility * std::cos(phase);
  const Scalar n1 = half + swing;
  return {n1, total - n1};
}

/// One-sided ASD (rad/sqrt(Hz)) of the half-difference phase estimate at the
/// mid-fringe lock point for a detected pair rate `rate_hz`: sqrt(2) / (V sqrt(R)).
template <typename Scalar>
Scalar shot_noise_asd(Scalar rate_hz, Scalar visibility) {
  detail::require_positive(rate_hz, "detected pair rate");
  if (!(visibility > 0 && visibility <= 1)) throw DomainError("visibility must lie in (0, 1]");
  return std::sqrt(Scalar(2)) / (visibility * std::sqrt(rate_hz));
}

/// Converts a phase ASD to fractional optical path (travel time) ASD.
template <typename Scalar>
Scalar fractional_displacement_asd(Scalar phase_asd, Scalar wavelength, Scalar index,
                                   Scalar arm_length) {
  if (!(phase_asd >= 0)) throw DomainError("phase ASD must be non-negative");
  detail::require_positive(wavelength, "wavelength");
  detail::require_positive(index, "refractive index");
  detail::require_positive(arm_length, "arm length");
  return phase_asd * wavelength / (Scalar(2) * std::numbers::pi_v<Scalar> * index * arm_length);
}

LossTotals loss_budget_total(const LossBudget& budget);

/// The measured loss budget of the 50 km setup.
LossBudget reference_loss_budget();

/// Integration time after which the amplitude uncertainty asd/sqrt(T) drops to
/// signal/target_snr.
template <typename Scalar>
Scalar snr_integration_time(Scalar signal_rms, Scalar asd, Scalar target_snr) {
  detail::require_positive(signal_rms, "signal amplitude");
  detail::require_positive(asd, "ASD");
  if (!(target_snr >= 0)) throw DomainError("target SNR must be non-negative");
  const Scalar r = target_snr * asd / signal_rms;
  return r * r;
}

/// RMS of a flat spectrum `asd` integrated over [f_lo, f_hi].
double band_integrated_rms(double asd, double f_lo_hz, double f_hi_hz);

/// Uncertainty of an amplitude averaged over `duration_s` under a flat ASD.
double averaged_amplitude_uncertainty(double asd, double duration_s);

}  // namespace kmf
