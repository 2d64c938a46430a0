#include "kmf/model.hpp"

#include <cmath>

namespace kmf {

void InterferometerConfig::validate() const {
  const auto positive = [](double v) { return v > 0 && std::isfinite(v); };
  if (!positive(arm_length_m)) throw DomainError("arm_length_m must be positive");
  if (!positive(wavelength_m)) throw DomainError("wavelength_m must be positive");
  if (!(refractive_index >= 1) || !std::isfinite(refractive_index)) {
    throw DomainError("refractive_index must be >= 1");
  }
  if (!(visibility >= 0 && visibility <= 1)) throw DomainError("visibility must lie in [0, 1]");
  if (!(detected_pair_rate_hz >= 0) || !std::isfinite(detected_pair_rate_hz)) {
    throw DomainError("detected_pair_rate_hz must be non-negative");
  }
  if (!positive(bin_rate_hz)) throw DomainError("bin_rate_hz must be positive");
  if (!std::isfinite(height_diff_m) || !std::isfinite(lock_offset_rad)) {
    throw DomainError("height and lock offset must be finite");
  }
}

double classical_phase_prediction(const InterferometerConfig& cfg,
                                  const PhysicalConstants<double>& consts) {
  return gravitational_phase_shift(consts, cfg.refractive_index, cfg.height_diff_m,
                                   cfg.arm_length_m, cfg.wavelength_m);
}

LossTotals loss_budget_total(const LossBudget& budget) {
  LossTotals t;
  double var = 0.0;
  for (const auto& e : budget.entries) {
    if (!(e.loss_db >= 0) || !std::isfinite(e.loss_db)) {
      throw DomainError("loss entry '" + e.label + "' must be a non-negative dB value");
    }
    if (!(e.uncertainty_db >= 0)) {
      throw DomainError("uncertainty of '" + e.label + "' must be non-negative");
    }
    t.total_db += e.loss_db;
    t.linear_uncertainty_db += e.uncertainty_db;
    var += e.uncertainty_db * e.uncertainty_db;
  }
  t.total_uncertainty_db = std::sqrt(var);
  t.transmission = std::pow(10.0, -t.total_db / 10.0);
  return t;
}

LossBudget reference_loss_budget() {
  return LossBudget{{
      {"Fiber spool", 9.75, 0.01},
      {"AOM", 2.35, 0.02},
      {"DWDMs", 1.60, 0.02},
      {"BSs", 0.09, 0.01},
      {"Fiber connections", 1.00, 0.02},
      {"SNSPD efficiency", 0.20, 0.02},
  }};
}

double band_integrated_rms(double asd, double f_lo_hz, double f_hi_hz) {
  if (!(asd >= 0) || !(f_lo_hz >= 0) || !(f_hi_hz > f_lo_hz)) {
    throw DomainError("band_integrated_rms needs asd >= 0 and 0 <= f_lo < f_hi");
  }
  return asd * std::sqrt(f_hi_hz - f_lo_hz);
}

double averaged_amplitude_uncertainty(double asd, double duration_s) {
  if (!(asd >= 0) || !(duration_s > 0)) {
    throw DomainError("averaged_amplitude_uncertainty needs asd >= 0 and duration > 0");
  }
  return asd / std::sqrt(duration_s);
}

}  // namespace kmf
