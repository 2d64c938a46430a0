#pragma once

#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "kmf/model.hpp"
#include "kmf/noise.hpp"

namespace kmf {

enum class LoopMode {
  /// Classical noise passes a first-order high-pass at `unity_gain_hz`.
  effective,
  /// Discrete PI loop with a fast frequency actuator and a slow stretcher.
  explicit_pi,
  /// The noise model already is the closed-loop residual; nothing is removed.
  bypass,
};

struct LockLoopConfig {
  LoopMode mode = LoopMode::effective;
  double unity_gain_hz = 10.0;

  // explicit_pi only
  double ctrl_rate_hz = 100.0;
  double kp = 2 * std::numbers::pi * 5.0;            // 1/s, sets a 5 Hz unity gain
  double ki_fast = kp * 2 * std::numbers::pi * 0.5;  // 1/s^2, PI corner at 0.5 Hz
  double ki_slow = 2 * std::numbers::pi * 0.05;      // 1/s, offload rate to the stretcher
  double fast_range_rad = 3.0;
  double slow_bandwidth_hz = 0.5;

  void validate(double bin_rate_hz) const;
};

enum class DriftKind { constant, linear, bounded_random_walk };

struct VisibilityDrift {
  DriftKind kind = DriftKind::linear;
  double v_start = 0.98;
  double v_end = 0.92;
  double walk_step_per_hour = 0.005;

  void validate() const;
};

struct Scenario {
  InterferometerConfig cfg;
  NoiseModel noise;
  LockLoopConfig loop;
  VisibilityDrift drift;
  std::vector<SignalSpec> injections;
  double duration_s = 600.0;
  double t0_s = 0.0;
  std::uint64_t seed = 1;

  std::size_t n_bins() const;
  void validate() const;
};

/// Heralded counts per bin at both output ports.
/// Bin k covers [t0 + k/fs, t0 + (k+1)/fs).
struct CountSeries {
  double bin_rate_hz = 10.0;
  double t0_s = 0.0;
  std::vector<std::uint32_t> n1;
  std::vector<std::uint32_t> n2;
  std::shared_ptr<const Scenario> ground_truth;

  std::size_t size() const { return n1.size(); }
  double bin_center(std::size_t k) const { return t0_s + (static_cast<double>(k) + 0.5) / bin_rate_hz; }
  void validate() const;
};

/// Value of all injections at time t.
double injection_value(const std::vector<SignalSpec>& injections, double t);

/// Interferometer phase deviation from the lock point, one value per bin
/// (sampled at bin centers, or averaged over the bin in explicit mode).
Eigen::VectorXd residual_phase(const Scenario& scenario);

/// First-order high-pass |H| = (f/fc) / sqrt(1 + (f/fc)^2) applied in the
/// frequency domain; the DC bin is removed. Lengths with large prime factors
/// are zero-padded to the next FFT-friendly size.
Eigen::VectorXd first_order_highpass(const Eigen::VectorXd& x, double fs, double corner_hz);

/// Visibility at the center of every bin.
Eigen::VectorXd visibility_profile(const VisibilityDrift& drift, double bin_rate_hz,
                                   std::size_t n_bins, std::uint64_t seed);

/// Poisson photon detection at both ports given the phase deviation per bin.
CountSeries detect_photons(const Eigen::VectorXd& phase, const InterferometerConfig& cfg,
                           const VisibilityDrift& drift, std::uint64_t seed, double t0_s = 0.0);

/// residual_phase followed by detect_photons, with the scenario attached.
CountSeries run_experiment(const Scenario& scenario);

/// Consecutive independent runs of `base`, one per entry of `durations_s`,
/// with continuous time axis and independent seeds.
std::vector<CountSeries> run_stitched(const Scenario& base, const std::vector<double>& durations_s);

}  // namespace kmf
