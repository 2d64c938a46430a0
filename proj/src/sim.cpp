#include "kmf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "kmf/error.hpp"
#include "kmf/random.hpp"

namespace kmf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sub-seed tags.
constexpr std::uint64_t kNoiseTag = 1;
constexpr std::uint64_t kPhotonTag = 2;
constexpr std::uint64_t kDriftTag = 3;
constexpr std::uint64_t kRunTag = 100;

constexpr double kWalkFloor = 0.85;
constexpr double kWalkCeiling = 0.99;
constexpr double kRunawayRad = 10.0;

}  // namespace

void LockLoopConfig::validate(double bin_rate_hz) const {
  if (!(unity_gain_hz > 0)) throw DomainError("loop unity_gain_hz must be positive");
  if (mode != LoopMode::explicit_pi) return;
  if (!(ctrl_rate_hz >= 10.0 * bin_rate_hz)) {
    throw DomainError("loop ctrl_rate_hz must be at least 10x the bin rate");
  }
  const double ratio = ctrl_rate_hz / bin_rate_hz;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw DomainError("loop ctrl_rate_hz must be an integer multiple of the bin rate");
  }
  if (!(kp >= 0 && ki_fast >= 0 && ki_slow >= 0)) throw DomainError("loop gains must be >= 0");
  if (!(fast_range_rad > 0) || !(slow_bandwidth_hz > 0)) {
    throw DomainError("fast_range_rad and slow_bandwidth_hz must be positive");
  }
}

void VisibilityDrift::validate() const {
  if (!(v_end > 0 && v_end <= v_start && v_start <= 1)) {
    throw DomainError("visibility drift needs 0 < v_end <= v_start <= 1");
  }
  if (!(walk_step_per_hour >= 0)) throw DomainError("walk_step_per_hour must be >= 0");
}

std::size_t Scenario::n_bins() const {
  const double bins = duration_s * cfg.bin_rate_hz;
  return static_cast<std::size_t>(std::llround(bins));
}

void Scenario::validate() const {
  cfg.validate();
  loop.validate(cfg.bin_rate_hz);
  drift.validate();
  for (const auto& c : noise.components) c.validate();
  for (const auto& s : injections) s.validate();
  const double bins = duration_s * cfg.bin_rate_hz;
  if (!(duration_s > 0) || std::fabs(bins - std::round(bins)) > 1e-6 * std::max(1.0, bins) ||
      std::round(bins) < 16) {
    throw DomainError("duration_s * bin_rate_hz must be an integer number of bins >= 16");
  }
  if (!std::isfinite(t0_s)) throw DomainError("t0_s must be finite");
}

void CountSeries::validate() const {
  if (n1.size() != n2.size()) throw DomainError("port count series differ in length");
  if (!(bin_rate_hz > 0)) throw DomainError("bin rate must be positive");
}

double injection_value(const std::vector<SignalSpec>& injections, double t) {
  double v = 0.0;
  for (const auto& s : injections) {
    v += std::sqrt(2.0) * s.rms_amplitude_rad * std::sin(kTwoPi * s.frequency_hz * t + s.phase_rad);
  }
  return v;
}

Eigen::VectorXd first_order_highpass(const Eigen::VectorXd& x, double fs, double corner_hz) {
  const auto n_in = static_cast<std::size_t>(x.size());
  if (n_in == 0) return x;
  // Awkward lengths are zero-padded to an FFT-friendly size.
  const std::size_t n = fft_friendly_size(n_in);
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  padded.head(x.size()) = x;
  auto spectrum = detail::real_fft(padded.data(), n);
  spectrum[0] = 0.0;
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double r = static_cast<double>(k) * fs / static_cast<double>(n) / corner_hz;
    // Zero-phase magnitude response; keeps the series real.
    spectrum[k] *= r / std::sqrt(1.0 + r * r);
  }
  return detail::inverse_real_fft(spectrum, n).head(x.size());
}

namespace {

Eigen::VectorXd explicit_loop(const Scenario& s, const NoiseModel& noise) {
  const auto& loop = s.loop;
  const double fs = s.cfg.bin_rate_hz;
  const auto ratio = static_cast<std::size_t>(std::llround(loop.ctrl_rate_hz / fs));
  const std::size_t n_bins = s.n_bins();
  const std::size_t n_ctrl = n_bins * ratio;
  const double dt = 1.0 / loop.ctrl_rate_hz;

  const Eigen::VectorXd disturbance =
      synthesize(noise, loop.ctrl_rate_hz, n_ctrl, s.t0_s + 0.5 * dt);

  const double slow_alpha = 1.0 - std::exp(-kTwoPi * loop.slow_bandwidth_hz * dt);
  const double v = s.cfg.visibility;
  double fast = 0.0, slow = 0.0, slow_cmd = 0.0, integral = 0.0;

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bins));
  for (std::size_t j = 0; j < n_ctrl; ++j) {
    const double t = s.t0_s + (static_cast<double>(j) + 0.5) * dt;
    const double phi = disturbance[static_cast<Eigen::Index>(j)] + fast + slow;
    if (!(std::fabs(phi) < kRunawayRad)) {
      std::ostringstream msg;
      msg << "lock loop diverged (|phase| > " << kRunawayRad << " rad at t = " << t
          << " s) with kp = " << loop.kp << ", ki_fast = " << loop.ki_fast
          << ", ki_slow = " << loop.ki_slow << ", ctrl_rate_hz = " << loop.ctrl_rate_hz;
      throw SimulationError(msg.str());
    }
    out[static_cast<Eigen::Index>(j / ratio)] += phi;

    // Homodyne error relative to the (dithered) set point.
    const double err = v * std::sin(phi - injection_value(s.injections, t));
    integral += err * dt;
    // Fast actuator: frequency shift, integrates into phase.
    fast -= (loop.kp * err + loop.ki_fast * integral) * dt;
    fast = std::clamp(fast, -loop.fast_range_rad, loop.fast_range_rad);
    // Slow actuator offloads the fast one through its limited bandwidth.
    slow_cmd += loop.ki_slow * fast * dt;
    slow += (slow_cmd - slow) * slow_alpha;
  }
  out /= static_cast<double>(ratio);
  return out;
}

}  // namespace

Eigen::VectorXd residual_phase(const Scenario& scenario) {
  scenario.validate();
  const double fs = scenario.cfg.bin_rate_hz;
  const std::size_t n = scenario.n_bins();

  NoiseModel noise = scenario.noise;
  noise.seed = derive_seed(scenario.seed, kNoiseTag);

  if (scenario.loop.mode == LoopMode::explicit_pi) return explicit_loop(scenario, noise);

  const double first_center = scenario.t0_s + 0.5 / fs;
  Eigen::VectorXd phase;
  if (scenario.loop.mode == LoopMode::effective && !noise.components.empty()) {
    // Filter a realization of FFT-friendly length so the filter sees no padding.
    const Eigen::VectorXd raw = synthesize(noise, fs, fft_friendly_size(n), first_center);
    phase = first_order_highpass(raw, fs, scenario.loop.unity_gain_hz).head(static_cast<Eigen::Index>(n));
  } else {
    phase = synthesize(noise, fs, n, first_center);
  }
  // Injections ride on the set point and are not suppressed.
  for (std::size_t k = 0; k < n; ++k) {
    phase[static_cast<Eigen::Index>(k)] +=
        injection_value(scenario.injections, first_center + static_cast<double>(k) / fs);
  }
  return phase;
}

Eigen::VectorXd visibility_profile(const VisibilityDrift& drift, double bin_rate_hz,
                                   std::size_t n_bins, std::uint64_t seed) {
  drift.validate();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n_bins));
  const double duration = static_cast<double>(n_bins) / bin_rate_hz;
  switch (drift.kind) {
    case DriftKind::constant:
      v.setConstant(drift.v_start);
      break;
    case DriftKind::linear:
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double frac = (static_cast<double>(k) + 0.5) / bin_rate_hz / duration;
        v[static_cast<Eigen::Index>(k)] = drift.v_start + (drift.v_end - drift.v_start) * frac;
      }
      break;
    case DriftKind::bounded_random_walk: {
      Rng rng(seed);
      const double step = drift.walk_step_per_hour * std::sqrt(1.0 / bin_rate_hz / 3600.0);
      double cur = std::clamp(drift.v_start, kWalkFloor, kWalkCeiling);
      for (std::size_t k = 0; k < n_bins; ++k) {
        v[static_cast<Eigen::Index>(k)] = cur;
        cur = std::clamp(cur + step * rng.normal(), kWalkFloor, kWalkCeiling);
      }
      break;
    }
  }
  return v;
}

CountSeries detect_photons(const Eigen::VectorXd& phase, const InterferometerConfig& cfg,
                           const VisibilityDrift& drift, std::uint64_t seed, double t0_s) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(phase.size());
  const Eigen::VectorXd vis =
      visibility_profile(drift, cfg.bin_rate_hz, n, derive_seed(seed, kDriftTag));

  CountSeries cs;
  cs.bin_rate_hz = cfg.bin_rate_hz;
  cs.t0_s = t0_s;
  cs.n1.resize(n);
  cs.n2.resize(n);

  Rng rng(derive_seed(seed, kPhotonTag));
  const double half = 0.5 * cfg.detected_pair_rate_hz / cfg.bin_rate_hz;
  for (std::size_t k = 0; k < n; ++k) {
    const double swing = vis[static_cast<Eigen::Index>(k)] *
                         std::cos(cfg.lock_offset_rad + phase[static_cast<Eigen::Index>(k)]);
    const double mean1 = half * (1.0 + swing);
    const double mean2 = half * (1.0 - swing);
    if (!(mean1 >= 0 && mean2 >= 0)) {
      throw SimulationError("negative expected count at bin " + std::to_string(k));
    }
    cs.n1[k] = static_cast<std::uint32_t>(rng.poisson(mean1));
    cs.n2[k] = static_cast<std::uint32_t>(rng.poisson(mean2));
  }
  return cs;
}

CountSeries run_experiment(const Scenario& scenario) {
  const Eigen::VectorXd phase = residual_phase(scenario);
  CountSeries cs = detect_photons(phase, scenario.cfg, scenario.drift, scenario.seed, scenario.t0_s);
  cs.ground_truth = std::make_shared<const Scenario>(scenario);
  return cs;
}

std::vector<CountSeries> run_stitched(const Scenario& base, const std::vector<double>& durations_s) {
  std::vector<CountSeries> runs;
  double t = base.t0_s;
  for (std::size_t r = 0; r < durations_s.size(); ++r) {
    Scenario s = base;
    s.duration_s = durations_s[r];
    s.t0_s = t;
    s.seed = derive_seed(base.seed, kRunTag + r);
    runs.push_back(run_experiment(s));
    t += static_cast<double>(s.n_bins()) / s.cfg.bin_rate_hz;
  }
  return runs;
}

}  // namespace kmf
