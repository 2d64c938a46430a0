#include "kmf/scenarios.hpp"

#include <numbers>

namespace kmf {

SignalSpec paper_reference_dither() { return SignalSpec{0.25, 2.10e-3, 0.0}; }

Scenario paper_scenario(std::uint64_t seed, double duration_s, double signal_rms) {
  Scenario s;
  s.seed = seed;
  s.duration_s = duration_s;
  s.noise = default_paper_model(0);
  // The classical model is already the in-loop residual of the real lock.
  s.loop.mode = LoopMode::bypass;
  s.drift = VisibilityDrift{DriftKind::linear, 0.98, 0.92, 0.005};
  s.injections = {paper_reference_dither(), SignalSpec{0.1, signal_rms, 0.0}};
  return s;
}

Scenario shot_noise_scenario(std::uint64_t seed, double duration_s) {
  Scenario s;
  s.seed = seed;
  s.duration_s = duration_s;
  s.loop.mode = LoopMode::effective;
  s.drift = VisibilityDrift{DriftKind::constant, 0.98, 0.98, 0.0};
  return s;
}

ExtractOptions paper_extract_options() {
  ExtractOptions o;
  o.visibility_assumed = 0.98;
  o.lock_offset = std::numbers::pi / 2;
  o.reference = paper_reference_dither();
  o.f_signal_hz = 0.1;
  o.n_segments = 10;
  o.lpf_cutoff = 0.01;
  return o;
}

std::vector<double> main_measurement_runs() { return {91.2 * kHour, 68.8 * kHour}; }

MainMeasurement paper_main_measurement(std::uint64_t seed, double signal_rms) {
  MainMeasurement m;
  const Scenario base = paper_scenario(seed, 1.0 * kHour, signal_rms);
  m.runs = run_stitched(base, main_measurement_runs());
  m.estimate = extract_signal(m.runs, paper_extract_options());
  for (const auto& r : m.runs) m.duration_s += static_cast<double>(r.size()) / r.bin_rate_hz;
  return m;
}

AdevAnalysis analyze_adev(const LockInResult& lockin, double lpf_cutoff, double tau_total) {
  AdevAnalysis a;
  const auto n = static_cast<std::size_t>(lockin.i_series.size());
  const auto taus = default_tau_grid(n, lockin.fs, 5.0 / lpf_cutoff, 10);
  a.adev = overlapping_adev(lockin.i_series, lockin.fs, taus);
  a.fit = fit_white_noise(a.adev);
  a.extrapolated = extrapolate(a.fit.level, a.fit.slope, tau_total);
  return a;
}

}  // namespace kmf
