#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kmf/adev.hpp"
#include "kmf/dsp.hpp"
#include "kmf/sim.hpp"

namespace kmf {

inline constexpr double kHour = 3600.0;

/// Calibration dither: 2.10e-3 rad RMS at 0.25 Hz.
SignalSpec paper_reference_dither();

/// Locked interferometer at 10 Hz binning with the default classical
/// residual, 0.98 -> 0.92 visibility drift, the calibration dither and a
/// 0.1 Hz signal of `signal_rms`.
Scenario paper_scenario(std::uint64_t seed, double duration_s, double signal_rms = 6.48e-5);

/// Shot-noise-only scenario: no classical noise, constant visibility, no injections.
Scenario shot_noise_scenario(std::uint64_t seed, double duration_s);

ExtractOptions paper_extract_options();

/// Run lengths (s) of the two stitched runs making up the 160 h measurement.
std::vector<double> main_measurement_runs();

/// The 160 h measurement: two stitched runs, each recalibrated in 10
/// segments, analysed as one record.
struct MainMeasurement {
  std::vector<CountSeries> runs;
  SignalEstimate estimate;
  double duration_s = 0.0;
};
MainMeasurement paper_main_measurement(std::uint64_t seed, double signal_rms = 6.48e-5);

/// Overlapping ADEV of a demodulated I series on the default grid starting
/// at 5 / lpf_cutoff, its white-noise fit, and the fit extrapolated to `tau_total`.
struct AdevAnalysis {
  AdevResult adev;
  PowerLawFit fit;
  double extrapolated = 0.0;
};
AdevAnalysis analyze_adev(const LockInResult& lockin, double lpf_cutoff, double tau_total);

/// One row of a reproduction table.
struct CriterionRow {
  std::string name;
  std::string measured;
  std::string expected;
  bool pass = false;
};

struct ReproduceOptions {
  std::uint64_t seed = 20251015;
  unsigned threads = 1;
  std::optional<std::filesystem::path> out_dir;  // CSV outputs when set
};

struct ReproduceReport {
  std::string figure;
  std::vector<CriterionRow> rows;
  bool all_pass() const;
};

/// Runs the canned scenario(s) for `figure` ("fig2", "fig3a", "fig3b", "table1").
ReproduceReport reproduce(const std::string& figure, const ReproduceOptions& options);
std::vector<std::string> reproduce_ids();

void print_report(std::ostream& out, const ReproduceReport& report);

}  // namespace kmf
