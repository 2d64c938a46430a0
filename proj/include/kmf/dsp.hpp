#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kmf/model.hpp"
#include "kmf/sim.hpp"

namespace kmf {

enum class PortSource { port1, port2, half_difference };

/// Phase deviation from the lock point, one value per bin.
/// values[k] belongs to time t0 + k / fs (bin center).
struct PhaseSeries {
  double fs = 10.0;
  double t0 = 0.0;
  Eigen::VectorXd values;
  PortSource source = PortSource::half_difference;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
};

struct PortPhases {
  PhaseSeries port1;
  PhaseSeries port2;
  double mean_total_counts = 0.0;
  /// Set when |mean deviation| exceeds 0.3 rad and the linear inversion is unreliable.
  bool linearization_warning = false;
};

/// Linearized inversion of the fringe formula around `lock_offset`.
/// Both ports estimate the same deviation with the same sign.
PortPhases counts_to_phase(const CountSeries& counts, double visibility, double lock_offset);

/// (p1 + p2) / 2 in the sign convention of counts_to_phase.
PhaseSeries half_difference(const PhaseSeries& p1, const PhaseSeries& p2);

/// Joins contiguous series (each starting where the previous one ended).
PhaseSeries concatenate(std::span<const PhaseSeries> parts);

enum class Window { rectangular, hann };

/// One-sided amplitude spectral density, DC bin excluded.
struct SpectrumEstimate {
  Eigen::VectorXd frequencies;
  Eigen::VectorXd asd;
  double resolution_hz = 0.0;
  double enbw_hz = 0.0;
  Window window = Window::rectangular;
  std::size_t n_averages = 1;
};

/// Welch estimate with `n_segments` segments (non-overlapping for the
/// rectangular window, 50 % overlap for Hann). One rectangular segment is the
/// full-length periodogram. Each segment has its mean removed. Segment
/// lengths are trimmed to the nearest FFT-friendly (2/3/5-smooth) length below.
SpectrumEstimate asd(const PhaseSeries& series, Window window = Window::rectangular,
                     std::size_t n_segments = 1);

/// Power-averages bins into logarithmic bands (`per_decade` per decade) for
/// compact plotting output. Bands that receive no bin are skipped.
SpectrumEstimate log_binned(const SpectrumEstimate& spectrum, int per_decade);

/// Median ASD over [f_lo, f_hi].
double band_median(const SpectrumEstimate& spectrum, double f_lo, double f_hi);

/// Peak ASD within +-`half_width` bins of `f`, and the median ASD of the
/// surrounding band [f - span, f + span] excluding that peak region.
std::pair<double, double> tone_contrast(const SpectrumEstimate& spectrum, double f,
                                        std::size_t half_width = 2, double span_hz = 0.02);

/// Fourth-order Butterworth low-pass (two cascaded biquads, bilinear
/// transform with pre-warping), transposed direct form II.
class ButterworthLowPass {
 public:
  ButterworthLowPass(double cutoff_hz, double fs);

  /// Sets the state as if `value` had been applied forever.
  void settle_at(double value);
  double step(double x);

 private:
  struct Section {
    double b0, b1, b2, a1, a2;
    double z1 = 0.0, z2 = 0.0;
  };
  std::array<Section, 2> sections_;
};

/// Raw low-passed mixer outputs for the whole series.
struct Demodulation {
  Eigen::VectorXd i;
  Eigen::VectorXd q;
  std::size_t settle_samples = 0;  // leading samples still carrying the filter transient
};

/// Mixes with sqrt(2) sin / sqrt(2) cos references at `f_demod` and low-passes.
Demodulation demodulate(const PhaseSeries& series, double f_demod, double lpf_cutoff);

struct LockInResult {
  double f_demod = 0.0;
  double lpf_cutoff = 0.0;
  double reference_phase = 0.0;
  double t_first = 0.0;  // time of i_series[0]
  double fs = 0.0;
  Eigen::VectorXd i_series;
  Eigen::VectorXd q_series;
  double i_mean = 0.0;
  double i_sem = 0.0;
};

/// Lock-in amplitude of the component at `f_demod`, RMS convention.
/// Without `reference_phase` the phase is chosen to null the mean of Q.
/// The first 5 / lpf_cutoff seconds are dropped as filter settling.
LockInResult lock_in(const PhaseSeries& series, double f_demod, double lpf_cutoff,
                     std::optional<double> reference_phase = std::nullopt);

struct CalibrationResult {
  std::size_t n_segments = 0;
  std::vector<double> per_segment_scale;
  std::vector<std::pair<std::size_t, std::size_t>> segment_bounds;  // [begin, end)
  SignalSpec reference;
};

struct RecalibratedPorts {
  PhaseSeries port1;
  PhaseSeries port2;
  CalibrationResult calibration;
};

/// Rescales both ports segment by segment so that the reference dither reads
/// its known RMS amplitude. Scales come from the half-difference of the ports.
RecalibratedPorts segmented_recalibration(const PhaseSeries& p1, const PhaseSeries& p2,
                                          const SignalSpec& reference, std::size_t n_segments,
                                          double lpf_cutoff = 0.01);

struct ExtractOptions {
  double visibility_assumed = 0.98;
  double lock_offset = 1.5707963267948966;
  SignalSpec reference{0.25, 2.10e-3, 0.0};
  double f_signal_hz = 0.1;
  std::size_t n_segments = 10;
  double lpf_cutoff = 0.01;
};

struct SignalEstimate {
  double amplitude = 0.0;
  double sem = 0.0;
  PhaseSeries combined;  // recalibrated half-difference, all runs joined
  PhaseSeries raw_port1, raw_port2;  // uncalibrated, all runs joined
  LockInResult signal;
  LockInResult reference;
  std::vector<CalibrationResult> calibrations;  // one per run
  bool linearization_warning = false;
};

/// Full chain: counts -> phase -> per-run segmented recalibration ->
/// half-difference -> lock-in at the signal frequency.
SignalEstimate extract_signal(std::span<const CountSeries> runs, const ExtractOptions& options);
SignalEstimate extract_signal(const CountSeries& counts, const ExtractOptions& options);

}  // namespace kmf
