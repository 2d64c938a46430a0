#include "kmf/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "kmf/error.hpp"

namespace kmf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLinearizationLimit = 0.3;
constexpr double kSettleTimeConstants = 5.0;

double mean_of(const Eigen::Ref<const Eigen::VectorXd>& v) {
  long double acc = 0.0L;
  for (Eigen::Index k = 0; k < v.size(); ++k) acc += v[k];
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

double stddev_of(const Eigen::Ref<const Eigen::VectorXd>& v, double mean) {
  long double acc = 0.0L;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const long double d = v[k] - mean;
    acc += d * d;
  }
  return static_cast<double>(std::sqrt(acc / static_cast<long double>(v.size() - 1)));
}

// sin/cos of 2 pi f t with the cycle count reduced first, so long records
// keep full phase precision.
double cycle_phase(double f, double t) {
  const double cycles = f * t;
  return kTwoPi * (cycles - std::floor(cycles));
}

}  // namespace

PortPhases counts_to_phase(const CountSeries& counts, double visibility, double lock_offset) {
  counts.validate();
  if (!(visibility > 0 && visibility <= 1)) throw DomainError("visibility must lie in (0, 1]");
  const double slope_sin = std::sin(lock_offset);
  if (std::fabs(slope_sin) < 1e-3) {
    throw DomainError("lock offset too close to a fringe extremum for linear inversion");
  }
  const std::size_t n = counts.size();
  if (n == 0) throw CalibrationError("empty count series");

  long double total = 0.0L;
  for (std::size_t k = 0; k < n; ++k) total += static_cast<long double>(counts.n1[k]) + counts.n2[k];
  const double mean_total = static_cast<double>(total / static_cast<long double>(n));
  if (!(mean_total > 0)) throw CalibrationError("mean total count per bin is zero");

  // Linearize N1,2 = N/2 (1 +- V cos(phi0 + d)) around d = 0.
  const double half = 0.5 * mean_total;
  const double cos0 = std::cos(lock_offset);
  const double gain = half * visibility * slope_sin;
  const double center1 = half * (1.0 + visibility * cos0);
  const double center2 = half * (1.0 - visibility * cos0);

  PortPhases out;
  out.mean_total_counts = mean_total;
  const double fs = counts.bin_rate_hz;
  const double t_first = counts.t0_s + 0.5 / fs;
  out.port1 = PhaseSeries{fs, t_first, Eigen::VectorXd(n), PortSource::port1};
  out.port2 = PhaseSeries{fs, t_first, Eigen::VectorXd(n), PortSource::port2};
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out.port1.values[i] = (center1 - counts.n1[k]) / gain;
    out.port2.values[i] = (counts.n2[k] - center2) / gain;
  }
  out.linearization_warning = std::fabs(mean_of(out.port1.values)) > kLinearizationLimit ||
                              std::fabs(mean_of(out.port2.values)) > kLinearizationLimit;
  return out;
}

PhaseSeries half_difference(const PhaseSeries& p1, const PhaseSeries& p2) {
  if (p1.size() != p2.size()) throw DomainError("half_difference: series lengths differ");
  if (p1.fs != p2.fs) throw DomainError("half_difference: sample rates differ");
  return PhaseSeries{p1.fs, p1.t0, 0.5 * (p1.values + p2.values), PortSource::half_difference};
}

PhaseSeries concatenate(std::span<const PhaseSeries> parts) {
  if (parts.empty()) throw DomainError("concatenate: no series given");
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].fs != parts[0].fs) throw DomainError("concatenate: sample rates differ");
    if (i > 0) {
      const double expected = parts[i - 1].t0 + static_cast<double>(parts[i - 1].size()) / parts[0].fs;
      if (std::fabs(parts[i].t0 - expected) > 1e-6 * std::max(1.0, std::fabs(expected))) {
        throw DomainError("concatenate: series " + std::to_string(i) +
                          " does not start where the previous one ends");
      }
    }
    total += parts[i].values.size();
  }
  PhaseSeries out{parts[0].fs, parts[0].t0, Eigen::VectorXd(total), parts[0].source};
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.values.segment(at, p.values.size()) = p.values;
    at += p.values.size();
  }
  return out;
}

SpectrumEstimate asd(const PhaseSeries& series, Window window, std::size_t n_segments) {
  const std::size_t n = series.size();
  if (n < 16) throw DomainError("asd: need at least 16 samples");
  if (n_segments < 1 || n_segments > n / 16) {
    throw DomainError("asd: n_segments must lie in [1, n/16]");
  }
  const bool hann = window == Window::hann;
  // Trimmed to an FFT-friendly length; at most a few trailing samples go unused.
  const std::size_t len = detail::smooth_size_at_most(hann ? 2 * n / (n_segments + 1) : n / n_segments);
  const std::size_t step = hann ? len / 2 : len;

  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(len));
  if (hann) {
    for (std::size_t j = 0; j < len; ++j) {
      w[static_cast<Eigen::Index>(j)] = 0.5 * (1.0 - std::cos(kTwoPi * j / static_cast<double>(len)));
    }
  }
  const double sum_w2 = w.squaredNorm();
  const double sum_w = w.sum();

  const std::size_t n_bins = len / 2;
  Eigen::VectorXd power = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bins));
  Eigen::VectorXd seg(static_cast<Eigen::Index>(len));
  for (std::size_t s = 0; s < n_segments; ++s) {
    seg = series.values.segment(static_cast<Eigen::Index>(s * step), static_cast<Eigen::Index>(len));
    seg.array() -= mean_of(seg);
    seg.array() *= w.array();
    const auto spectrum = detail::real_fft(seg.data(), len);
    for (std::size_t k = 1; k <= n_bins; ++k) power[static_cast<Eigen::Index>(k - 1)] += std::norm(spectrum[k]);
  }

  SpectrumEstimate out;
  out.window = window;
  out.n_averages = n_segments;
  out.resolution_hz = series.fs / static_cast<double>(len);
  out.enbw_hz = series.fs * sum_w2 / (sum_w * sum_w);
  out.frequencies.resize(static_cast<Eigen::Index>(n_bins));
  out.asd.resize(static_cast<Eigen::Index>(n_bins));
  const double norm = 1.0 / (static_cast<double>(n_segments) * series.fs * sum_w2);
  for (std::size_t k = 1; k <= n_bins; ++k) {
    const auto i = static_cast<Eigen::Index>(k - 1);
    // One-sided: double every bin except Nyquist.
    const double factor = (len % 2 == 0 && k == n_bins) ? 1.0 : 2.0;
    out.frequencies[i] = static_cast<double>(k) * out.resolution_hz;
    out.asd[i] = std::sqrt(factor * power[i] * norm);
  }
  return out;
}

SpectrumEstimate log_binned(const SpectrumEstimate& spectrum, int per_decade) {
  if (per_decade < 1) throw DomainError("log_binned: per_decade must be >= 1");
  SpectrumEstimate out = spectrum;
  std::vector<double> f, a;
  const auto n = spectrum.frequencies.size();
  Eigen::Index k = 0;
  while (k < n) {
    const double band = std::floor(std::log10(spectrum.frequencies[k]) * per_decade);
    const double upper = std::pow(10.0, (band + 1.0) / per_decade);
    double pf = 0.0, pp = 0.0;
    int count = 0;
    for (; k < n && spectrum.frequencies[k] < upper; ++k, ++count) {
      pf += spectrum.frequencies[k];
      pp += spectrum.asd[k] * spectrum.asd[k];
    }
    if (count == 0) {
      ++k;  // rounding put the bin on the band edge
      continue;
    }
    f.push_back(pf / count);
    a.push_back(std::sqrt(pp / count));
  }
  out.frequencies = Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  out.asd = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  return out;
}

double band_median(const SpectrumEstimate& spectrum, double f_lo, double f_hi) {
  std::vector<double> v;
  for (Eigen::Index k = 0; k < spectrum.frequencies.size(); ++k) {
    if (spectrum.frequencies[k] >= f_lo && spectrum.frequencies[k] <= f_hi) v.push_back(spectrum.asd[k]);
  }
  if (v.empty()) throw DomainError("band_median: no bins in band");
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::pair<double, double> tone_contrast(const SpectrumEstimate& spectrum, double f,
                                        std::size_t half_width, double span_hz) {
  const double df = spectrum.resolution_hz;
  const auto center = static_cast<Eigen::Index>(std::llround(f / df)) - 1;
  if (center < 0 || center >= spectrum.asd.size()) throw DomainError("tone_contrast: f out of range");
  const auto hw = static_cast<Eigen::Index>(half_width);
  double peak = 0.0;
  for (Eigen::Index k = std::max<Eigen::Index>(0, center - hw);
       k <= std::min<Eigen::Index>(spectrum.asd.size() - 1, center + hw); ++k) {
    peak = std::max(peak, spectrum.asd[k]);
  }
  std::vector<double> floor;
  for (Eigen::Index k = 0; k < spectrum.asd.size(); ++k) {
    const double fk = spectrum.frequencies[k];
    if (std::fabs(fk - f) <= span_hz && std::abs(k - center) > 4 * hw) floor.push_back(spectrum.asd[k]);
  }
  if (floor.empty()) throw DomainError("tone_contrast: empty floor band");
  auto mid = floor.begin() + static_cast<std::ptrdiff_t>(floor.size() / 2);
  std::nth_element(floor.begin(), mid, floor.end());
  return {peak, *mid};
}

ButterworthLowPass::ButterworthLowPass(double cutoff_hz, double fs) {
  if (!(cutoff_hz > 0) || !(cutoff_hz < fs / 2)) {
    throw DomainError("low-pass cutoff must lie in (0, fs/2)");
  }
  const double w0 = kTwoPi * cutoff_hz / fs;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  // Pole-pair quality factors of a 4th-order Butterworth response.
  const double qs[2] = {1.0 / (2.0 * std::cos(std::numbers::pi / 8.0)),
                        1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0))};
  for (int s = 0; s < 2; ++s) {
    const double alpha = sw / (2.0 * qs[s]);
    const double a0 = 1.0 + alpha;
    const double one_minus_cw = 2.0 * std::sin(w0 / 2.0) * std::sin(w0 / 2.0);
    sections_[s].b0 = 0.5 * one_minus_cw / a0;
    sections_[s].b1 = one_minus_cw / a0;
    sections_[s].b2 = sections_[s].b0;
    sections_[s].a1 = -2.0 * cw / a0;
    sections_[s].a2 = (1.0 - alpha) / a0;
  }
}

void ButterworthLowPass::settle_at(double value) {
  // Unity DC gain: every section outputs `value` in steady state.
  for (auto& s : sections_) {
    s.z2 = (s.b2 - s.a2) * value;
    s.z1 = (s.b1 - s.a1) * value + s.z2;
  }
}

double ButterworthLowPass::step(double x) {
  for (auto& s : sections_) {
    const double y = s.b0 * x + s.z1;
    s.z1 = s.b1 * x - s.a1 * y + s.z2;
    s.z2 = s.b2 * x - s.a2 * y;
    x = y;
  }
  return x;
}

Demodulation demodulate(const PhaseSeries& series, double f_demod, double lpf_cutoff) {
  const double fs = series.fs;
  if (!(f_demod > 0 && f_demod < fs / 2)) throw DomainError("demodulation frequency must lie in (0, fs/2)");
  if (!(lpf_cutoff > 0 && lpf_cutoff < f_demod / 2)) {
    throw DomainError("low-pass cutoff must lie in (0, f_demod/2)");
  }
  const std::size_t n = series.size();
  Eigen::VectorXd mix_i(static_cast<Eigen::Index>(n)), mix_q(static_cast<Eigen::Index>(n));
  const double root2 = std::sqrt(2.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double ph = cycle_phase(f_demod, series.time(k));
    mix_i[i] = root2 * series.values[i] * std::sin(ph);
    mix_q[i] = root2 * series.values[i] * std::cos(ph);
  }

  // Prime the filters with the opening stretch of mixer products played
  // backwards, starting from their mean over one reference period. The
  // state then reflects the record's own start instead of a step from zero.
  const auto settle = static_cast<std::size_t>(std::ceil(kSettleTimeConstants / lpf_cutoff * fs));
  const auto period = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(n), std::max<Eigen::Index>(1, std::llround(fs / f_demod)));
  ButterworthLowPass lp_i(lpf_cutoff, fs), lp_q(lpf_cutoff, fs);
  if (n > 0) {
    lp_i.settle_at(mix_i.head(period).mean());
    lp_q.settle_at(mix_q.head(period).mean());
    for (auto k = static_cast<Eigen::Index>(std::min(settle, n)); k-- > 0;) {
      lp_i.step(mix_i[k]);
      lp_q.step(mix_q[k]);
    }
  }

  Demodulation out;
  out.i.resize(static_cast<Eigen::Index>(n));
  out.q.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
    out.i[k] = lp_i.step(mix_i[k]);
    out.q[k] = lp_q.step(mix_q[k]);
  }
  out.settle_samples = settle;
  return out;
}

namespace {

// Rotation that nulls mean Q, refined once to absorb rounding.
double null_q_phase(const Eigen::VectorXd& i, const Eigen::VectorXd& q) {
  double theta = std::atan2(mean_of(q), mean_of(i));
  const double c = std::cos(theta), s = std::sin(theta);
  const Eigen::VectorXd ir = c * i + s * q;
  const Eigen::VectorXd qr = c * q - s * i;
  theta += std::atan2(mean_of(qr), mean_of(ir));
  return theta;
}

}  // namespace

LockInResult lock_in(const PhaseSeries& series, double f_demod, double lpf_cutoff,
                     std::optional<double> reference_phase) {
  Demodulation d = demodulate(series, f_demod, lpf_cutoff);
  const std::size_t n = series.size();
  if (n < d.settle_samples + 2) {
    throw DomainError("lock_in: series of " + std::to_string(n) + " samples is shorter than the " +
                      std::to_string(d.settle_samples) + "-sample settling time");
  }
  const auto keep = static_cast<Eigen::Index>(n - d.settle_samples);
  const Eigen::VectorXd i = d.i.tail(keep);
  const Eigen::VectorXd q = d.q.tail(keep);

  LockInResult r;
  r.f_demod = f_demod;
  r.lpf_cutoff = lpf_cutoff;
  r.fs = series.fs;
  r.t_first = series.time(d.settle_samples);
  r.reference_phase = reference_phase ? *reference_phase : null_q_phase(i, q);
  const double c = std::cos(r.reference_phase), s = std::sin(r.reference_phase);
  r.i_series = c * i + s * q;
  r.q_series = c * q - s * i;
  r.i_mean = mean_of(r.i_series);
  // The low-pass correlates neighbouring samples; count 2 fc / fs of them per sample.
  const double n_eff = std::max(1.0, static_cast<double>(keep) * 2.0 * lpf_cutoff / series.fs);
  r.i_sem = stddev_of(r.i_series, r.i_mean) / std::sqrt(n_eff);
  return r;
}

RecalibratedPorts segmented_recalibration(const PhaseSeries& p1, const PhaseSeries& p2,
                                          const SignalSpec& reference, std::size_t n_segments,
                                          double lpf_cutoff) {
  reference.validate();
  if (n_segments < 1) throw DomainError("need at least one calibration segment");
  const PhaseSeries hd = half_difference(p1, p2);
  const std::size_t n = hd.size();
  const double seg_seconds = static_cast<double>(n / n_segments) / hd.fs;
  if (seg_seconds * reference.frequency_hz < 20.0) {
    throw DomainError("calibration segments must span at least 20 reference periods");
  }

  // One demodulation across all segment boundaries. The primed start lets
  // the first segment use every sample, like the others.
  const Demodulation d = demodulate(hd, reference.frequency_hz, lpf_cutoff);
  const double theta = null_q_phase(d.i, d.q);
  const Eigen::VectorXd i_rot = std::cos(theta) * d.i + std::sin(theta) * d.q;

  RecalibratedPorts out{p1, p2, {}};
  out.calibration.n_segments = n_segments;
  out.calibration.reference = reference;
  for (std::size_t s = 0; s < n_segments; ++s) {
    const std::size_t begin = s * n / n_segments;
    const std::size_t end = (s + 1) * n / n_segments;
    const double amplitude = mean_of(i_rot.segment(static_cast<Eigen::Index>(begin),
                                                   static_cast<Eigen::Index>(end - begin)));
    if (!(amplitude > 0)) {
      throw CalibrationError("calibration segment " + std::to_string(s) +
                             " shows no positive reference amplitude");
    }
    const double scale = reference.rms_amplitude_rad / amplitude;
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    out.port1.values.segment(b, len) *= scale;
    out.port2.values.segment(b, len) *= scale;
    out.calibration.per_segment_scale.push_back(scale);
    out.calibration.segment_bounds.emplace_back(begin, end);
  }
  return out;
}

SignalEstimate extract_signal(std::span<const CountSeries> runs, const ExtractOptions& options) {
  if (runs.empty()) throw DomainError("extract_signal: no runs given");
  if (std::fabs(options.f_signal_hz - options.reference.frequency_hz) < 1e-12) {
    throw DomainError("signal and reference frequencies must differ");
  }
  SignalEstimate est;
  std::vector<PhaseSeries> combined, raw1, raw2;
  for (const auto& run : runs) {
    PortPhases ports = counts_to_phase(run, options.visibility_assumed, options.lock_offset);
    est.linearization_warning = est.linearization_warning || ports.linearization_warning;
    RecalibratedPorts rec = segmented_recalibration(ports.port1, ports.port2, options.reference,
                                                    options.n_segments, options.lpf_cutoff);
    combined.push_back(half_difference(rec.port1, rec.port2));
    raw1.push_back(std::move(ports.port1));
    raw2.push_back(std::move(ports.port2));
    est.calibrations.push_back(std::move(rec.calibration));
  }
  est.combined = concatenate(combined);
  est.raw_port1 = concatenate(raw1);
  est.raw_port2 = concatenate(raw2);
  est.signal = lock_in(est.combined, options.f_signal_hz, options.lpf_cutoff);
  est.reference = lock_in(est.combined, options.reference.frequency_hz, options.lpf_cutoff);
  est.amplitude = est.signal.i_mean;
  est.sem = est.signal.i_sem;
  return est;
}

SignalEstimate extract_signal(const CountSeries& counts, const ExtractOptions& options) {
  return extract_signal(std::span<const CountSeries>(&counts, 1), options);
}

}  // namespace kmf
