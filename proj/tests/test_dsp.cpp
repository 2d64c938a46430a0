#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "kmf/dsp.hpp"
#include "kmf/random.hpp"
#include "kmf/scenarios.hpp"
#include "kmf/sim.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

kmf::PhaseSeries tone_series(double fs, std::size_t n, double f, double rms, double phase = 0.0,
                             double noise = 0.0, std::uint64_t seed = 1) {
  kmf::PhaseSeries s;
  s.fs = fs;
  s.t0 = 0.5 / fs;
  s.values.resize(static_cast<Eigen::Index>(n));
  kmf::Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = s.time(k);
    s.values[static_cast<Eigen::Index>(k)] = std::sqrt(2.0) * rms * std::sin(2 * kPi * f * t + phase) + noise * rng.normal();
  }
  return s;
}

kmf::CountSeries constant_counts(double total, double vis, double phi, std::size_t n) {
  kmf::CountSeries c;
  const auto [a, b] = kmf::expected_fringe_counts(total, vis, phi);
  c.n1.assign(n, static_cast<std::uint32_t>(std::llround(a)));
  c.n2.assign(n, static_cast<std::uint32_t>(std::llround(b)));
  return c;
}

TEST(CountsToPhase, SmallAngleRoundTrip) {
  const auto p = kmf::counts_to_phase(constant_counts(2e9, 0.98, kPi / 2 + 1e-3, 8), 0.98, kPi / 2);
  EXPECT_NEAR(p.port1.values[0], 1e-3, 1e-6);
  EXPECT_NEAR(p.port2.values[0], 1e-3, 1e-6);
  EXPECT_FALSE(p.linearization_warning);
}

TEST(CountsToPhase, LockPointAndVisibilityScaling) {
  const auto p = kmf::counts_to_phase(constant_counts(1e6, 0.98, kPi / 2, 8), 0.98, kPi / 2);
  EXPECT_NEAR(p.port1.values[3], 0.0, 1e-12);
  EXPECT_NEAR(p.port2.values[3], 0.0, 1e-12);

  const auto c = constant_counts(2e9, 0.98, kPi / 2 + 1e-3, 8);
  const double full = kmf::counts_to_phase(c, 0.98, kPi / 2).port1.values[0];
  const double half = kmf::counts_to_phase(c, 0.49, kPi / 2).port1.values[0];
  EXPECT_NEAR(half / full, 2.0, 1e-9);
}

TEST(CountsToPhase, BinCentreTimesAndWarning) {
  auto c = constant_counts(1e6, 0.98, kPi / 2 + 0.5, 8);
  c.t0_s = 100.0;
  const auto p = kmf::counts_to_phase(c, 0.98, kPi / 2);
  EXPECT_DOUBLE_EQ(p.port1.t0, 100.05);
  EXPECT_TRUE(p.linearization_warning);
}

TEST(HalfDifference, SignalPassesCommonRateCancels) {
  const auto s = tone_series(10.0, 100, 0.1, 1e-3);
  const auto out = kmf::half_difference(s, s);
  EXPECT_TRUE(out.values.isApprox(s.values));

  // Rate modulation scales both ports identically and leaves the phase at zero.
  kmf::CountSeries c;
  for (int k = 0; k < 1000; ++k) {
    const double total = 1e6 * (1.0 + 0.2 * std::sin(2 * kPi * 0.1 * k / 10.0));
    const auto [a, b] = kmf::expected_fringe_counts(total, 0.98, kPi / 2);
    c.n1.push_back(static_cast<std::uint32_t>(std::llround(a)));
    c.n2.push_back(static_cast<std::uint32_t>(std::llround(b)));
  }
  const auto p = kmf::counts_to_phase(c, 0.98, kPi / 2);
  EXPECT_LT(kmf::half_difference(p.port1, p.port2).values.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(HalfDifference, HalvesIndependentVariance) {
  kmf::Rng rng(3);
  kmf::CountSeries c;
  for (int k = 0; k < 50000; ++k) {
    c.n1.push_back(static_cast<std::uint32_t>(rng.poisson(5000.0)));
    c.n2.push_back(static_cast<std::uint32_t>(rng.poisson(5000.0)));
  }
  const auto p = kmf::counts_to_phase(c, 0.98, kPi / 2);
  auto var = [](const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().mean(); };
  const double single = var(p.port1.values);
  EXPECT_NEAR(var(kmf::half_difference(p.port1, p.port2).values) / (single / 2), 1.0, 0.1);
}

TEST(HalfDifference, RejectsMismatchedSeries) {
  const auto a = tone_series(10.0, 100, 0.1, 1e-3);
  const auto b = tone_series(10.0, 101, 0.1, 1e-3);
  EXPECT_THROW(kmf::half_difference(a, b), kmf::DomainError);
}

TEST(Concatenate, RequiresContiguity) {
  auto a = tone_series(10.0, 100, 0.1, 1e-3);
  auto b = tone_series(10.0, 50, 0.1, 1e-3);
  b.t0 = a.time(100);
  const std::vector<kmf::PhaseSeries> ok{a, b};
  const auto joined = kmf::concatenate(ok);
  EXPECT_EQ(joined.size(), 150u);
  EXPECT_EQ(joined.values[100], b.values[0]);
  b.t0 += 1.0;
  const std::vector<kmf::PhaseSeries> gap{a, b};
  EXPECT_THROW(kmf::concatenate(gap), kmf::DomainError);
}

TEST(Asd, PureToneParseval) {
  const double fs = 10.0, f = 0.25, rms = 2.1e-3;
  const std::size_t n = 40000;  // f falls on bin 1000
  const auto spec = kmf::asd(tone_series(fs, n, f, rms));
  Eigen::Index peak = 0;
  spec.asd.maxCoeff(&peak);
  EXPECT_NEAR(spec.frequencies[peak], f, 1e-12);
  EXPECT_NEAR(spec.asd[peak] * std::sqrt(spec.enbw_hz) / rms, 1.0, 0.01);
}

TEST(Asd, WhiteNoiseLevelAndParseval) {
  const double fs = 10.0, sigma = 0.3;
  const auto s = tone_series(fs, 1 << 16, 0.1, 0.0, 0.0, sigma, 77);
  const auto spec = kmf::asd(s, kmf::Window::rectangular, 16);
  EXPECT_EQ(spec.n_averages, 16u);
  const double mean_level = std::sqrt(spec.asd.array().square().mean());
  EXPECT_NEAR(mean_level / (sigma * std::sqrt(2.0 / fs)), 1.0, 0.1);

  const auto full = kmf::asd(s);
  const double band_power = full.asd.array().square().sum() * full.resolution_hz;
  const double var = (s.values.array() - s.values.mean()).square().mean();
  EXPECT_NEAR(band_power / var, 1.0, 0.02);
}

TEST(Asd, HannWindowLevel) {
  const double fs = 10.0, sigma = 0.3;
  const auto s = tone_series(fs, 1 << 16, 0.1, 0.0, 0.0, sigma, 78);
  const auto spec = kmf::asd(s, kmf::Window::hann, 15);
  EXPECT_NEAR(std::sqrt(spec.asd.array().square().mean()) / (sigma * std::sqrt(2.0 / fs)), 1.0, 0.1);
}

TEST(Asd, ZeroSeriesAndErrors) {
  kmf::PhaseSeries z;
  z.values = Eigen::VectorXd::Zero(256);
  EXPECT_EQ(kmf::asd(z).asd.cwiseAbs().maxCoeff(), 0.0);
  kmf::PhaseSeries tiny;
  tiny.values = Eigen::VectorXd::Zero(8);
  EXPECT_THROW(kmf::asd(tiny), kmf::DomainError);
  EXPECT_THROW(kmf::asd(z, kmf::Window::rectangular, 64), kmf::DomainError);
}

TEST(Butterworth, UnityDcGainAndSettledStart) {
  kmf::ButterworthLowPass lp(0.01, 10.0);
  lp.settle_at(2.5);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(lp.step(2.5), 2.5, 1e-10);
  kmf::ButterworthLowPass step(0.1, 10.0);
  double y = 0;
  for (int i = 0; i < 5000; ++i) y = step.step(1.0);
  EXPECT_NEAR(y, 1.0, 1e-9);
}

TEST(Butterworth, CutoffIsThreeDecibels) {
  const double fs = 10.0, fc = 0.5;
  kmf::ButterworthLowPass lp(fc, fs);
  double peak = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double y = lp.step(std::sin(2 * kPi * fc * k / fs));
    if (k > 10000) peak = std::max(peak, std::fabs(y));
  }
  EXPECT_NEAR(peak, 1.0 / std::sqrt(2.0), 2e-3);
}

TEST(LockIn, NoiselessToneExact) {
  const auto s = tone_series(10.0, 360000, 0.1, 6.48e-5, 0.7);
  const auto r = kmf::lock_in(s, 0.1, 0.01);
  EXPECT_NEAR(r.i_mean / 6.48e-5, 1.0, 1e-9);
  EXPECT_NEAR(r.q_series.mean(), 0.0, 1e-12);
  EXPECT_GT(r.i_sem, 0.0);
  EXPECT_NEAR(r.t_first - s.t0, 500.0, 0.2);
}

TEST(LockIn, FixedReferencePhase) {
  const auto s = tone_series(10.0, 200000, 0.1, 1e-3, 0.0);
  EXPECT_NEAR(kmf::lock_in(s, 0.1, 0.01, 0.0).i_mean, 1e-3, 1e-11);
  EXPECT_NEAR(kmf::lock_in(s, 0.1, 0.01, kPi / 2).i_mean, 0.0, 1e-11);
  EXPECT_NEAR(kmf::lock_in(s, 0.1, 0.01, kPi).i_mean, -1e-3, 1e-11);
}

TEST(LockIn, ToneInWhiteNoise) {
  const auto s = tone_series(10.0, 360000, 0.25, 2.10e-3, 0.3, 4.42e-3 * std::sqrt(5.0), 91);
  const auto r = kmf::lock_in(s, 0.25, 0.01);
  EXPECT_NEAR(r.i_mean, 2.10e-3, 2 * r.i_sem);
}

TEST(LockIn, OrthogonalHarmonic) {
  const auto s = tone_series(10.0, 200000, 0.1, 1e-3);
  EXPECT_NEAR(kmf::lock_in(s, 0.2, 0.01, 0.0).i_mean, 0.0, 1e-9);
}

TEST(LockIn, NullCalibrationWithFixedPhase) {
  int inside = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const auto s = tone_series(10.0, 36000, 0.1, 0.0, 0.0, 1.0, 1000 + i);
    const auto r = kmf::lock_in(s, 0.1, 0.01, 0.0);
    if (std::fabs(r.i_mean) < 3 * r.i_sem) ++inside;
  }
  EXPECT_GE(inside, static_cast<int>(0.99 * trials) - 1);
}

TEST(LockIn, SemMatchesScatter) {
  std::vector<double> means, sems;
  for (int i = 0; i < 200; ++i) {
    const auto r = kmf::lock_in(tone_series(10.0, 36000, 0.1, 0.0, 0.0, 1.0, 5000 + i), 0.1, 0.01, 0.0);
    means.push_back(r.i_mean);
    sems.push_back(r.i_sem);
  }
  double m = 0, v = 0, s = 0;
  for (double x : means) m += x;
  m /= means.size();
  for (double x : means) v += (x - m) * (x - m);
  v /= means.size() - 1;
  for (double x : sems) s += x;
  s /= sems.size();
  EXPECT_NEAR(s / std::sqrt(v), 1.0, 0.15);
}

TEST(LockIn, RejectsBadArguments) {
  const auto s = tone_series(10.0, 1000, 0.1, 1e-3);
  EXPECT_THROW(kmf::lock_in(s, 6.0, 0.01), kmf::DomainError);
  EXPECT_THROW(kmf::lock_in(s, 0.1, 0.0), kmf::DomainError);
  EXPECT_THROW(kmf::lock_in(s, 0.1, 0.001), kmf::DomainError);  // settling exceeds the record
}

TEST(Recalibration, ConstantVisibilityGivesUnitScales) {
  kmf::Scenario sc = kmf::shot_noise_scenario(12, 4 * 3600.0);
  sc.injections = {kmf::paper_reference_dither()};
  const auto counts = kmf::run_experiment(sc);
  const auto p = kmf::counts_to_phase(counts, 0.98, kPi / 2);
  const auto r = kmf::segmented_recalibration(p.port1, p.port2, kmf::paper_reference_dither(), 4);
  ASSERT_EQ(r.calibration.per_segment_scale.size(), 4u);
  for (double s : r.calibration.per_segment_scale) EXPECT_NEAR(s, 1.0, 0.08);

  const auto one = kmf::segmented_recalibration(p.port1, p.port2, kmf::paper_reference_dither(), 1);
  ASSERT_EQ(one.calibration.per_segment_scale.size(), 1u);
  EXPECT_NEAR(one.port1.values[5] / p.port1.values[5], one.calibration.per_segment_scale[0], 1e-12);
  EXPECT_NEAR(one.calibration.per_segment_scale[0], 1.0, 0.04);
}

TEST(Recalibration, TracksVisibilityDrift) {
  // 100x the paper's rate so that shot noise per segment (~0.1 %) sits well
  // below the 0.65 % visibility step between neighbouring segments.
  kmf::Scenario sc = kmf::shot_noise_scenario(13, 40 * 3600.0);
  sc.cfg.detected_pair_rate_hz = 1.066e7;
  sc.drift = {kmf::DriftKind::linear, 0.98, 0.92, 0.0};
  sc.injections = {kmf::paper_reference_dither()};
  const auto counts = kmf::run_experiment(sc);
  const auto p = kmf::counts_to_phase(counts, 0.98, kPi / 2);
  const auto r = kmf::segmented_recalibration(p.port1, p.port2, kmf::paper_reference_dither(), 10);
  const auto& scales = r.calibration.per_segment_scale;
  ASSERT_EQ(scales.size(), 10u);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double v_true = 0.98 + (0.92 - 0.98) * (i + 0.5) / 10.0;
    EXPECT_NEAR(scales[i] / (0.98 / v_true), 1.0, 0.03) << "segment " << i;
  }
  for (std::size_t i = 1; i < scales.size(); ++i) EXPECT_GT(scales[i], scales[i - 1]) << "segment " << i;
}

TEST(Recalibration, FailsWithoutReference) {
  const auto s = tone_series(10.0, 40000, 0.1, 0.0);
  try {
    kmf::segmented_recalibration(s, s, kmf::paper_reference_dither(), 2);
    FAIL() << "expected CalibrationError";
  } catch (const kmf::CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("segment"), std::string::npos);
  }
}

TEST(Recalibration, RejectsShortSegments) {
  const auto s = tone_series(10.0, 1000, 0.25, 1e-3);
  EXPECT_THROW(kmf::segmented_recalibration(s, s, kmf::paper_reference_dither(), 10), kmf::DomainError);
}

TEST(ExtractSignal, NullMeasurement) {
  const auto counts = kmf::run_experiment(kmf::paper_scenario(44, 4 * 3600.0, 0.0));
  const auto e = kmf::extract_signal(counts, kmf::paper_extract_options());
  EXPECT_LT(std::fabs(e.amplitude), 3 * e.sem);
}

TEST(ExtractSignal, RecoversDeskScaleSignal) {
  const auto counts = kmf::run_experiment(kmf::paper_scenario(45, 4 * 3600.0, 6.5e-4));
  const auto e = kmf::extract_signal(counts, kmf::paper_extract_options());
  EXPECT_NEAR(e.amplitude, 6.5e-4, 3 * e.sem);
  EXPECT_NEAR(e.reference.i_mean, 2.10e-3, 3 * e.reference.i_sem);
  EXPECT_EQ(e.calibrations.size(), 1u);
}

}  // namespace
