// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kmf/adev.hpp"
#include "kmf/dsp.hpp"
#include "kmf/io.hpp"
#include "kmf/model.hpp"
#include "kmf/random.hpp"
#include "kmf/scenarios.hpp"
#include "kmf/sim.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok " : "NO ") + what);
  }
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::scientific << v;
  return s.str();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void add_runtime(Outcome& o, Clock::time_point start, double limit_s) {
  const double dt = seconds_since(start);
  o.check(dt < limit_s, "runtime " + num(dt, 3) + " s < " + num(limit_s, 2) + " s");
}

void add_report(Outcome& o, const kmf::ReproduceReport& r) {
  for (const auto& row : r.rows) o.check(row.pass, row.name + " = " + row.measured + " (" + row.expected + ")");
}

// 1 -------------------------------------------------------------------------
Outcome gravitational_predictor() {
  Outcome o;
  const auto t = Clock::now();
  const kmf::PhysicalConstants<double> consts{9.81};
  const double dphi = kmf::gravitational_phase_shift(consts, 1.46, 1.0, 1000.0, 1.0e-6);
  o.check(std::fabs(dphi / 1.001e-6 - 1.0) <= 1e-3, "phase shift " + num(dphi) + " rad vs 1.001e-6 +- 0.1%");
  add_runtime(o, t, 1.0);
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome loss_budget() {
  Outcome o;
  const auto t = Clock::now();
  const auto totals = kmf::loss_budget_total(kmf::reference_loss_budget());
  const double db = std::round(totals.total_db * 100.0) / 100.0;
  const double pct = std::round(totals.transmission * 1e4) / 100.0;
  o.check(db == 14.99, "total " + num(totals.total_db) + " dB rounds to 14.99");
  o.check(pct == 3.17, "transmission " + num(100 * totals.transmission) + " % rounds to 3.17");
  add_runtime(o, t, 1.0);
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome shot_noise_floor() {
  Outcome o;
  const auto t = Clock::now();
  const kmf::Scenario s = kmf::shot_noise_scenario(7101, 3600.0);
  const kmf::CountSeries counts = kmf::run_experiment(s);
  o.check(counts.size() == 36000, "36000 bins");
  const auto ports = kmf::counts_to_phase(counts, 0.98, std::numbers::pi / 2);
  const auto spectrum = kmf::asd(kmf::half_difference(ports.port1, ports.port2));

  // Power mean over the band and the log-log slope of the power spectrum.
  double power = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (Eigen::Index k = 0; k < spectrum.frequencies.size(); ++k) {
    const double f = spectrum.frequencies[k];
    if (f < 0.02 || f > 5.0) continue;
    const double p = spectrum.asd[k] * spectrum.asd[k];
    power += p;
    const double x = std::log(f), y = std::log(p);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  const double level = std::sqrt(power / static_cast<double>(n));
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  o.check(std::fabs(level / 4.42e-3 - 1.0) <= 0.10, "band ASD " + num(level) + " rad/rtHz vs 4.42e-3 +- 10%");
  o.check(std::fabs(slope) <= 0.05, "flat: PSD log-log slope " + num(slope, 3) + " within +-0.05");

  const double floor = kmf::shot_noise_asd(1.066e5, 0.98);
  const double frac = kmf::fractional_displacement_asd(floor, 1.55e-6, 1.46, 5.0e4);
  o.check(std::fabs(frac / 1.52e-14 - 1.0) <= 0.02, "fractional displacement " + num(frac) + " /rtHz vs 1.52e-14 +- 2%");
  add_runtime(o, t, 10.0);
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome full_scale_recovery() {
  Outcome o;
  const auto t = Clock::now();
  add_report(o, kmf::reproduce("fig2", {}));
  add_runtime(o, t, 300.0);
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome injection_ladder() {
  Outcome o;
  const auto t = Clock::now();
  add_report(o, kmf::reproduce("fig3a", {}));
  add_runtime(o, t, 180.0);
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome adev_behaviour() {
  Outcome o;
  const kmf::MainMeasurement m = kmf::paper_main_measurement(kmf::ReproduceOptions{}.seed);
  const auto t = Clock::now();
  const auto a = kmf::analyze_adev(m.estimate.signal, m.estimate.signal.lpf_cutoff, m.duration_s);
  o.check(std::fabs(a.fit.slope + 0.5) <= 0.05, "slope " + num(a.fit.slope, 4) + " vs -0.5 +- 0.05");
  const double ratio = a.extrapolated / m.estimate.sem;
  o.check(ratio >= 1.0 / 1.5 && ratio <= 1.5, "extrapolated/sem " + num(ratio, 4) + " within a factor 1.5");
  add_runtime(o, t, 60.0);
  return o;
}

// 7 -------------------------------------------------------------------------
double brute_force_oadev(const std::vector<double>& x, std::size_t m) {
  const std::size_t n = x.size();
  double acc = 0.0;
  std::size_t terms = 0;
  for (std::size_t k = 0; k + 2 * m <= n; ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      a += x[k + j];
      b += x[k + m + j];
    }
    const double d = (b - a) / static_cast<double>(m);
    acc += d * d;
    ++terms;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(terms)));
}

Outcome oracle_equivalence() {
  Outcome o;
  {
    kmf::Rng rng(42);
    std::vector<double> x(2000);
    for (auto& v : x) v = 0.3 + rng.normal();
    const double fs = 10.0;
    const std::vector<double> taus = {0.1, 0.2, 0.5, 1.0, 2.5, 10.0, 33.3, 66.6};
    const Eigen::Map<const Eigen::VectorXd> view(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto r = kmf::overlapping_adev(view, fs, taus);
    double worst = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const auto m = static_cast<std::size_t>(std::llround(taus[i] * fs));
      worst = std::max(worst, std::fabs(r.sigma[i] / brute_force_oadev(x, m) - 1.0));
    }
    o.check(worst <= 1e-12, "ADEV vs brute force, worst relative " + num(worst, 2));
  }
  {
    const double fs = 10.0, f = 0.1, rms = 6.48e-5;
    kmf::PhaseSeries s;
    s.fs = fs;
    s.t0 = 0.05;
    s.values.resize(360000);
    for (Eigen::Index k = 0; k < s.values.size(); ++k) {
      s.values[k] = std::sqrt(2.0) * rms * std::sin(2 * std::numbers::pi * f * (s.t0 + k / fs));
    }
    const auto r = kmf::lock_in(s, f, 0.01);
    const double rel = std::fabs(r.i_mean / rms - 1.0);
    o.check(rel <= 1e-9, "lock-in on noiseless tone, relative error " + num(rel, 2));
  }
  {
    const double total = 2.0e9, vis = 0.98, phi0 = std::numbers::pi / 2;
    bool cubic = true;
    double worst = 0.0;
    for (double delta : {-0.05, -0.03, -0.01, -0.001, 0.001, 0.01, 0.03, 0.05}) {
      kmf::CountSeries c;
      const auto [n1, n2] = kmf::expected_fringe_counts(total, vis, phi0 + delta);
      c.n1.assign(4, static_cast<std::uint32_t>(std::llround(n1)));
      c.n2.assign(4, static_cast<std::uint32_t>(std::llround(n2)));
      const auto p = kmf::counts_to_phase(c, vis, phi0);
      const double est = kmf::half_difference(p.port1, p.port2).values[0];
      const double err = std::fabs(est - delta);
      // Residual of the linearization is sin(d) - d, bounded by |d|^3 / 6.
      cubic = cubic && err <= std::pow(std::fabs(delta), 3) / 6.0 * 1.001 + 1e-8;
      worst = std::max(worst, err / std::pow(std::fabs(delta), 3));
    }
    o.check(cubic, "inversion residual <= |delta|^3/6, worst ratio " + num(worst, 3));
  }
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome statistical_calibration() {
  Outcome o;
  const auto t = Clock::now();
  constexpr int kTrials = 100;
  constexpr double kSignal = 6.5e-4;
  int covered = 0;
  for (int i = 0; i < kTrials; ++i) {
    const auto seed = kmf::derive_seed(8080, static_cast<std::uint64_t>(i));
    const auto counts = kmf::run_experiment(kmf::paper_scenario(seed, 2 * kmf::kHour, kSignal));
    const auto e = kmf::extract_signal(counts, kmf::paper_extract_options());
    if (std::fabs(e.amplitude - kSignal) <= 2.0 * e.sem) ++covered;
  }
  o.check(covered >= 93 && covered <= 99, "coverage " + std::to_string(covered) + "/100 within [93, 99]");
  o.notes.push_back("   elapsed " + num(seconds_since(t), 3) + " s");
  return o;
}

// 9 -------------------------------------------------------------------------
std::string binary_bytes(const kmf::CountSeries& c) {
  std::ostringstream s;
  kmf::write_counts_binary(s, c);
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const kmf::Scenario s = kmf::paper_scenario(99, 1800.0);
  const std::string a = binary_bytes(kmf::run_experiment(s));
  const std::string b = binary_bytes(kmf::run_experiment(s));
  o.check(a == b, "two runs with one seed are byte-identical (" + std::to_string(a.size()) + " bytes)");
  const std::string json = kmf::manifest_to_json(kmf::make_manifest(s));
  const kmf::Scenario again = kmf::scenario_from_manifest(kmf::manifest_from_json(json));
  o.check(binary_bytes(kmf::run_experiment(again)) == a, "manifest regenerates the data bit-exactly");
  const std::string c = binary_bytes(kmf::run_experiment(kmf::paper_scenario(100, 1800.0)));
  o.check(c != a, "a different seed gives different data");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gravitational predictor", gravitational_predictor},
      {"loss budget", loss_budget},
      {"shot-noise floor", shot_noise_floor},
      {"full-scale signal recovery", full_scale_recovery},
      {"injection ladder", injection_ladder},
      {"ADEV behaviour", adev_behaviour},
      {"oracle equivalence", oracle_equivalence},
      {"statistical calibration", statistical_calibration},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << ": " << criteria[i].first << "\n";
    for (const auto& n : o.notes) std::cout << "        " << n << "\n";
    std::cout.flush();
    if (!o.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
