// kmf: command-line front end for the 50 km fiber interferometer twin.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "kmf/adev.hpp"
#include "kmf/dsp.hpp"
#include "kmf/error.hpp"
#include "kmf/io.hpp"
#include "kmf/model.hpp"
#include "kmf/scenarios.hpp"
#include "kmf/sim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("KMF_OUT_DIR"); env && *env) return env;
  return "kmf_out";
}

std::ofstream open_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kmf::IoError("cannot write " + path.string());
  return out;
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(4) << v;
  return s.str();
}

struct PredictArgs {
  double height = 0.0;
  double length = 5.0e4;
  double wavelength = 1.55e-6;
  double index = 1.46;
  double g = 9.81;
  double rate = 1.066e5;
  double visibility = 0.98;
  std::string budget;
};

int run_predict(const PredictArgs& a) {
  const kmf::PhysicalConstants<double> consts{a.g};
  const double dphi = kmf::gravitational_phase_shift(consts, a.index, a.height, a.length, a.wavelength);
  const double floor = kmf::shot_noise_asd(a.rate, a.visibility);
  std::cout << "gravitational phase shift:      " << sci(dphi) << " rad\n";
  std::cout << "  as fractional displacement:   "
            << sci(kmf::fractional_displacement_asd(std::fabs(dphi), a.wavelength, a.index, a.length)) << "\n";
  std::cout << "shot-noise floor:               " << sci(floor) << " rad/rtHz\n";
  std::cout << "  as fractional displacement:   "
            << sci(kmf::fractional_displacement_asd(floor, a.wavelength, a.index, a.length)) << " /rtHz\n";
  std::cout << "  time to SNR 10 on the phase:  ";
  if (dphi != 0.0) {
    std::cout << sci(kmf::snr_integration_time(std::fabs(dphi), floor, 10.0)) << " s\n";
  } else {
    std::cout << "n/a (zero signal)\n";
  }
  if (!a.budget.empty()) {
    const auto t = kmf::loss_budget_total(kmf::load_loss_budget(a.budget));
    std::cout << std::fixed << std::setprecision(2);
    std::cout << "loss budget total:              " << t.total_db << " dB (rss +- " << std::setprecision(3)
              << t.total_uncertainty_db << ", linear +- " << t.linear_uncertainty_db << ")\n";
    std::cout << std::setprecision(2) << "transmission:                   " << 100.0 * t.transmission << " %\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  kmf::Scenario scenario;
  if (!a.manifest.empty()) {
    std::ifstream in(a.manifest);
    if (!in) throw kmf::IoError("cannot open manifest " + a.manifest);
    std::ostringstream ss;
    ss << in.rdbuf();
    scenario = kmf::scenario_from_manifest(kmf::manifest_from_json(ss.str()));
  } else if (!a.config.empty()) {
    scenario = kmf::load_scenario(a.config);
  } else {
    throw kmf::DomainError("simulate needs a config file or --from-manifest");
  }
  if (a.seed) scenario.seed = *a.seed;

  const kmf::CountSeries counts = kmf::run_experiment(scenario);
  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);
  kmf::save_counts_binary(dir / "counts.kmf", counts);
  kmf::save_counts_csv(dir / "counts.csv", counts);
  open_file(dir / "manifest.json") << kmf::manifest_to_json(kmf::make_manifest(scenario));
  std::cout << "wrote " << counts.size() << " bins to " << dir.string() << "\n";
  return 0;
}

struct AnalyzeArgs {
  std::vector<std::string> counts;
  double ref_freq = 0.25;
  double ref_amp = 2.10e-3;
  std::optional<double> signal_freq;
  std::size_t segments = 10;
  double lpf = 0.01;
  double visibility = 0.98;
  double lock_offset = std::numbers::pi / 2;
  std::string out;
  bool full_spectrum = false;
};

int run_analyze(const AnalyzeArgs& a) {
  std::vector<kmf::CountSeries> runs;
  for (const auto& p : a.counts) runs.push_back(kmf::load_counts(p));
  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);

  auto write_spectra = [&](const kmf::PhaseSeries& p1, const kmf::PhaseSeries& p2, const kmf::PhaseSeries& hd) {
    kmf::SpectrumEstimate s1 = kmf::asd(p1), s2 = kmf::asd(p2), sh = kmf::asd(hd);
    if (!a.full_spectrum) {
      s1 = kmf::log_binned(s1, 200);
      s2 = kmf::log_binned(s2, 200);
      sh = kmf::log_binned(sh, 200);
    }
    auto out = open_file(dir / "spectrum.csv");
    kmf::write_spectrum_csv(out, {"port1", "port2", "half_difference"}, {&s1, &s2, &sh});
    return kmf::asd(hd);
  };

  if (!a.signal_freq) {
    std::vector<kmf::PhaseSeries> p1s, p2s, hds;
    bool warn = false;
    for (const auto& r : runs) {
      auto ports = kmf::counts_to_phase(r, a.visibility, a.lock_offset);
      warn = warn || ports.linearization_warning;
      hds.push_back(kmf::half_difference(ports.port1, ports.port2));
      p1s.push_back(std::move(ports.port1));
      p2s.push_back(std::move(ports.port2));
    }
    const auto hd = kmf::concatenate(hds);
    const auto spectrum = write_spectra(kmf::concatenate(p1s), kmf::concatenate(p2s), hd);
    const auto taus = kmf::default_tau_grid(hd.size(), hd.fs);
    const auto adev = kmf::overlapping_adev(hd.values, hd.fs, taus);
    auto out = open_file(dir / "adev.csv");
    kmf::write_adev_csv(out, adev, nullptr);
    std::cout << "bins:               " << hd.size() << "\n";
    std::cout << "floor 0.4-0.9 Hz:   " << sci(kmf::band_median(spectrum, 0.4, 0.9) / std::sqrt(std::log(2.0)))
              << " rad/rtHz\n";
    if (warn) std::cout << "warning: mean phase deviation exceeds 0.3 rad; linear inversion unreliable\n";
    return 0;
  }

  kmf::ExtractOptions opt;
  opt.visibility_assumed = a.visibility;
  opt.lock_offset = a.lock_offset;
  opt.reference = kmf::SignalSpec{a.ref_freq, a.ref_amp, 0.0};
  opt.f_signal_hz = *a.signal_freq;
  opt.n_segments = a.segments;
  opt.lpf_cutoff = a.lpf;
  const kmf::SignalEstimate e = kmf::extract_signal(runs, opt);

  write_spectra(e.raw_port1, e.raw_port2, e.combined);
  {
    auto out = open_file(dir / "lockin_signal.csv");
    kmf::write_lockin_csv(out, e.signal);
  }
  {
    auto out = open_file(dir / "lockin_reference.csv");
    kmf::write_lockin_csv(out, e.reference);
  }
  {
    auto out = open_file(dir / "calibration.csv");
    kmf::write_calibration_csv(out, e.calibrations, e.combined.fs);
  }
  const double duration = static_cast<double>(e.combined.size()) / e.combined.fs;
  const auto adev = kmf::analyze_adev(e.signal, a.lpf, duration);
  {
    auto out = open_file(dir / "adev.csv");
    kmf::write_adev_csv(out, adev.adev, &adev.fit);
  }
  std::cout << "signal amplitude:   " << sci(e.amplitude) << " +- " << sci(e.sem) << " rad (RMS)\n";
  std::cout << "snr:                " << std::fixed << std::setprecision(2) << e.amplitude / e.sem << "\n";
  std::cout << "reference readback: " << sci(e.reference.i_mean) << " +- " << sci(e.reference.i_sem) << " rad\n";
  std::cout << "adev slope:         " << std::fixed << std::setprecision(3) << adev.fit.slope
            << (adev.fit.white_noise_consistent() ? " (white noise)" : " (not white)") << "\n";
  std::cout << "adev extrapolated:  " << sci(adev.extrapolated) << " rad at " << sci(duration) << " s\n";
  if (e.linearization_warning) {
    std::cout << "warning: mean phase deviation exceeds 0.3 rad; linear inversion unreliable\n";
  }
  return 0;
}

struct ReproduceArgs {
  std::string figure;
  std::uint64_t seed = 20251015;
  unsigned threads = 1;
  std::string out;
};

int run_reproduce(const ReproduceArgs& a) {
  kmf::ReproduceOptions o;
  o.seed = a.seed;
  o.threads = a.threads;
  if (!a.out.empty() || std::getenv("KMF_OUT_DIR")) o.out_dir = output_dir(a.out);
  const auto report = kmf::reproduce(a.figure, o);
  kmf::print_report(std::cout, report);
  return report.all_pass() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin and analysis chain of a 50 km single-photon fiber interferometer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kmf::tool_version());

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Gravitational phase shift, sensitivity and loss budget");
  predict->add_option("--height", pa.height, "Height difference between the arms (m)");
  predict->add_option("--length", pa.length, "Arm length (m)")->check(CLI::PositiveNumber);
  predict->add_option("--wavelength", pa.wavelength, "Vacuum wavelength (m)")->check(CLI::PositiveNumber);
  predict->add_option("--index", pa.index, "Effective refractive index")->check(CLI::Range(1.0, 10.0));
  predict->add_option("--g", pa.g, "Local gravitational acceleration (m/s^2)")->check(CLI::PositiveNumber);
  predict->add_option("--rate", pa.rate, "Detected pair rate (Hz)")->check(CLI::PositiveNumber);
  predict->add_option("--visibility", pa.visibility, "Fringe visibility")->check(CLI::Range(0.0, 1.0));
  predict->add_option("--budget", pa.budget, "Loss budget file")->check(CLI::ExistingFile);

  SimulateArgs sa;
  std::uint64_t seed_value = 0;
  auto* simulate = app.add_subcommand("simulate", "Simulate heralded counts from a scenario file");
  simulate->add_option("config", sa.config, "Scenario file (YAML)")->check(CLI::ExistingFile);
  simulate->add_option("--from-manifest", sa.manifest, "Regenerate the run recorded in a manifest")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sa.out, "Output directory (default $KMF_OUT_DIR or ./kmf_out)");
  auto* seed_opt = simulate->add_option("--seed", seed_value, "Override the scenario seed");

  AnalyzeArgs aa;
  double signal_freq = 0.0;
  auto* analyze = app.add_subcommand("analyze", "Spectra, lock-in, recalibration and ADEV of count files");
  analyze->add_option("counts", aa.counts, "Count files (CSV or KMF1); several files are stitched")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--ref-freq", aa.ref_freq, "Calibration dither frequency (Hz)")->check(CLI::PositiveNumber);
  analyze->add_option("--ref-amp", aa.ref_amp, "Calibration dither RMS amplitude (rad)")->check(CLI::PositiveNumber);
  auto* sig_opt = analyze->add_option("--signal-freq", signal_freq, "Signal frequency (Hz)")->check(CLI::PositiveNumber);
  analyze->add_option("--segments", aa.segments, "Recalibration segments per run")->check(CLI::Range(1, 1000));
  analyze->add_option("--lpf", aa.lpf, "Lock-in low-pass cutoff (Hz)")->check(CLI::PositiveNumber);
  analyze->add_option("--visibility", aa.visibility, "Assumed fringe visibility")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--lock-offset", aa.lock_offset, "Lock point (rad)");
  analyze->add_option("--out", aa.out, "Output directory (default $KMF_OUT_DIR or ./kmf_out)");
  analyze->add_flag("--full-spectrum", aa.full_spectrum, "Write every periodogram bin instead of log bands");

  ReproduceArgs ra;
  auto* repro = app.add_subcommand("reproduce", "Run a canned scenario and check it against the reference values");
  repro->add_option("figure", ra.figure, "fig2, fig3a, fig3b or table1")
      ->required()
      ->check(CLI::IsMember(kmf::reproduce_ids()));
  repro->add_option("--seed", ra.seed, "Top-level seed");
  repro->add_option("--threads", ra.threads, "Worker threads for independent scenarios")->check(CLI::Range(1u, 256u));
  repro->add_option("--out", ra.out, "Directory for CSV outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*predict) return run_predict(pa);
    if (*simulate) {
      if (seed_opt->count() > 0) sa.seed = seed_value;
      return run_simulate(sa);
    }
    if (*analyze) {
      if (sig_opt->count() > 0) aa.signal_freq = signal_freq;
      return run_analyze(aa);
    }
    if (*repro) return run_reproduce(ra);
  } catch (const kmf::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const kmf::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
