#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kmf/adev.hpp"
#include "kmf/dsp.hpp"
#include "kmf/model.hpp"
#include "kmf/sim.hpp"

namespace kmf {

// --- counts ---------------------------------------------------------------
//
// CSV: optional "# fs_hz=..." and "# t0_s=..." comment lines, then the header
// "t_s,n1,n2" and one row per bin (t_s = bin start). LF line endings.
//
// Binary (little-endian): "KMF1", fs (f64), t0 (f64), n_bins (u64), then
// n_bins pairs of u32 counts (n1, n2).

void write_counts_csv(std::ostream& out, const CountSeries& counts);
CountSeries read_counts_csv(std::istream& in);
void write_counts_binary(std::ostream& out, const CountSeries& counts);
CountSeries read_counts_binary(std::istream& in);

void save_counts_csv(const std::filesystem::path& path, const CountSeries& counts);
void save_counts_binary(const std::filesystem::path& path, const CountSeries& counts);
/// Picks the format from the file's first bytes.
CountSeries load_counts(const std::filesystem::path& path);

// --- configuration --------------------------------------------------------

/// Parses the YAML scenario description. Errors carry line and key.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical text form; parse_scenario(scenario_to_text(s)) reproduces s.
std::string scenario_to_text(const Scenario& scenario);

NoiseModel parse_noise_model(const std::string& text);
std::string noise_model_to_text(const NoiseModel& model);

/// Loss budget text: one "label, loss_db, uncertainty_db" entry per line;
/// '#' starts a comment.
LossBudget parse_loss_budget(const std::string& text);
LossBudget load_loss_budget(const std::filesystem::path& path);

// --- analysis outputs -----------------------------------------------------

std::string format_double(double v);  // shortest form that round-trips

void write_spectrum_csv(std::ostream& out, const std::vector<std::string>& names,
                        const std::vector<const SpectrumEstimate*>& spectra);
void write_lockin_csv(std::ostream& out, const LockInResult& result);
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationResult>& runs,
                           double fs);
void write_adev_csv(std::ostream& out, const AdevResult& result, const PowerLawFit* fit);

// --- manifests ------------------------------------------------------------

struct RunManifest {
  std::string scenario_hash;  // FNV-1a 64 of the canonical scenario text, hex
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string created_utc;
  std::string scenario_text;
  std::vector<std::pair<std::string, std::string>> stage_parameters;
};

std::string tool_version();
std::string fnv1a_hex(const std::string& text);
RunManifest make_manifest(const Scenario& scenario);
std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
/// Rebuilds the scenario recorded in a manifest, checking its hash.
Scenario scenario_from_manifest(const RunManifest& manifest);

}  // namespace kmf
