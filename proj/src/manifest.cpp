#include <chrono>
#include <cstdio>
#include <ctime>

#include <json.hpp>

#include "kmf/error.hpp"
#include "kmf/io.hpp"

#ifndef KMF_VERSION
#define KMF_VERSION "dev"
#endif

namespace kmf {

std::string tool_version() { return KMF_VERSION; }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunManifest make_manifest(const Scenario& scenario) {
  RunManifest m;
  m.scenario_text = scenario_to_text(scenario);
  m.scenario_hash = fnv1a_hex(m.scenario_text);
  m.seed = scenario.seed;
  m.tool_version = tool_version();
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  m.created_utc = buf;
  m.stage_parameters = {
      {"noise_seed_derivation", "derive_seed(seed, 1)"},
      {"photon_seed_derivation", "derive_seed(seed, 2)"},
      {"drift_seed_derivation", "derive_seed(derive_seed(seed, 2), 3)"},
      {"loop_mode", scenario.loop.mode == LoopMode::explicit_pi ? "explicit"
                    : scenario.loop.mode == LoopMode::bypass    ? "bypass"
                                                                : "effective"},
      {"n_bins", std::to_string(scenario.n_bins())},
  };
  return m;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["scenario_hash"] = m.scenario_hash;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["created_utc"] = m.created_utc;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.stage_parameters) stages[k] = v;
  j["stages"] = stages;
  j["scenario"] = m.scenario_text;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  RunManifest m;
  try {
    m.scenario_hash = j.at("scenario_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.created_utc = j.value("created_utc", "");
    m.scenario_text = j.at("scenario").get<std::string>();
    if (j.contains("stages")) {
      for (const auto& [k, v] : j["stages"].items()) m.stage_parameters.emplace_back(k, v.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

Scenario scenario_from_manifest(const RunManifest& m) {
  if (fnv1a_hex(m.scenario_text) != m.scenario_hash) {
    throw ParseError("manifest: scenario text does not match its recorded hash");
  }
  Scenario s = parse_scenario(m.scenario_text);
  if (s.seed != m.seed) throw ParseError("manifest: seed differs from the embedded scenario");
  return s;
}

}  // namespace kmf
