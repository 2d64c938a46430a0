// YAML scenario and noise-model files.

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "kmf/error.hpp"
#include "kmf/io.hpp"

namespace kmf {

namespace {

std::size_t line_of(const YAML::Node& node) {
  return static_cast<std::size_t>(node.Mark().line + 1);
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& what) {
  throw ParseError("line " + std::to_string(line_of(node)) + ", key '" + key + "': " + what,
                   line_of(node), key);
}

void require_map(const YAML::Node& node, const std::string& key) {
  if (!node.IsMap()) fail(node, key, "expected a mapping");
}

void check_keys(const YAML::Node& node, const std::string& where,
                const std::set<std::string>& allowed) {
  require_map(node, where);
  for (const auto& kv : node) {
    const auto name = kv.first.as<std::string>();
    if (!allowed.count(name)) {
      fail(kv.first, where.empty() ? name : where + "." + name, "unknown key");
    }
  }
}

template <typename T>
void read(const YAML::Node& parent, const std::string& where, const char* key, T& target) {
  const YAML::Node v = parent[key];
  if (!v) return;
  const std::string full = where.empty() ? key : where + "." + key;
  if (!v.IsScalar()) fail(v, full, "expected a scalar value");
  try {
    target = v.as<T>();
  } catch (const YAML::Exception&) {
    fail(v, full, "cannot convert '" + v.Scalar() + "'");
  }
}

NoiseKind parse_noise_kind(const YAML::Node& v, const std::string& key) {
  const auto s = v.as<std::string>();
  if (s == "white") return NoiseKind::white;
  if (s == "power_law") return NoiseKind::power_law;
  if (s == "tone") return NoiseKind::tone;
  if (s == "harmonic_comb") return NoiseKind::harmonic_comb;
  fail(v, key, "unknown noise kind '" + s + "'");
}

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::power_law: return "power_law";
    case NoiseKind::tone: return "tone";
    case NoiseKind::harmonic_comb: return "harmonic_comb";
  }
  return "white";
}

const char* loop_mode_name(LoopMode m) {
  switch (m) {
    case LoopMode::effective: return "effective";
    case LoopMode::explicit_pi: return "explicit";
    case LoopMode::bypass: return "bypass";
  }
  return "effective";
}

const char* drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::constant: return "constant";
    case DriftKind::linear: return "linear";
    case DriftKind::bounded_random_walk: return "bounded_random_walk";
  }
  return "constant";
}

std::vector<NoiseComponent> parse_components(const YAML::Node& list, const std::string& where) {
  std::vector<NoiseComponent> out;
  if (!list) return out;
  if (!list.IsSequence()) fail(list, where, "expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const YAML::Node c = list[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    check_keys(c, at,
               {"kind", "level_rad_per_rthz", "level_rad_rms", "exponent_alpha", "frequency_hz",
                "n_harmonics", "phase_rad"});
    if (!c["kind"]) fail(c, at + ".kind", "missing noise kind");
    NoiseComponent nc;
    nc.kind = parse_noise_kind(c["kind"], at + ".kind");
    const bool spectral = nc.kind == NoiseKind::white || nc.kind == NoiseKind::power_law;
    const char* level_key = spectral ? "level_rad_per_rthz" : "level_rad_rms";
    const char* wrong_key = spectral ? "level_rad_rms" : "level_rad_per_rthz";
    if (c[wrong_key]) fail(c[wrong_key], at + "." + wrong_key, "wrong level unit for this kind");
    read(c, at, level_key, nc.level);
    read(c, at, "exponent_alpha", nc.exponent_alpha);
    read(c, at, "frequency_hz", nc.frequency_hz);
    read(c, at, "n_harmonics", nc.n_harmonics);
    read(c, at, "phase_rad", nc.phase_rad);
    try {
      nc.validate();
    } catch (const DomainError& e) {
      fail(c, at, e.what());
    }
    out.push_back(nc);
  }
  return out;
}

void emit_components(std::ostream& out, const std::vector<NoiseComponent>& comps,
                     const std::string& indent) {
  if (comps.empty()) {
    out << indent << "components: []\n";
    return;
  }
  out << indent << "components:\n";
  for (const auto& c : comps) {
    const bool spectral = c.kind == NoiseKind::white || c.kind == NoiseKind::power_law;
    out << indent << "  - kind: " << noise_kind_name(c.kind) << "\n";
    out << indent << "    " << (spectral ? "level_rad_per_rthz" : "level_rad_rms") << ": "
        << format_double(c.level) << "\n";
    if (c.kind == NoiseKind::power_law) {
      out << indent << "    exponent_alpha: " << format_double(c.exponent_alpha) << "\n";
    }
    if (!spectral) {
      out << indent << "    frequency_hz: " << format_double(c.frequency_hz) << "\n";
      out << indent << "    phase_rad: " << format_double(c.phase_rad) << "\n";
    }
    if (c.kind == NoiseKind::harmonic_comb) {
      out << indent << "    n_harmonics: " << c.n_harmonics << "\n";
    }
  }
}

YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg,
                     static_cast<std::size_t>(e.mark.line + 1));
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  const YAML::Node root = load_yaml(text);
  if (!root || root.IsNull()) throw ParseError("empty scenario file", 1);
  check_keys(root, "",
             {"seed", "duration_s", "t0_s", "interferometer", "noise", "loop", "drift", "injections"});

  Scenario s;
  s.noise.components.clear();
  s.injections.clear();
  read(root, "", "seed", s.seed);
  read(root, "", "duration_s", s.duration_s);
  read(root, "", "t0_s", s.t0_s);

  if (const YAML::Node ifo = root["interferometer"]) {
    check_keys(ifo, "interferometer",
               {"arm_length_m", "height_diff_m", "wavelength_m", "refractive_index", "visibility",
                "lock_offset_rad", "detected_pair_rate_hz", "bin_rate_hz"});
    const std::string w = "interferometer";
    read(ifo, w, "arm_length_m", s.cfg.arm_length_m);
    read(ifo, w, "height_diff_m", s.cfg.height_diff_m);
    read(ifo, w, "wavelength_m", s.cfg.wavelength_m);
    read(ifo, w, "refractive_index", s.cfg.refractive_index);
    read(ifo, w, "visibility", s.cfg.visibility);
    read(ifo, w, "lock_offset_rad", s.cfg.lock_offset_rad);
    read(ifo, w, "detected_pair_rate_hz", s.cfg.detected_pair_rate_hz);
    read(ifo, w, "bin_rate_hz", s.cfg.bin_rate_hz);
  }
  if (const YAML::Node noise = root["noise"]) {
    check_keys(noise, "noise", {"components"});
    s.noise.components = parse_components(noise["components"], "noise.components");
  }
  if (const YAML::Node loop = root["loop"]) {
    check_keys(loop, "loop",
               {"mode", "unity_gain_hz", "ctrl_rate_hz", "kp", "ki_fast", "ki_slow",
                "fast_range_rad", "slow_bandwidth_hz"});
    if (const YAML::Node m = loop["mode"]) {
      const auto name = m.as<std::string>();
      if (name == "effective") s.loop.mode = LoopMode::effective;
      else if (name == "explicit") s.loop.mode = LoopMode::explicit_pi;
      else if (name == "bypass") s.loop.mode = LoopMode::bypass;
      else fail(m, "loop.mode", "expected effective, explicit or bypass");
    }
    read(loop, "loop", "unity_gain_hz", s.loop.unity_gain_hz);
    read(loop, "loop", "ctrl_rate_hz", s.loop.ctrl_rate_hz);
    read(loop, "loop", "kp", s.loop.kp);
    read(loop, "loop", "ki_fast", s.loop.ki_fast);
    read(loop, "loop", "ki_slow", s.loop.ki_slow);
    read(loop, "loop", "fast_range_rad", s.loop.fast_range_rad);
    read(loop, "loop", "slow_bandwidth_hz", s.loop.slow_bandwidth_hz);
  }
  if (const YAML::Node drift = root["drift"]) {
    check_keys(drift, "drift", {"kind", "v_start", "v_end", "walk_step_per_hour"});
    if (const YAML::Node k = drift["kind"]) {
      const auto name = k.as<std::string>();
      if (name == "constant") s.drift.kind = DriftKind::constant;
      else if (name == "linear") s.drift.kind = DriftKind::linear;
      else if (name == "bounded_random_walk") s.drift.kind = DriftKind::bounded_random_walk;
      else fail(k, "drift.kind", "expected constant, linear or bounded_random_walk");
    }
    read(drift, "drift", "v_start", s.drift.v_start);
    read(drift, "drift", "v_end", s.drift.v_end);
    read(drift, "drift", "walk_step_per_hour", s.drift.walk_step_per_hour);
  }
  if (const YAML::Node inj = root["injections"]) {
    if (!inj.IsSequence()) fail(inj, "injections", "expected a list");
    for (std::size_t i = 0; i < inj.size(); ++i) {
      const std::string at = "injections[" + std::to_string(i) + "]";
      check_keys(inj[i], at, {"frequency_hz", "rms_amplitude_rad", "phase_rad"});
      SignalSpec sig;
      read(inj[i], at, "frequency_hz", sig.frequency_hz);
      read(inj[i], at, "rms_amplitude_rad", sig.rms_amplitude_rad);
      read(inj[i], at, "phase_rad", sig.phase_rad);
      s.injections.push_back(sig);
    }
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_text(const Scenario& s) {
  std::ostringstream out;
  out << "seed: " << s.seed << "\n";
  out << "duration_s: " << format_double(s.duration_s) << "\n";
  out << "t0_s: " << format_double(s.t0_s) << "\n";
  out << "interferometer:\n";
  out << "  arm_length_m: " << format_double(s.cfg.arm_length_m) << "\n";
  out << "  height_diff_m: " << format_double(s.cfg.height_diff_m) << "\n";
  out << "  wavelength_m: " << format_double(s.cfg.wavelength_m) << "\n";
  out << "  refractive_index: " << format_double(s.cfg.refractive_index) << "\n";
  out << "  visibility: " << format_double(s.cfg.visibility) << "\n";
  out << "  lock_offset_rad: " << format_double(s.cfg.lock_offset_rad) << "\n";
  out << "  detected_pair_rate_hz: " << format_double(s.cfg.detected_pair_rate_hz) << "\n";
  out << "  bin_rate_hz: " << format_double(s.cfg.bin_rate_hz) << "\n";
  out << "noise:\n";
  emit_components(out, s.noise.components, "  ");
  out << "loop:\n";
  out << "  mode: " << loop_mode_name(s.loop.mode) << "\n";
  out << "  unity_gain_hz: " << format_double(s.loop.unity_gain_hz) << "\n";
  out << "  ctrl_rate_hz: " << format_double(s.loop.ctrl_rate_hz) << "\n";
  out << "  kp: " << format_double(s.loop.kp) << "\n";
  out << "  ki_fast: " << format_double(s.loop.ki_fast) << "\n";
  out << "  ki_slow: " << format_double(s.loop.ki_slow) << "\n";
  out << "  fast_range_rad: " << format_double(s.loop.fast_range_rad) << "\n";
  out << "  slow_bandwidth_hz: " << format_double(s.loop.slow_bandwidth_hz) << "\n";
  out << "drift:\n";
  out << "  kind: " << drift_kind_name(s.drift.kind) << "\n";
  out << "  v_start: " << format_double(s.drift.v_start) << "\n";
  out << "  v_end: " << format_double(s.drift.v_end) << "\n";
  out << "  walk_step_per_hour: " << format_double(s.drift.walk_step_per_hour) << "\n";
  if (s.injections.empty()) {
    out << "injections: []\n";
  } else {
    out << "injections:\n";
    for (const auto& inj : s.injections) {
      out << "  - frequency_hz: " << format_double(inj.frequency_hz) << "\n";
      out << "    rms_amplitude_rad: " << format_double(inj.rms_amplitude_rad) << "\n";
      out << "    phase_rad: " << format_double(inj.phase_rad) << "\n";
    }
  }
  return out.str();
}

NoiseModel parse_noise_model(const std::string& text) {
  const YAML::Node root = load_yaml(text);
  if (!root || root.IsNull()) throw ParseError("empty noise model", 1);
  check_keys(root, "", {"seed", "components"});
  NoiseModel m;
  read(root, "", "seed", m.seed);
  m.components = parse_components(root["components"], "components");
  return m;
}

std::string noise_model_to_text(const NoiseModel& model) {
  std::ostringstream out;
  out << "seed: " << model.seed << "\n";
  emit_components(out, model.components, "");
  return out.str();
}

}  // namespace kmf
