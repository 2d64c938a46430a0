#include "kmf/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kmf/error.hpp"

namespace kmf {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

constexpr char kMagic[4] = {'K', 'M', 'F', '1'};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& field, std::size_t line, const std::string& what) {
  double v = 0.0;
  const std::string t = trim(field);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParseError("row " + std::to_string(line) + ": bad " + what + " '" + t + "'", line, what);
  }
  return v;
}

std::uint32_t parse_count(const std::string& field, std::size_t line, const std::string& what) {
  std::uint64_t v = 0;
  const std::string t = trim(field);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || v > 0xffffffffULL) {
    throw ParseError("row " + std::to_string(line) + ": bad " + what + " count '" + t + "'", line,
                     what);
  }
  return static_cast<std::uint32_t>(v);
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

}  // namespace

void write_counts_csv(std::ostream& out, const CountSeries& cs) {
  cs.validate();
  out << "# fs_hz=" << format_double(cs.bin_rate_hz) << "\n";
  out << "# t0_s=" << format_double(cs.t0_s) << "\n";
  out << "t_s,n1,n2\n";
  for (std::size_t k = 0; k < cs.size(); ++k) {
    out << format_double(cs.t0_s + static_cast<double>(k) / cs.bin_rate_hz) << ',' << cs.n1[k]
        << ',' << cs.n2[k] << '\n';
  }
}

CountSeries read_counts_csv(std::istream& in) {
  CountSeries cs;
  std::optional<double> fs_meta, t0_meta;
  std::vector<double> times;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string val = line.substr(eq + 1);
      if (key == "fs_hz") fs_meta = parse_double(val, line_no, "fs_hz");
      if (key == "t0_s") t0_meta = parse_double(val, line_no, "t0_s");
      continue;
    }
    if (!header_seen) {
      if (trim(line) != "t_s,n1,n2") {
        throw ParseError("row " + std::to_string(line_no) + ": expected header 't_s,n1,n2'", line_no);
      }
      header_seen = true;
      continue;
    }
    std::array<std::string, 3> fields;
    std::size_t n_fields = 0;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) {
      if (n_fields < 3) fields[n_fields] = field;
      ++n_fields;
    }
    if (n_fields != 3) {
      throw ParseError("row " + std::to_string(line_no) + ": expected 3 columns (t_s,n1,n2), found " +
                           std::to_string(n_fields),
                       line_no);
    }
    times.push_back(parse_double(fields[0], line_no, "t_s"));
    cs.n1.push_back(parse_count(fields[1], line_no, "n1"));
    cs.n2.push_back(parse_count(fields[2], line_no, "n2"));
  }
  if (!header_seen) throw ParseError("missing header 't_s,n1,n2'", line_no);
  if (times.empty()) throw ParseError("no data rows", line_no);

  cs.t0_s = t0_meta ? *t0_meta : times.front();
  if (fs_meta) {
    cs.bin_rate_hz = *fs_meta;
  } else if (times.size() >= 2 && times.back() > times.front()) {
    cs.bin_rate_hz = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  } else {
    throw ParseError("cannot infer bin rate: add '# fs_hz=' or more rows", line_no);
  }
  if (!(cs.bin_rate_hz > 0)) throw ParseError("bin rate must be positive", line_no, "fs_hz");
  return cs;
}

void write_counts_binary(std::ostream& out, const CountSeries& cs) {
  cs.validate();
  out.write(kMagic, 4);
  put_le(out, cs.bin_rate_hz);
  put_le(out, cs.t0_s);
  put_le(out, static_cast<std::uint64_t>(cs.size()));
  for (std::size_t k = 0; k < cs.size(); ++k) {
    put_le(out, cs.n1[k]);
    put_le(out, cs.n2[k]);
  }
}

CountSeries read_counts_binary(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a KMF1 counts file (bad magic)");
  }
  CountSeries cs;
  std::uint64_t n = 0;
  if (!get_le(in, cs.bin_rate_hz) || !get_le(in, cs.t0_s) || !get_le(in, n)) {
    throw ParseError("truncated KMF1 header");
  }
  if (!(cs.bin_rate_hz > 0) || !std::isfinite(cs.t0_s)) throw ParseError("invalid KMF1 header values");
  cs.n1.resize(n);
  cs.n2.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    if (!get_le(in, cs.n1[k]) || !get_le(in, cs.n2[k])) {
      throw ParseError("truncated KMF1 data at bin " + std::to_string(k), static_cast<std::size_t>(k + 1));
    }
  }
  return cs;
}

void save_counts_csv(const std::filesystem::path& path, const CountSeries& counts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_counts_csv(out, counts);
  if (!out) throw IoError("write failed for " + path.string());
}

void save_counts_binary(const std::filesystem::path& path, const CountSeries& counts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_counts_binary(out, counts);
  if (!out) throw IoError("write failed for " + path.string());
}

CountSeries load_counts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open counts file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_counts_binary(in) : read_counts_csv(in);
}

LossBudget parse_loss_budget(const std::string& text) {
  LossBudget b;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string f;
    while (std::getline(row, f, ',')) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'label, loss_db[, uncertainty_db]'",
                       line_no);
    }
    LossEntry e;
    e.label = trim(fields[0]);
    e.loss_db = parse_double(fields[1], line_no, "loss_db");
    if (fields.size() == 3) e.uncertainty_db = parse_double(fields[2], line_no, "uncertainty_db");
    b.entries.push_back(e);
  }
  return b;
}

LossBudget load_loss_budget(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open budget file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_loss_budget(ss.str());
}

void write_spectrum_csv(std::ostream& out, const std::vector<std::string>& names,
                        const std::vector<const SpectrumEstimate*>& spectra) {
  if (spectra.empty() || names.size() != spectra.size()) {
    throw DomainError("write_spectrum_csv: one name per spectrum required");
  }
  const auto n = spectra[0]->frequencies.size();
  for (const auto* s : spectra) {
    if (s->frequencies.size() != n) throw DomainError("write_spectrum_csv: spectra on different grids");
  }
  out << "f_hz";
  for (const auto& name : names) out << ",asd_" << name << "_rad_per_rthz";
  out << '\n';
  for (Eigen::Index k = 0; k < n; ++k) {
    out << format_double(spectra[0]->frequencies[k]);
    for (const auto* s : spectra) out << ',' << format_double(s->asd[k]);
    out << '\n';
  }
}

void write_lockin_csv(std::ostream& out, const LockInResult& r) {
  // The low-passed series is heavily oversampled; keep about 10 points per
  // low-pass time constant.
  const auto stride = static_cast<Eigen::Index>(
      std::max(1.0, std::floor(r.fs / (10.0 * r.lpf_cutoff))));
  out << "# f_demod_hz=" << format_double(r.f_demod) << "\n";
  out << "# lpf_cutoff_hz=" << format_double(r.lpf_cutoff) << "\n";
  out << "# reference_phase_rad=" << format_double(r.reference_phase) << "\n";
  out << "# i_mean_rad=" << format_double(r.i_mean) << "\n";
  out << "# i_sem_rad=" << format_double(r.i_sem) << "\n";
  out << "# stride=" << stride << "\n";
  out << "t_s,i_rad,q_rad\n";
  for (Eigen::Index k = 0; k < r.i_series.size(); k += stride) {
    out << format_double(r.t_first + static_cast<double>(k) / r.fs) << ','
        << format_double(r.i_series[k]) << ',' << format_double(r.q_series[k]) << '\n';
  }
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationResult>& runs, double fs) {
  out << "run,segment,begin_bin,end_bin,duration_s,scale\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t s = 0; s < runs[r].per_segment_scale.size(); ++s) {
      const auto [b, e] = runs[r].segment_bounds[s];
      out << r << ',' << s << ',' << b << ',' << e << ','
          << format_double(static_cast<double>(e - b) / fs) << ','
          << format_double(runs[r].per_segment_scale[s]) << '\n';
    }
  }
}

void write_adev_csv(std::ostream& out, const AdevResult& r, const PowerLawFit* fit) {
  out << "tau_s,sigma,sigma_err\n";
  for (std::size_t k = 0; k < r.taus.size(); ++k) {
    out << format_double(r.taus[k]) << ',' << format_double(r.sigma[k]) << ','
        << format_double(r.sigma_err[k]) << '\n';
  }
  out << "# error_model=" << (r.white_noise_error_model ? "white_noise_edf" : "unknown") << "\n";
  if (fit) {
    out << "# fit_level_at_1s=" << format_double(fit->level) << "\n";
    out << "# fit_slope=" << format_double(fit->slope) << "\n";
    out << "# white_noise_consistent=" << (fit->white_noise_consistent() ? "true" : "false") << "\n";
  }
}

}  // namespace kmf
