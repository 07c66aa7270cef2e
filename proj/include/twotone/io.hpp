// Copyright 2026 The twotone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Configuration files, the binary map format, dataset manifests and the
// seeded dataset generator.
//
// Map file layout:
//   "WTMAP1\n"
//   one line of JSON (header), terminated by '\n'
//   n_freq * n_time IEEE-754 binary64 values, little-endian, row-major
//   (rows = drive frequency).
//
// Manifest layout (manifest.jsonl): a header object with "format":
// "WTMANIFEST1", followed by one JSON object per map.
//
// Parameter sampling uses std::mt19937_64 seeded by
// std::seed_seq{seed_lo, seed_hi, index_lo, index_hi} (32-bit halves of the
// dataset seed and map index); uniform variates are (x >> 11) * 2^-53, scaled
// to [lo, hi). Both are fully specified by the C++ standard, so datasets are
// portable across conforming implementations.

#ifndef TWOTONE_IO_HPP
#define TWOTONE_IO_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "twotone/common.hpp"
#include "twotone/model.hpp"
#include "twotone/protocol.hpp"

namespace twotone {

using Json = nlohmann::json;

inline constexpr int kConfigVersion = 1;
inline constexpr char kMapMagic[] = "WTMAP1\n";
inline constexpr int kMapVersion = 1;
inline constexpr char kManifestMagic[] = "WTMANIFEST1";
inline constexpr char kPrngName[] = "mt19937_64/seed_seq(seed_lo,seed_hi,index_lo,index_hi)/u53";

/// Uniform sampling box for one dataset TLS. Times in seconds.
struct DatasetRanges {
  std::array<double, 2> omega{6.8e9, 7.2e9};
  std::array<double, 2> coupling{5e6, 50e6};
  std::array<double, 2> t1{0.5e-6, 10e-6};
  std::array<double, 2> tphi{0.5e-6, 30e-6};
};

struct DatasetSettings {
  int n_maps = 100;
  int n_tls = 2;
  DatasetRanges ranges;
  /// Redraw a TLS while g/|omega_q - omega_k| exceeds this; 0 disables.
  double max_coupling_ratio = 0.0;
  /// Calibration floor used while generating datasets; 0 disables the check.
  double min_calibration_population = 0.0;
};

struct SteadySettings {
  int tls = 0;
  /// Drive frequency, Hz; unset means the dressed |01> line.
  std::optional<double> drive_frequency;
  /// Drive amplitude, Hz; unset means the pulse-A amplitude.
  std::optional<double> amplitude;
};

struct AnalysisSettings {
  double contrast_threshold = 0.05;
  double proximity_steps = 3.0;
};

/// Everything a CLI run needs. Rates enter the file as T1 / T_phi (seconds).
struct Config {
  SystemSpec spec;
  MapGrid grid = MapGrid::default_grid();
  double pulse_a_amplitude = kDefaultPulseAAmplitude;
  CalibrationOptions calibration;
  bool decoherence = true;
  int max_dimension = tol::kMaxDimension;
  std::uint64_t seed = 0;
  DatasetSettings dataset;
  SteadySettings steady;
  AnalysisSettings analysis;
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  /// Rejects keys not in `allowed`.
  void allow(std::initializer_list<const char*> allowed) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw ValidationError(key(it.key()), "unknown key");
    }
  }

  bool has(const char* k) const { return node_.contains(k) && !node_.at(k).is_null(); }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  double number(const char* k) const {
    const Json& v = node_.at(k);
    if (!v.is_number()) throw ValidationError(key(k), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(key(k), "must be finite");
    return x;
  }

  double number(const char* k, double fallback) const { return has(k) ? number(k) : fallback; }

  long long integer(const char* k, long long fallback) const {
    if (!has(k)) return fallback;
    const Json& v = node_.at(k);
    if (!v.is_number_integer()) throw ValidationError(key(k), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    const Json& v = node_.at(k);
    if (!v.is_boolean()) throw ValidationError(key(k), "expected true or false");
    return v.get<bool>();
  }

  std::array<double, 2> range(const char* k, std::array<double, 2> fallback) const {
    if (!has(k)) return fallback;
    const Json& v = node_.at(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ValidationError(key(k), "expected [lo, hi]");
    std::array<double, 2> r{v[0].get<double>(), v[1].get<double>()};
    if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || r[0] > r[1])
      throw ValidationError(key(k), "expected finite lo <= hi");
    return r;
  }

  ConfigReader child(const char* k) const { return ConfigReader(node_.at(k), key(k)); }
  const Json& raw(const char* k) const { return node_.at(k); }

 private:
  const Json& node_;
  std::string path_;
};

inline double positive(const ConfigReader& r, const char* k, double fallback) {
  const double v = r.number(k, fallback);
  if (!(v > 0.0)) throw ValidationError(r.key(k), "must be > 0");
  return v;
}

inline double non_negative(const ConfigReader& r, const char* k, double fallback) {
  const double v = r.number(k, fallback);
  if (!(v >= 0.0)) throw ValidationError(r.key(k), "must be >= 0");
  return v;
}

// T1 / T_phi: absent, null or 0 mean "no decay".
inline double lifetime(const ConfigReader& r, const char* k) {
  const double v = r.number(k, 0.0);
  if (v < 0.0) throw ValidationError(r.key(k), "must be >= 0 (0 disables)");
  return v;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // The parser reports the byte just past the offending token.
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ValidationError("", "config parse error at line " + std::to_string(line) + ", column " +
                                  std::to_string(col));
  }
  using detail::ConfigReader;
  const ConfigReader r(root, "");
  r.allow({"version", "transmon", "tls", "grid", "pulse_a", "pulse_b", "calibration",
           "decoherence", "max_dimension", "seed", "dataset", "steady", "analysis", "comment"});
  if (r.integer("version", kConfigVersion) != kConfigVersion)
    throw ValidationError("version", "unsupported config version");

  Config c;
  if (!r.has("transmon")) throw ValidationError("transmon", "required");
  {
    const auto q = r.child("transmon");
    q.allow({"omega_q", "anharmonicity", "t1", "tphi", "n_levels"});
    if (!q.has("omega_q")) throw ValidationError(q.key("omega_q"), "required");
    c.spec.transmon.omega_q = detail::positive(q, "omega_q", 0.0);
    c.spec.transmon.anharmonicity = detail::positive(q, "anharmonicity", 0.0);
    c.spec.transmon.gamma = rate_from_t1(detail::lifetime(q, "t1"));
    c.spec.transmon.kappa = rate_from_tphi(detail::lifetime(q, "tphi"));
    const long long nl = q.integer("n_levels", 3);
    if (nl < 2 || nl > 64) throw ValidationError(q.key("n_levels"), "must be in [2, 64]");
    c.spec.transmon.n_levels = static_cast<int>(nl);
  }
  if (r.has("tls")) {
    const Json& arr = r.raw("tls");
    if (!arr.is_array()) throw ValidationError("tls", "expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const ConfigReader t(arr[k], "tls[" + std::to_string(k) + "]");
      t.allow({"omega", "coupling", "lambda", "t1", "tphi"});
      if (!t.has("omega")) throw ValidationError(t.key("omega"), "required");
      TlsParams p;
      p.omega = detail::positive(t, "omega", 0.0);
      p.coupling = detail::non_negative(t, "coupling", 0.0);
      p.lambda = detail::non_negative(t, "lambda", 0.0);
      p.gamma = rate_from_t1(detail::lifetime(t, "t1"));
      p.kappa = rate_from_tphi(detail::lifetime(t, "tphi"));
      c.spec.tls.push_back(p);
    }
  }
  c.decoherence = r.boolean("decoherence", true);
  if (!c.decoherence) c.spec = without_decoherence(c.spec);
  const long long cap = r.integer("max_dimension", tol::kMaxDimension);
  if (cap < 2) throw ValidationError("max_dimension", "must be >= 2");
  c.max_dimension = static_cast<int>(std::min<long long>(cap, 1 << 12));
  validate(c.spec, c.max_dimension);

  if (r.has("grid")) {
    const auto g = r.child("grid");
    g.allow({"drive_start", "drive_stop", "drive_step", "duration_start", "duration_step",
             "duration_count"});
    const double f0 = detail::positive(g, "drive_start", 6.8e9);
    const double f1 = detail::positive(g, "drive_stop", 7.2e9);
    const double df = detail::positive(g, "drive_step", 2e6);
    const double t0 = detail::non_negative(g, "duration_start", 0.0);
    const double dt = detail::positive(g, "duration_step", 10e-9);
    const long long nt = g.integer("duration_count", 201);
    if (nt < 1 || nt > 1000000) throw ValidationError(g.key("duration_count"), "must be in [1, 1e6]");
    if (f1 < f0) throw ValidationError(g.key("drive_stop"), "must be >= drive_start");
    if ((f1 - f0) / df > 1e6) throw ValidationError(g.key("drive_step"), "too many frequencies");
    if (std::abs(t0) > 1e-9 * dt && std::abs(t0 - dt) > 1e-9 * dt)
      throw ValidationError(g.key("duration_start"), "must be 0 or duration_step");
    c.grid = MapGrid::uniform(f0, f1, df, t0, dt, static_cast<int>(nt));
  }
  if (r.has("pulse_a")) {
    const auto p = r.child("pulse_a");
    p.allow({"amplitude"});
    c.pulse_a_amplitude = detail::non_negative(p, "amplitude", kDefaultPulseAAmplitude);
  }
  if (r.has("pulse_b")) {
    const auto p = r.child("pulse_b");
    p.allow({"amplitude", "duration"});
    c.calibration.amplitude = detail::positive(p, "amplitude", kDefaultPulseBAmplitude);
    c.calibration.t_pi = detail::positive(p, "duration", kDefaultPiPulseLength);
  }
  if (r.has("calibration")) {
    const auto p = r.child("calibration");
    p.allow({"scan_step", "refine_tolerance", "min_population"});
    c.calibration.scan_step = detail::positive(p, "scan_step", c.calibration.scan_step);
    c.calibration.refine_tolerance =
        detail::positive(p, "refine_tolerance", c.calibration.refine_tolerance);
    c.calibration.min_population =
        detail::non_negative(p, "min_population", c.calibration.min_population);
    if (c.calibration.min_population > 1.0)
      throw ValidationError(p.key("min_population"), "must be <= 1");
  }
  if (r.has("seed")) {
    const Json& s = r.raw("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ValidationError("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (r.has("dataset")) {
    const auto d = r.child("dataset");
    d.allow({"n_maps", "n_tls", "omega", "coupling", "t1", "tphi", "max_coupling_ratio",
             "min_calibration_population"});
    const long long n = d.integer("n_maps", c.dataset.n_maps);
    if (n < 1 || n > 10000000) throw ValidationError(d.key("n_maps"), "must be >= 1");
    const long long k = d.integer("n_tls", c.dataset.n_tls);
    if (k < 0 || k > 16) throw ValidationError(d.key("n_tls"), "must be in [0, 16]");
    c.dataset.n_maps = static_cast<int>(n);
    c.dataset.n_tls = static_cast<int>(k);
    auto& rg = c.dataset.ranges;
    rg.omega = d.range("omega", rg.omega);
    rg.coupling = d.range("coupling", rg.coupling);
    rg.t1 = d.range("t1", rg.t1);
    rg.tphi = d.range("tphi", rg.tphi);
    if (!(rg.omega[0] > 0.0)) throw ValidationError(d.key("omega"), "must be > 0");
    if (!(rg.coupling[0] >= 0.0)) throw ValidationError(d.key("coupling"), "must be >= 0");
    if (!(rg.t1[0] > 0.0)) throw ValidationError(d.key("t1"), "must be > 0");
    if (!(rg.tphi[0] > 0.0)) throw ValidationError(d.key("tphi"), "must be > 0");
    c.dataset.max_coupling_ratio = detail::non_negative(d, "max_coupling_ratio", 0.0);
    c.dataset.min_calibration_population =
        detail::non_negative(d, "min_calibration_population", 0.0);
    SystemSpec probe = c.spec;
    probe.tls.assign(static_cast<std::size_t>(c.dataset.n_tls), TlsParams{rg.omega[0], 0, 0, 0, 0});
    validate(probe, c.max_dimension);
  }
  if (r.has("steady")) {
    const auto s = r.child("steady");
    s.allow({"tls", "drive_frequency", "amplitude"});
    const long long k = s.integer("tls", 0);
    if (k < 0 || k >= c.spec.n_tls()) throw ValidationError(s.key("tls"), "TLS index out of range");
    c.steady.tls = static_cast<int>(k);
    if (s.has("drive_frequency")) c.steady.drive_frequency = detail::positive(s, "drive_frequency", 0);
    if (s.has("amplitude")) c.steady.amplitude = detail::non_negative(s, "amplitude", 0);
  }
  if (r.has("analysis")) {
    const auto a = r.child("analysis");
    a.allow({"contrast_threshold", "proximity_steps"});
    c.analysis.contrast_threshold = detail::positive(a, "contrast_threshold", 0.05);
    c.analysis.proximity_steps = detail::positive(a, "proximity_steps", 3.0);
  }
  return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

inline Config load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

// ---------------------------------------------------------------------------
// JSON snapshots. Rates are stored as rates so that the round trip is exact.

inline Json to_json(const SystemSpec& spec) {
  Json tls = Json::array();
  for (const auto& t : spec.tls) {
    tls.push_back({{"omega", t.omega},
                   {"coupling", t.coupling},
                   {"lambda", t.lambda},
                   {"gamma", t.gamma},
                   {"kappa", t.kappa}});
  }
  const auto& q = spec.transmon;
  return {{"transmon",
           {{"omega_q", q.omega_q},
            {"anharmonicity", q.anharmonicity},
            {"gamma", q.gamma},
            {"kappa", q.kappa},
            {"n_levels", q.n_levels}}},
          {"tls", tls}};
}

inline SystemSpec spec_from_json(const Json& j) {
  try {
    SystemSpec s;
    const Json& q = j.at("transmon");
    s.transmon.omega_q = q.at("omega_q").get<double>();
    s.transmon.anharmonicity = q.at("anharmonicity").get<double>();
    s.transmon.gamma = q.at("gamma").get<double>();
    s.transmon.kappa = q.at("kappa").get<double>();
    s.transmon.n_levels = q.at("n_levels").get<int>();
    for (const Json& t : j.at("tls")) {
      s.tls.push_back({t.at("omega").get<double>(), t.at("coupling").get<double>(),
                       t.at("lambda").get<double>(), t.at("gamma").get<double>(),
                       t.at("kappa").get<double>()});
    }
    return s;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed spec snapshot: ") + e.what());
  }
}

inline Json to_json(const PulseBCalibration& c) {
  return {{"omega_tilde_q", c.omega_tilde_q},
          {"t_pi", c.t_pi},
          {"amplitude", c.amplitude},
          {"achieved_population", c.achieved_population}};
}

// ---------------------------------------------------------------------------
// Map files

struct MapFileContents {
  OmegaTMap map;
  /// Full header, including any caller-supplied extras.
  Json header;
};

namespace detail {

inline void put_f64le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline double get_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

inline void write_file_atomically(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace detail

inline Json map_header(const OmegaTMap& map, const Json& extra = Json::object()) {
  Json h = {{"format", "WTMAP1"},
            {"version", kMapVersion},
            {"n_freq", map.values.rows()},
            {"n_time", map.values.cols()},
            {"dtype", "f64le"},
            {"order", "row-major"},
            {"drive_frequencies", map.grid.drive_frequencies},
            {"durations", map.grid.durations},
            {"pulse_a_amplitude", map.pulse_a_amplitude},
            {"spec", to_json(map.spec)},
            {"calibration", to_json(map.calibration)}};
  if (!extra.is_null()) {
    for (auto it = extra.begin(); it != extra.end(); ++it) {
      if (h.contains(it.key())) throw ValidationError(it.key(), "reserved map header key");
      h[it.key()] = it.value();
    }
  }
  return h;
}

inline std::string serialize_map(const OmegaTMap& map, const Json& extra = Json::object()) {
  if (static_cast<std::size_t>(map.values.rows()) != map.grid.n_freq() ||
      static_cast<std::size_t>(map.values.cols()) != map.grid.n_time())
    throw DimensionError("map values do not match grid axes");
  std::string out = kMapMagic;
  out += map_header(map, extra).dump();
  out.push_back('\n');
  out.reserve(out.size() + 8 * static_cast<std::size_t>(map.values.size()));
  for (Eigen::Index i = 0; i < map.values.rows(); ++i)
    for (Eigen::Index n = 0; n < map.values.cols(); ++n) detail::put_f64le(out, map.values(i, n));
  return out;
}

inline MapFileContents parse_map(const std::string& bytes) {
  const std::size_t magic_len = std::strlen(kMapMagic);
  if (bytes.size() < magic_len || bytes.compare(0, magic_len, kMapMagic) != 0)
    throw IoError("not a map file (bad magic)");
  const std::size_t eol = bytes.find('\n', magic_len);
  if (eol == std::string::npos) throw IoError("map file: unterminated header");
  MapFileContents out;
  try {
    out.header = Json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                             bytes.begin() + static_cast<std::ptrdiff_t>(eol));
    const Json& h = out.header;
    if (h.at("format") != "WTMAP1" || h.at("version").get<int>() != kMapVersion)
      throw IoError("map file: unsupported format version");
    if (h.at("dtype") != "f64le" || h.at("order") != "row-major")
      throw IoError("map file: unsupported payload layout");
    const auto nf = h.at("n_freq").get<std::size_t>();
    const auto nt = h.at("n_time").get<std::size_t>();
    out.map.grid.drive_frequencies = h.at("drive_frequencies").get<std::vector<double>>();
    out.map.grid.durations = h.at("durations").get<std::vector<double>>();
    if (out.map.grid.n_freq() != nf || out.map.grid.n_time() != nt)
      throw IoError("map file: axis lengths do not match dimensions");
    const std::size_t payload = bytes.size() - eol - 1;
    if (nf != 0 && nt > (SIZE_MAX / 8) / nf) throw IoError("map file: dimensions overflow");
    if (payload != 8 * nf * nt) {
      throw IoError("map file: payload is " + std::to_string(payload) + " bytes, expected " +
                    std::to_string(8 * nf * nt));
    }
    out.map.pulse_a_amplitude = h.at("pulse_a_amplitude").get<double>();
    out.map.spec = spec_from_json(h.at("spec"));
    const Json& c = h.at("calibration");
    out.map.calibration = {c.at("omega_tilde_q").get<double>(), c.at("t_pi").get<double>(),
                           c.at("amplitude").get<double>(),
                           c.at("achieved_population").get<double>()};
    out.map.values.resize(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nt));
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + eol + 1;
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t n = 0; n < nt; ++n, p += 8)
        out.map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) =
            detail::get_f64le(p);
  } catch (const Json::exception& e) {
    throw IoError(std::string("map file: malformed header: ") + e.what());
  }
  return out;
}

inline void write_map(const std::filesystem::path& path, const OmegaTMap& map,
                      const Json& extra = Json::object()) {
  detail::write_file_atomically(path, serialize_map(map, extra));
}

inline MapFileContents read_map(const std::filesystem::path& path) {
  return parse_map(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Seeded sampling

/// Independent generator for map `index` of a dataset seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform in [lo, hi) from the top 53 bits of one draw.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Ground-truth TLS parameters of one dataset map, sorted by frequency.
struct TlsLabel {
  double omega = 0.0;
  double coupling = 0.0;
  double t1 = 0.0;
  double tphi = 0.0;
};

inline std::vector<TlsLabel> sample_tls(std::uint64_t seed, std::uint64_t index,
                                        const DatasetSettings& d, double omega_q) {
  auto rng = substream(seed, index);
  std::vector<TlsLabel> out;
  for (int k = 0; k < d.n_tls; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 100000)
        throw ValidationError("dataset.max_coupling_ratio", "rejection sampling does not terminate");
      TlsLabel t;
      t.omega = uniform(rng, d.ranges.omega[0], d.ranges.omega[1]);
      t.coupling = uniform(rng, d.ranges.coupling[0], d.ranges.coupling[1]);
      t.t1 = uniform(rng, d.ranges.t1[0], d.ranges.t1[1]);
      t.tphi = uniform(rng, d.ranges.tphi[0], d.ranges.tphi[1]);
      if (d.max_coupling_ratio <= 0.0 ||
          t.coupling <= d.max_coupling_ratio * std::abs(omega_q - t.omega)) {
        out.push_back(t);
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TlsLabel& a, const TlsLabel& b) { return a.omega < b.omega; });
  return out;
}

/// `base` with its TLS list replaced by `labels` (lambda = 0).
inline SystemSpec spec_with_tls(SystemSpec base, const std::vector<TlsLabel>& labels,
                                bool decoherence = true) {
  base.tls.clear();
  for (const auto& l : labels)
    base.tls.push_back({l.omega, l.coupling, 0.0, rate_from_t1(l.t1), rate_from_tphi(l.tphi)});
  return decoherence ? base : without_decoherence(base);
}

inline Json to_json(const std::vector<TlsLabel>& labels) {
  Json j = {{"omega", Json::array()}, {"coupling", Json::array()}, {"t1", Json::array()},
            {"tphi", Json::array()}};
  for (const auto& l : labels) {
    j["omega"].push_back(l.omega);
    j["coupling"].push_back(l.coupling);
    j["t1"].push_back(l.t1);
    j["tphi"].push_back(l.tphi);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Datasets

struct ManifestRecord {
  std::string file;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<TlsLabel> labels;
};

struct Manifest {
  Json header;
  std::vector<ManifestRecord> records;
};

inline std::string map_file_name(std::uint64_t index) {
  std::ostringstream s;
  s << "map_" << std::setw(6) << std::setfill('0') << index << ".wtmap";
  return s.str();
}

inline Json manifest_header(const Config& c) {
  const auto& d = c.dataset;
  return {{"format", kManifestMagic},
          {"version", 1},
          {"prng", kPrngName},
          {"seed", c.seed},
          {"n_maps", d.n_maps},
          {"n_tls", d.n_tls},
          {"ranges",
           {{"omega", d.ranges.omega},
            {"coupling", d.ranges.coupling},
            {"t1", d.ranges.t1},
            {"tphi", d.ranges.tphi}}},
          {"max_coupling_ratio", d.max_coupling_ratio},
          {"n_freq", c.grid.n_freq()},
          {"n_time", c.grid.n_time()}};
}

inline Json to_json(const ManifestRecord& r) {
  return {{"file", r.file}, {"seed", r.seed}, {"index", r.index}, {"prng", kPrngName},
          {"labels", to_json(r.labels)}};
}

inline std::string serialize_manifest(const Manifest& m) {
  std::string out = m.header.dump();
  out.push_back('\n');
  for (const auto& r : m.records) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

/// Parses manifest.jsonl and checks that every referenced file exists
/// relative to `dir` (skipped when `dir` is empty).
inline Manifest parse_manifest(const std::string& text, const std::filesystem::path& dir = {}) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      Json j = Json::parse(line);
      if (line_no == 1) {
        if (!j.contains("format") || j.at("format") != kManifestMagic)
          throw IoError("manifest: bad magic");
        m.header = std::move(j);
        continue;
      }
      ManifestRecord r;
      r.file = j.at("file").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.index = j.at("index").get<std::uint64_t>();
      const Json& l = j.at("labels");
      const auto om = l.at("omega").get<std::vector<double>>();
      const auto g = l.at("coupling").get<std::vector<double>>();
      const auto t1 = l.at("t1").get<std::vector<double>>();
      const auto tp = l.at("tphi").get<std::vector<double>>();
      if (g.size() != om.size() || t1.size() != om.size() || tp.size() != om.size())
        throw IoError("manifest line " + std::to_string(line_no) + ": label lengths differ");
      for (std::size_t k = 0; k < om.size(); ++k) r.labels.push_back({om[k], g[k], t1[k], tp[k]});
      if (!dir.empty() && !std::filesystem::exists(dir / r.file))
        throw IoError("manifest line " + std::to_string(line_no) + ": missing " + r.file);
      m.records.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (m.header.is_null()) throw IoError("manifest: empty");
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& dir) {
  return parse_manifest(read_text_file(dir / "manifest.jsonl"), dir);
}

/// Generates config.dataset.n_maps maps into `dir` plus manifest.jsonl.
/// Maps are distributed over `threads` workers; each map draws from its own
/// (seed, index) substream, so the output does not depend on the thread count.
inline Manifest generate_dataset(const Config& c, const std::filesystem::path& dir, int threads = 1) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  CalibrationOptions cal_opt = c.calibration;
  cal_opt.min_population = c.dataset.min_calibration_population;
  const auto n = static_cast<std::size_t>(c.dataset.n_maps);
  std::vector<ManifestRecord> records(n);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    ManifestRecord r;
    r.seed = c.seed;
    r.index = i;
    r.file = map_file_name(i);
    r.labels = sample_tls(c.seed, i, c.dataset, c.spec.transmon.omega_q);
    const SystemSpec spec = spec_with_tls(c.spec, r.labels, c.decoherence);
    const PulseBCalibration cal = calibrate_pulse_b(spec, cal_opt);
    const OmegaTMap map = generate_map(spec, cal, c.grid, c.pulse_a_amplitude, 1);
    const Json extra = {{"dataset", {{"prng", kPrngName}, {"seed", c.seed}, {"index", i},
                                     {"labels", to_json(r.labels)}}}};
    write_map(dir / r.file, map, extra);
    records[i] = std::move(r);
  });
  Manifest m{manifest_header(c), std::move(records)};
  detail::write_file_atomically(dir / "manifest.jsonl", serialize_manifest(m));
  return m;
}

}  // namespace twotone

#endif  // TWOTONE_IO_HPP
