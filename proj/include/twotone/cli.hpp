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

// Command-line front end: `twotone map|dataset|estimate|steady`.
//
// Exit codes: 0 success, 1 validation (bad config or arguments), 2 I/O,
// 3 numerical failure (calibration, degenerate kernel, ...).

#ifndef TWOTONE_CLI_HPP
#define TWOTONE_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twotone/analytics.hpp"
#include "twotone/io.hpp"
#include "twotone/lindblad.hpp"
#include "twotone/protocol.hpp"

namespace twotone::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumerical = 3 };

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

namespace detail {

inline void write_report(const std::string& path, const Json& report) {
  if (path.empty()) return;
  twotone::detail::write_file_atomically(path, report.dump(2) + "\n");
}

inline Json feature_json(const MapFeature& f) {
  return {{"kind", to_string(f.kind)},
          {"center_frequency", f.center_frequency},
          {"oscillation_frequency", f.oscillation_frequency},
          {"contrast", f.contrast}};
}

inline double mhz(double hz) { return hz * 1e-6; }

inline int run_map(const CommonOptions& o, std::ostream& out) {
  const Config c = load_config(o.config);
  const PulseBCalibration cal = calibrate_pulse_b(c.spec, c.calibration);
  out << std::fixed << std::setprecision(4) << "calibrated pulse B at " << mhz(cal.omega_tilde_q)
      << " MHz (shift " << mhz(cal.omega_tilde_q - c.spec.transmon.omega_q)
      << " MHz), decoherence-free P_q = " << cal.achieved_population << "\n";
  const OmegaTMap map = generate_map(c.spec, cal, c.grid, c.pulse_a_amplitude, o.threads);
  Json extra = Json::object();
  if (o.seed) extra["seed"] = *o.seed;
  write_map(o.out, map, extra);
  out << "wrote " << map.values.rows() << " x " << map.values.cols() << " map to " << o.out << "\n";
  return kOk;
}

inline int run_dataset(const CommonOptions& o, std::optional<int> n_maps, std::ostream& out) {
  Config c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (n_maps) {
    if (*n_maps < 1) throw ValidationError("n-maps", "must be >= 1");
    c.dataset.n_maps = *n_maps;
  }
  const Manifest m = generate_dataset(c, o.out, o.threads);
  out << "wrote " << m.records.size() << " maps with " << c.dataset.n_tls << " TLS each to "
      << o.out << " (seed " << c.seed << ")\n";
  return kOk;
}

inline int run_estimate(const CommonOptions& o, const std::string& map_path, std::ostream& out) {
  FeatureOptions fo;
  if (!o.config.empty()) {
    const Config c = load_config(o.config);
    fo.contrast_threshold = c.analysis.contrast_threshold;
    fo.proximity_steps = c.analysis.proximity_steps;
  }
  const MapFileContents file = read_map(map_path);
  const auto features = extract_features(file.map, fo);
  const auto estimates = estimate_tls(features, file.map.spec.transmon, file.map.pulse_a_amplitude);

  Json report = {{"map", map_path}, {"features", Json::array()}, {"estimates", Json::array()}};
  for (const auto& f : features) report["features"].push_back(feature_json(f));
  for (const auto& e : estimates) {
    report["estimates"].push_back({{"omega", e.omega},
                                   {"coupling", e.coupling},
                                   {"residual", e.residual},
                                   {"converged", e.converged},
                                   {"iterations", e.iterations},
                                   {"feature", feature_json(e.source)}});
  }
  write_report(o.out, report);

  out << features.size() << " feature(s), " << estimates.size() << " TLS estimate(s)\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& f : features) {
    out << "  " << std::left << std::setw(9) << to_string(f.kind) << std::right << " center "
        << mhz(f.center_frequency) << " MHz, oscillation " << mhz(f.oscillation_frequency)
        << " MHz, contrast " << f.contrast << "\n";
  }
  for (const auto& e : estimates) {
    out << "  TLS omega_k = " << mhz(e.omega) << " MHz, g_k = " << mhz(e.coupling)
        << " MHz, residual " << e.residual << (e.converged ? "" : " (not converged)") << "\n";
  }
  return kOk;
}

inline int run_steady(const CommonOptions& o, std::ostream& out) {
  const Config c = load_config(o.config);
  if (c.spec.n_tls() == 0) throw ValidationError("tls", "steady needs at least one TLS");
  const int k = c.steady.tls;
  const auto& t = c.spec.tls[static_cast<std::size_t>(k)];
  const DerivedQuantities d = derive(c.spec, k);
  const double drive = c.steady.drive_frequency.value_or(freq_01(t.omega, t.coupling, d.delta));
  const double amp = c.steady.amplitude.value_or(c.pulse_a_amplitude);

  const Operators ops = build_operators(c.spec, c.max_dimension);
  const Liouvillian l = liouvillian(c.spec, hamiltonian_rwa(c.spec, {amp, drive, 0.0}, ops), ops);
  const double lindblad = qubit_population(steady_state(l), c.spec);
  const DecoherenceRates rates = DecoherenceRates::from(c.spec, k);
  const double approx = steady_population_approx(t.coupling, amp, d.delta, rates);
  const RateCoefficients coeff = rate_coefficients(t.coupling, amp, d.delta, t.lambda, rates);
  const double full = rate_steady_full(coeff, rates.gamma_q, rates.gamma_k);

  const Json report = {{"tls", k},
                       {"drive_frequency", drive},
                       {"amplitude", amp},
                       {"lindblad", lindblad},
                       {"approx", approx},
                       {"rate_model", full},
                       {"relative_lindblad_vs_approx", (lindblad - approx) / approx},
                       {"relative_rate_model_vs_approx", (full - approx) / approx},
                       {"in_regime", coeff.in_regime},
                       {"rates", {{"c1", coeff.c1}, {"c2", coeff.c2}, {"c3", coeff.c3}}}};
  write_report(o.out, report);
  out << std::fixed << std::setprecision(6) << "drive " << mhz(drive) << " MHz, A = " << mhz(amp)
      << " MHz\n"
      << "  steady P_q (Lindblad)        " << lindblad << "\n"
      << "  steady P_q (closed form)     " << approx << "  (" << std::showpos
      << 100.0 * (lindblad - approx) / approx << "% Lindblad vs closed form)\n"
      << std::noshowpos << "  steady P_q (rate model)      " << full << "  (" << std::showpos
      << 100.0 * (full - approx) / approx << "% vs closed form)" << std::noshowpos
      << (coeff.in_regime ? "" : "  [outside g, A <= |delta|/10]") << "\n";
  return kOk;
}

}  // namespace detail

/// Runs the CLI; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-pulse TLS spectroscopy: simulate (omega, t)-maps and estimate TLS parameters"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "twotone 1.0.0");

  CommonOptions o;
  std::optional<int> n_maps;
  std::string map_path;
  auto common = [&](CLI::App* sub, bool config_required, bool out_required) {
    auto* cfg = sub->add_option("--config", o.config, "JSON config file");
    if (config_required) cfg->required();
    auto* op = sub->add_option("--out", o.out, "output path");
    if (out_required) op->required();
    sub->add_option("--seed", o.seed, "seed (recorded; overrides the config seed for datasets)");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 1024));
  };
  auto* map_cmd = app.add_subcommand("map", "calibrate pulse B and write one map file");
  common(map_cmd, true, true);
  auto* dataset_cmd = app.add_subcommand("dataset", "write a labeled dataset of random-TLS maps");
  common(dataset_cmd, true, true);
  dataset_cmd->add_option("--n-maps", n_maps, "override dataset.n_maps");
  auto* estimate_cmd = app.add_subcommand("estimate", "extract features and TLS estimates from a map");
  common(estimate_cmd, false, false);
  estimate_cmd->add_option("--map", map_path, "map file")->required();
  auto* steady_cmd = app.add_subcommand("steady", "driven steady state: Lindblad vs closed forms");
  common(steady_cmd, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*map_cmd) return detail::run_map(o, out);
    if (*dataset_cmd) return detail::run_dataset(o, n_maps, out);
    if (*estimate_cmd) return detail::run_estimate(o, map_path, out);
    if (*steady_cmd) return detail::run_steady(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const CalibrationError& e) {
    err << "calibration failed: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kNumerical;
  }
  return kValidation;
}

}  // namespace twotone::cli

#endif  // TWOTONE_CLI_HPP
