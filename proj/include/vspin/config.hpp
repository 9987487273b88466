#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "vspin/dynamics.hpp"
#include "vspin/hamiltonian.hpp"
#include "vspin/spectra.hpp"

// Run configuration: a single JSON file in which every physical quantity
// carries an explicit unit suffix ("33 mT", "1.5 us"). Unknown keys are
// rejected so typos cannot silently fall back to defaults.
namespace vspin {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string profile = "paper-2023-defaults";
  SystemConfig system;

  // field
  double b0_mt = 33.0;
  double sweep_from_mt = 0.0, sweep_to_mt = 50.0;
  int sweep_points = 501;

  // clock search
  std::string pair_a = "up,-5/2", pair_b = "down,-7/2";
  double clock_from_mt = 20.0, clock_to_mt = 40.0;

  // odmr
  std::string composition_profile = "1278.76 nm";
  std::optional<std::array<double, 3>> composition_weights;
  double linewidth_fwhm_mhz = 0.45;
  double f_from_mhz = 0.0, f_to_mhz = 0.0;  // 0,0 -> centered on the main line
  int f_points = 1601;

  // pulse experiments
  double b1_mt = 0.1;
  double detuning_mhz = 1.0;
  double tau_from_us = 0.0, tau_to_us = 20.0;
  int tau_points = 401;
  double tau_fix_us = 10.0;
  double duration_to_us = 4.0;
  int duration_points = 201;
  double polarization = 1.0;
  double pair_weight = 1.0;
  bool rwa = true;

  NoiseModel noise;
  std::optional<AntennaProfile> antenna;

  // fit
  std::string fit_model = "ramsey";
  int fit_components = 1;
  bool fit_shared_t2 = true;
  std::string fit_input;

  std::string out_dir = "out";
  int threads = 1;

  EnsembleComposition resolve_composition() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& config);

// Resolved-config snapshot plus provenance; identical manifests reproduce
// identical CSV outputs.
struct RunManifest {
  std::string tool_version;
  std::string timestamp;
  std::string input_hash;
  std::string resolved_config_json;
};

RunManifest make_manifest(const RunConfig& config, const std::string& raw_input);
void write_manifest(const RunManifest& manifest, const std::string& path);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace vspin
