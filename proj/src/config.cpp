#include "vspin/config.hpp"

#include <json.hpp>

#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace vspin {

using nlohmann::json;

namespace {

enum class Unit { field_mt, freq_mhz, time_us, length_um, rate_per_us };

const std::map<Unit, std::map<std::string, double>>& unit_tables() {
  static const std::map<Unit, std::map<std::string, double>> tables = {
      {Unit::field_mt, {{"mT", 1.0}, {"T", 1000.0}, {"uT", 1e-3}}},
      {Unit::freq_mhz, {{"MHz", 1.0}, {"kHz", 1e-3}, {"GHz", 1e3}, {"Hz", 1e-6}}},
      {Unit::time_us, {{"us", 1.0}, {"µs", 1.0}, {"ms", 1e3}, {"ns", 1e-3}, {"s", 1e6}}},
      {Unit::length_um, {{"um", 1.0}, {"µm", 1.0}, {"mm", 1e3}, {"nm", 1e-3}}},
      {Unit::rate_per_us, {{"1/us", 1.0}, {"MHz", 1.0}, {"1/ms", 1e-3}}},
  };
  return tables;
}

std::string canonical_unit(Unit unit) {
  switch (unit) {
    case Unit::field_mt: return "mT";
    case Unit::freq_mhz: return "MHz";
    case Unit::time_us: return "us";
    case Unit::length_um: return "um";
    case Unit::rate_per_us: return "1/us";
  }
  return "";
}

double parse_quantity(const json& value, Unit unit, const std::string& path) {
  if (!value.is_string())
    throw ConfigError("config key '" + path + "' must be a string with an explicit unit, e.g. \"30 " +
                      canonical_unit(unit) + "\"");
  const std::string text = value.get<std::string>();
  std::istringstream ss(text);
  double number = 0.0;
  std::string unit_token;
  if (!(ss >> number >> unit_token))
    throw ConfigError("config key '" + path + "': cannot parse quantity '" + text + "'");
  std::string extra;
  if (ss >> extra) throw ConfigError("config key '" + path + "': trailing text in '" + text + "'");
  const auto& table = unit_tables().at(unit);
  const auto it = table.find(unit_token);
  if (it == table.end())
    throw ConfigError("config key '" + path + "': unit '" + unit_token +
                      "' is not a valid unit here (expected e.g. '" + canonical_unit(unit) + "')");
  return number * it->second;
}

std::string emit_quantity(double value, Unit unit) {
  std::ostringstream ss;
  ss.precision(17);
  ss << value << " " << canonical_unit(unit);
  return ss.str();
}

void check_keys(const json& object, const std::set<std::string>& allowed, const std::string& path) {
  if (!object.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) + "'");
  }
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + path + "' must be an integer");
  return j.get<int>();
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("config key '" + path + "' must be a plain number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError("config key '" + path + "' must be a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError("config key '" + path + "' must be a string");
  return j.get<std::string>();
}

}  // namespace

EnsembleComposition RunConfig::resolve_composition() const {
  if (composition_weights) {
    EnsembleComposition comp{(*composition_weights)[0], (*composition_weights)[1],
                             (*composition_weights)[2]};
    comp.normalize();
    return comp;
  }
  EnsembleComposition comp = EnsembleComposition::from_wavelength(composition_profile);
  comp.normalize();
  return comp;
}

void RunConfig::validate() const {
  if (profile != "paper-2023-defaults")
    throw ConfigError("unknown parameter profile '" + profile + "'");
  system.validate();
  noise.validate();
  if (antenna) antenna->validate();
  if (sweep_points < 2 || f_points < 2 || tau_points < 2 || duration_points < 2)
    throw ConfigError("axis point counts must be at least 2");
  if (!(linewidth_fwhm_mhz > 0.0)) throw ConfigError("odmr.linewidth_fwhm must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (fit_model != "ramsey" && fit_model != "rabi" && fit_model != "gaussian")
    throw ConfigError("fit.model must be one of ramsey, rabi, gaussian");
  if (fit_components < 1) throw ConfigError("fit.components must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    // byte offset -> line number for the diagnostic
    size_t line = 1;
    for (size_t k = 0; k < std::min(json_text.size(), err.byte); ++k)
      if (json_text[k] == '\n') ++line;
    throw ConfigError(source_name + ":" + std::to_string(line) + ": " + err.what());
  }

  RunConfig cfg;
  check_keys(root, {"profile", "system", "field", "clock", "odmr", "sequence", "noise", "antenna",
                    "fit", "output"},
             "");

  if (root.contains("profile")) cfg.profile = get_string(root["profile"], "profile");

  if (root.contains("system")) {
    const json& s = root["system"];
    check_keys(s, {"n_si", "g_par", "g_perp", "a_v_par", "a_v_perp", "q_zz", "g_v", "a_si_par",
                   "a_si_perp", "g_si"},
               "system");
    if (s.contains("n_si")) cfg.system.n_si = get_int(s["n_si"], "system.n_si");
    if (s.contains("g_par")) cfg.system.defect.g_par = get_number(s["g_par"], "system.g_par");
    if (s.contains("g_perp")) cfg.system.defect.g_perp = get_number(s["g_perp"], "system.g_perp");
    if (s.contains("a_v_par"))
      cfg.system.defect.a_v_par = parse_quantity(s["a_v_par"], Unit::freq_mhz, "system.a_v_par");
    if (s.contains("a_v_perp"))
      cfg.system.defect.a_v_perp = parse_quantity(s["a_v_perp"], Unit::freq_mhz, "system.a_v_perp");
    if (s.contains("q_zz"))
      cfg.system.defect.q_zz = parse_quantity(s["q_zz"], Unit::freq_mhz, "system.q_zz");
    if (s.contains("g_v")) cfg.system.defect.g_v = get_number(s["g_v"], "system.g_v");
    if (s.contains("a_si_par"))
      cfg.system.si.a_si_par = parse_quantity(s["a_si_par"], Unit::freq_mhz, "system.a_si_par");
    if (s.contains("a_si_perp"))
      cfg.system.si.a_si_perp = parse_quantity(s["a_si_perp"], Unit::freq_mhz, "system.a_si_perp");
    if (s.contains("g_si")) cfg.system.si.g_si = get_number(s["g_si"], "system.g_si");
  }

  if (root.contains("field")) {
    const json& s = root["field"];
    check_keys(s, {"b0", "sweep_from", "sweep_to", "sweep_points"}, "field");
    if (s.contains("b0")) cfg.b0_mt = parse_quantity(s["b0"], Unit::field_mt, "field.b0");
    if (s.contains("sweep_from"))
      cfg.sweep_from_mt = parse_quantity(s["sweep_from"], Unit::field_mt, "field.sweep_from");
    if (s.contains("sweep_to"))
      cfg.sweep_to_mt = parse_quantity(s["sweep_to"], Unit::field_mt, "field.sweep_to");
    if (s.contains("sweep_points")) cfg.sweep_points = get_int(s["sweep_points"], "field.sweep_points");
  }

  if (root.contains("clock")) {
    const json& s = root["clock"];
    check_keys(s, {"pair_a", "pair_b", "from", "to"}, "clock");
    if (s.contains("pair_a")) cfg.pair_a = get_string(s["pair_a"], "clock.pair_a");
    if (s.contains("pair_b")) cfg.pair_b = get_string(s["pair_b"], "clock.pair_b");
    if (s.contains("from")) cfg.clock_from_mt = parse_quantity(s["from"], Unit::field_mt, "clock.from");
    if (s.contains("to")) cfg.clock_to_mt = parse_quantity(s["to"], Unit::field_mt, "clock.to");
  }

  if (root.contains("odmr")) {
    const json& s = root["odmr"];
    check_keys(s, {"composition", "linewidth_fwhm", "f_from", "f_to", "f_points"}, "odmr");
    if (s.contains("composition")) {
      const json& c = s["composition"];
      if (c.is_string()) {
        cfg.composition_profile = c.get<std::string>();
        cfg.composition_weights.reset();
      } else if (c.is_array() && c.size() == 3) {
        std::array<double, 3> w{};
        for (size_t k = 0; k < 3; ++k) w[k] = get_number(c[k], "odmr.composition[" + std::to_string(k) + "]");
        cfg.composition_weights = w;
      } else {
        throw ConfigError("odmr.composition must be a wavelength string or an array of 3 weights");
      }
    }
    if (s.contains("linewidth_fwhm"))
      cfg.linewidth_fwhm_mhz = parse_quantity(s["linewidth_fwhm"], Unit::freq_mhz, "odmr.linewidth_fwhm");
    if (s.contains("f_from")) cfg.f_from_mhz = parse_quantity(s["f_from"], Unit::freq_mhz, "odmr.f_from");
    if (s.contains("f_to")) cfg.f_to_mhz = parse_quantity(s["f_to"], Unit::freq_mhz, "odmr.f_to");
    if (s.contains("f_points")) cfg.f_points = get_int(s["f_points"], "odmr.f_points");
  }

  if (root.contains("sequence")) {
    const json& s = root["sequence"];
    check_keys(s, {"b1", "detuning", "tau_from", "tau_to", "tau_points", "tau_fix", "duration_to",
                   "duration_points", "polarization", "pair_weight", "rwa"},
               "sequence");
    if (s.contains("b1")) cfg.b1_mt = parse_quantity(s["b1"], Unit::field_mt, "sequence.b1");
    if (s.contains("detuning"))
      cfg.detuning_mhz = parse_quantity(s["detuning"], Unit::freq_mhz, "sequence.detuning");
    if (s.contains("tau_from"))
      cfg.tau_from_us = parse_quantity(s["tau_from"], Unit::time_us, "sequence.tau_from");
    if (s.contains("tau_to")) cfg.tau_to_us = parse_quantity(s["tau_to"], Unit::time_us, "sequence.tau_to");
    if (s.contains("tau_points")) cfg.tau_points = get_int(s["tau_points"], "sequence.tau_points");
    if (s.contains("tau_fix")) cfg.tau_fix_us = parse_quantity(s["tau_fix"], Unit::time_us, "sequence.tau_fix");
    if (s.contains("duration_to"))
      cfg.duration_to_us = parse_quantity(s["duration_to"], Unit::time_us, "sequence.duration_to");
    if (s.contains("duration_points"))
      cfg.duration_points = get_int(s["duration_points"], "sequence.duration_points");
    if (s.contains("polarization")) cfg.polarization = get_number(s["polarization"], "sequence.polarization");
    if (s.contains("pair_weight")) cfg.pair_weight = get_number(s["pair_weight"], "sequence.pair_weight");
    if (s.contains("rwa")) cfg.rwa = get_bool(s["rwa"], "sequence.rwa");
  }

  if (root.contains("noise")) {
    const json& s = root["noise"];
    check_keys(s, {"sigma_b", "samples", "seed", "dephasing"}, "noise");
    if (s.contains("sigma_b"))
      cfg.noise.sigma_b_mt = parse_quantity(s["sigma_b"], Unit::field_mt, "noise.sigma_b");
    if (s.contains("samples")) cfg.noise.n_noise_samples = get_int(s["samples"], "noise.samples");
    if (s.contains("seed")) cfg.noise.rng_seed = static_cast<std::uint64_t>(get_int(s["seed"], "noise.seed"));
    if (s.contains("dephasing")) {
      const json& rates = s["dephasing"];
      if (!rates.is_array()) throw ConfigError("noise.dephasing must be an array");
      for (size_t k = 0; k < rates.size(); ++k) {
        const std::string path = "noise.dephasing[" + std::to_string(k) + "]";
        check_keys(rates[k], {"i", "j", "rate"}, path);
        DephasingRate r;
        r.level_i = get_int(rates[k].at("i"), path + ".i");
        r.level_j = get_int(rates[k].at("j"), path + ".j");
        r.rate_per_us = parse_quantity(rates[k].at("rate"), Unit::rate_per_us, path + ".rate");
        cfg.noise.extra_dephasing_rates.push_back(r);
      }
    }
  }

  if (root.contains("antenna")) {
    const json& s = root["antenna"];
    check_keys(s, {"radius", "thickness", "depth_samples"}, "antenna");
    AntennaProfile profile;
    if (s.contains("radius")) profile.loop_radius_um = parse_quantity(s["radius"], Unit::length_um, "antenna.radius");
    if (s.contains("thickness"))
      profile.sample_thickness_um = parse_quantity(s["thickness"], Unit::length_um, "antenna.thickness");
    if (s.contains("depth_samples"))
      profile.n_depth_samples = get_int(s["depth_samples"], "antenna.depth_samples");
    cfg.antenna = profile;
  }

  if (root.contains("fit")) {
    const json& s = root["fit"];
    check_keys(s, {"model", "components", "shared_t2", "input"}, "fit");
    if (s.contains("model")) cfg.fit_model = get_string(s["model"], "fit.model");
    if (s.contains("components")) cfg.fit_components = get_int(s["components"], "fit.components");
    if (s.contains("shared_t2")) cfg.fit_shared_t2 = get_bool(s["shared_t2"], "fit.shared_t2");
    if (s.contains("input")) cfg.fit_input = get_string(s["input"], "fit.input");
  }

  if (root.contains("output")) {
    const json& s = root["output"];
    check_keys(s, {"directory", "threads"}, "output");
    if (s.contains("directory")) cfg.out_dir = get_string(s["directory"], "output.directory");
    if (s.contains("threads")) cfg.threads = get_int(s["threads"], "output.threads");
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path);
}

std::string serialize_run_config(const RunConfig& cfg) {
  json root;
  root["profile"] = cfg.profile;
  json& s = root["system"];
  s["n_si"] = cfg.system.n_si;
  s["g_par"] = cfg.system.defect.g_par;
  s["g_perp"] = cfg.system.defect.g_perp;
  s["a_v_par"] = emit_quantity(cfg.system.defect.a_v_par, Unit::freq_mhz);
  s["a_v_perp"] = emit_quantity(cfg.system.defect.a_v_perp, Unit::freq_mhz);
  s["q_zz"] = emit_quantity(cfg.system.defect.q_zz, Unit::freq_mhz);
  s["g_v"] = cfg.system.defect.g_v;
  s["a_si_par"] = emit_quantity(cfg.system.si.a_si_par, Unit::freq_mhz);
  s["a_si_perp"] = emit_quantity(cfg.system.si.a_si_perp, Unit::freq_mhz);
  s["g_si"] = cfg.system.si.g_si;

  json& f = root["field"];
  f["b0"] = emit_quantity(cfg.b0_mt, Unit::field_mt);
  f["sweep_from"] = emit_quantity(cfg.sweep_from_mt, Unit::field_mt);
  f["sweep_to"] = emit_quantity(cfg.sweep_to_mt, Unit::field_mt);
  f["sweep_points"] = cfg.sweep_points;

  json& c = root["clock"];
  c["pair_a"] = cfg.pair_a;
  c["pair_b"] = cfg.pair_b;
  c["from"] = emit_quantity(cfg.clock_from_mt, Unit::field_mt);
  c["to"] = emit_quantity(cfg.clock_to_mt, Unit::field_mt);

  json& o = root["odmr"];
  if (cfg.composition_weights) {
    o["composition"] = {(*cfg.composition_weights)[0], (*cfg.composition_weights)[1],
                        (*cfg.composition_weights)[2]};
  } else {
    o["composition"] = cfg.composition_profile;
  }
  o["linewidth_fwhm"] = emit_quantity(cfg.linewidth_fwhm_mhz, Unit::freq_mhz);
  o["f_from"] = emit_quantity(cfg.f_from_mhz, Unit::freq_mhz);
  o["f_to"] = emit_quantity(cfg.f_to_mhz, Unit::freq_mhz);
  o["f_points"] = cfg.f_points;

  json& q = root["sequence"];
  q["b1"] = emit_quantity(cfg.b1_mt, Unit::field_mt);
  q["detuning"] = emit_quantity(cfg.detuning_mhz, Unit::freq_mhz);
  q["tau_from"] = emit_quantity(cfg.tau_from_us, Unit::time_us);
  q["tau_to"] = emit_quantity(cfg.tau_to_us, Unit::time_us);
  q["tau_points"] = cfg.tau_points;
  q["tau_fix"] = emit_quantity(cfg.tau_fix_us, Unit::time_us);
  q["duration_to"] = emit_quantity(cfg.duration_to_us, Unit::time_us);
  q["duration_points"] = cfg.duration_points;
  q["polarization"] = cfg.polarization;
  q["pair_weight"] = cfg.pair_weight;
  q["rwa"] = cfg.rwa;

  json& n = root["noise"];
  n["sigma_b"] = emit_quantity(cfg.noise.sigma_b_mt, Unit::field_mt);
  n["samples"] = cfg.noise.n_noise_samples;
  n["seed"] = static_cast<long long>(cfg.noise.rng_seed);
  if (!cfg.noise.extra_dephasing_rates.empty()) {
    json rates = json::array();
    for (const auto& r : cfg.noise.extra_dephasing_rates) {
      json item;
      item["i"] = r.level_i;
      item["j"] = r.level_j;
      item["rate"] = emit_quantity(r.rate_per_us, Unit::rate_per_us);
      rates.push_back(item);
    }
    n["dephasing"] = rates;
  }

  if (cfg.antenna) {
    json& a = root["antenna"];
    a["radius"] = emit_quantity(cfg.antenna->loop_radius_um, Unit::length_um);
    a["thickness"] = emit_quantity(cfg.antenna->sample_thickness_um, Unit::length_um);
    a["depth_samples"] = cfg.antenna->n_depth_samples;
  }

  json& ft = root["fit"];
  ft["model"] = cfg.fit_model;
  ft["components"] = cfg.fit_components;
  ft["shared_t2"] = cfg.fit_shared_t2;
  ft["input"] = cfg.fit_input;

  json& out = root["output"];
  out["directory"] = cfg.out_dir;
  out["threads"] = cfg.threads;

  return root.dump(2) + "\n";
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

RunManifest make_manifest(const RunConfig& config, const std::string& raw_input) {
  RunManifest manifest;
  manifest.tool_version = "vspin 1.0.0";
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest.timestamp = buf;
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a_hash(raw_input)));
  manifest.input_hash = hash_buf;
  manifest.resolved_config_json = serialize_run_config(config);
  return manifest;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  json root;
  root["tool_version"] = manifest.tool_version;
  root["timestamp"] = manifest.timestamp;
  root["input_hash"] = manifest.input_hash;
  root["resolved_config"] = json::parse(manifest.resolved_config_json);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_manifest: cannot open '" + path + "'");
  out << root.dump(2) << "\n";
}

}  // namespace vspin
