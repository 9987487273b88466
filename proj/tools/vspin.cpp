// Command-line front end: level diagrams, clock-transition search, ODMR
// spectra, pulsed experiments (Rabi / Ramsey / Hahn), curve fitting and the
// structural validation suite. Writes CSV data plus a manifest per run.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vspin/config.hpp"
#include "vspin/csv.hpp"
#include "vspin/dynamics.hpp"
#include "vspin/fitting.hpp"
#include "vspin/spectra.hpp"
#include "vspin/validate.hpp"

namespace fs = std::filesystem;
using namespace vspin;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 2;
constexpr int exit_physics_error = 3;
constexpr int exit_validation_failed = 4;

std::vector<double> linspace(double from, double to, int points) {
  std::vector<double> out(static_cast<size_t>(points));
  for (int k = 0; k < points; ++k)
    out[static_cast<size_t>(k)] = from + (to - from) * k / double(points - 1);
  return out;
}

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string profile;
  long long seed = -1;
  int threads = 0;
};

RunConfig resolve_config(const CliOverrides& cli, std::string& raw_input) {
  RunConfig cfg;
  if (!cli.config_path.empty()) {
    std::ifstream in(cli.config_path);
    if (!in) throw ConfigError("cannot open config file '" + cli.config_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    raw_input = buffer.str();
    cfg = parse_run_config(raw_input, cli.config_path);
  } else {
    cfg.validate();
    raw_input = serialize_run_config(cfg);
  }
  if (!cli.profile.empty()) cfg.profile = cli.profile;
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  if (cli.seed >= 0) cfg.noise.rng_seed = static_cast<std::uint64_t>(cli.seed);
  if (cli.threads > 0) cfg.threads = cli.threads;
  cfg.validate();
  return cfg;
}

void prepare_out_dir(const RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

void emit_manifest(const RunConfig& cfg, const std::string& raw_input) {
  write_manifest(make_manifest(cfg, raw_input), cfg.out_dir + "/manifest.json");
}

void write_trace_csv(const std::string& path, const SignalTrace& trace,
                     const std::string& x_meaning) {
  CsvTable table;
  table.comments.push_back("swept_parameter: " + x_meaning);
  for (const auto& w : trace.warnings) table.comments.push_back("warning: " + w);
  table.header = {"swept_parameter", "signal", "stderr_over_samples"};
  table.columns = {trace.x, trace.signal, trace.stderr_over_samples};
  table.write(path);
}

ExperimentOptions experiment_options(const RunConfig& cfg) {
  ExperimentOptions opts;
  opts.b1_mt = cfg.b1_mt;
  opts.noise = cfg.noise;
  opts.antenna = cfg.antenna;
  opts.rwa = cfg.rwa;
  opts.threads = cfg.threads;
  opts.polarization = cfg.polarization;
  opts.pair_weight = cfg.pair_weight;
  return opts;
}

int run_levels(const RunConfig& cfg) {
  const std::vector<double> axis = linspace(cfg.sweep_from_mt, cfg.sweep_to_mt, cfg.sweep_points);
  const LevelDiagram diagram = sweep_levels(cfg.system, axis);
  CsvTable table;
  table.comments.push_back("tracked eigenlevels vs field, energies in MHz");
  for (int k = 0; k < diagram.dim(); ++k)
    table.comments.push_back("level_" + std::to_string(k) + " = " +
                             diagram.labels[static_cast<size_t>(k)].str(cfg.system.defect.g_par));
  table.comments.push_back("min tracking overlap: " + format_double(diagram.min_overlap));
  table.header.push_back("b_mT");
  table.columns.push_back(diagram.b_mt);
  for (int k = 0; k < diagram.dim(); ++k) {
    table.header.push_back("level_" + std::to_string(k));
    std::vector<double> col(static_cast<size_t>(diagram.b_mt.size()));
    for (size_t r = 0; r < col.size(); ++r)
      col[r] = diagram.energies(static_cast<Eigen::Index>(r), k);
    table.columns.push_back(std::move(col));
  }
  table.write(cfg.out_dir + "/levels.csv");
  std::cout << "wrote " << cfg.out_dir << "/levels.csv (" << diagram.b_mt.size() << " rows x "
            << diagram.dim() << " levels)\n";
  return exit_ok;
}

int run_clock(const RunConfig& cfg) {
  const ClockResult result =
      find_clock_transition(cfg.system, parse_ket_vpart(cfg.pair_a), parse_ket_vpart(cfg.pair_b),
                            BRange{cfg.clock_from_mt, cfg.clock_to_mt});
  if (!result.found) {
    std::cerr << "clock transition not found: " << result.message << "\n";
    return exit_physics_error;
  }
  CsvTable table;
  table.header = {"b_star_mT", "f_star_MHz", "abs_dfdb_MHz_per_mT"};
  table.columns = {{result.b_star_mt}, {result.f_star_mhz}, {result.dfdb_mhz_per_mt}};
  table.write(cfg.out_dir + "/clock.csv");
  std::cout << "b_star = " << format_double(result.b_star_mt)
            << " mT, f_star = " << format_double(result.f_star_mhz)
            << " MHz, |d(dE)/dB| = " << format_double(result.dfdb_mhz_per_mt) << " MHz/mT\n";
  return exit_ok;
}

int run_odmr(const RunConfig& cfg) {
  double f_from = cfg.f_from_mhz, f_to = cfg.f_to_mhz;
  if (f_from == 0.0 && f_to == 0.0) {
    // default window centered on the main line at the working field
    const StaticSystem sys = make_static_system(SystemConfig::paper_defaults(0), FieldVector::along_z(cfg.b0_mt));
    const ClockLevelSets sets = clock_level_sets(sys);
    f_from = sets.f_central_mhz - 4.0;
    f_to = sets.f_central_mhz + 4.0;
  }
  const EnsembleComposition comp = cfg.resolve_composition();
  const SpectrumTrace trace =
      odmr_spectrum(cfg.system.defect, cfg.system.si, cfg.b0_mt, comp, cfg.linewidth_fwhm_mhz,
                    linspace(f_from, f_to, cfg.f_points));
  CsvTable table;
  table.header = {"frequency_MHz", "intensity"};
  table.columns = {trace.f_mhz, trace.intensity};
  table.write(cfg.out_dir + "/odmr.csv");

  nlohmann::json meta;
  meta["b0_mT"] = trace.b0_mt;
  meta["composition"] = {trace.composition.w0, trace.composition.w1, trace.composition.w2};
  meta["linewidth_fwhm_MHz"] = trace.linewidth_fwhm_mhz;
  std::ofstream meta_out(cfg.out_dir + "/odmr.meta.json", std::ios::binary);
  meta_out << meta.dump(2) << "\n";

  std::cout << "wrote " << cfg.out_dir << "/odmr.csv\n";
  return exit_ok;
}

int run_rabi(const RunConfig& cfg) {
  const SignalTrace trace =
      simulate_rabi(cfg.system, FieldVector::along_z(cfg.b0_mt),
                    linspace(0.0, cfg.duration_to_us, cfg.duration_points), experiment_options(cfg));
  write_trace_csv(cfg.out_dir + "/rabi.csv", trace, "pulse_duration_us");
  std::cout << "wrote " << cfg.out_dir << "/rabi.csv\n";
  return exit_ok;
}

int run_ramsey(const RunConfig& cfg) {
  const SignalTrace trace =
      simulate_ramsey(cfg.system, FieldVector::along_z(cfg.b0_mt), cfg.detuning_mhz,
                      linspace(cfg.tau_from_us, cfg.tau_to_us, cfg.tau_points),
                      experiment_options(cfg));
  write_trace_csv(cfg.out_dir + "/ramsey.csv", trace, "tau_us");
  std::cout << "wrote " << cfg.out_dir << "/ramsey.csv\n";
  return exit_ok;
}

int run_hahn(const RunConfig& cfg) {
  double var_from = cfg.tau_from_us, var_to = cfg.tau_to_us;
  if (var_from == 0.0 && var_to == 0.0) {
    var_from = std::max(0.0, cfg.tau_fix_us - 3.0);
    var_to = cfg.tau_fix_us + 6.0;
  }
  const ExperimentOptions opts = experiment_options(cfg);
  const FieldVector b0 = FieldVector::along_z(cfg.b0_mt);
  const SignalTrace trace = simulate_hahn(cfg.system, b0, cfg.tau_fix_us,
                                          linspace(var_from, var_to, cfg.tau_points), opts);
  write_trace_csv(cfg.out_dir + "/hahn.csv", trace, "tau_var_us");
  const double amplitude = hahn_echo_amplitude(cfg.system, b0, cfg.tau_fix_us, opts);
  std::cout << "wrote " << cfg.out_dir << "/hahn.csv\n";
  std::cout << "echo amplitude at 2*tau_fix = " << format_double(2.0 * cfg.tau_fix_us)
            << " us: " << format_double(amplitude) << "\n";
  return exit_ok;
}

int run_fit(const RunConfig& cfg) {
  if (cfg.fit_input.empty()) throw ConfigError("fit.input must name a CSV trace");
  const auto columns = read_csv_columns(cfg.fit_input);
  if (columns.size() < 2) throw ConfigError("fit.input needs at least two columns (x, y)");
  FitData data;
  data.x = columns[0];
  data.y = columns[1];

  ModelSpec spec = RamseyModelSpec{cfg.fit_components, cfg.fit_shared_t2};
  Eigen::VectorXd guess;
  double removed_offset = 0.0;
  if (cfg.fit_model == "ramsey" || cfg.fit_model == "rabi") {
    // the damped-sinusoid models carry no constant term; remove the trace mean
    for (double v : data.y) removed_offset += v;
    removed_offset /= static_cast<double>(data.y.size());
    for (double& v : data.y) v -= removed_offset;
  }
  if (cfg.fit_model == "ramsey") {
    guess = seed_ramsey_guess(data, cfg.fit_components, cfg.fit_shared_t2);
  } else if (cfg.fit_model == "rabi") {
    spec = RabiModelSpec{cfg.fit_components};
    guess = seed_ramsey_guess(data, cfg.fit_components, true);
  } else {
    spec = GaussianPeakModelSpec{cfg.fit_components};
    // seed Gaussians on the highest samples, spread apart
    const int n = cfg.fit_components;
    guess.resize(3 * n + 1);
    const double base = *std::min_element(data.y.begin(), data.y.end());
    const double span = data.x.back() - data.x.front();
    std::vector<size_t> order(data.x.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return data.y[a] > data.y[b]; });
    std::vector<double> centers;
    for (size_t k : order) {
      if (static_cast<int>(centers.size()) == n) break;
      bool close = false;
      for (double c : centers)
        if (std::abs(c - data.x[k]) < span / (4.0 * n)) close = true;
      if (!close) centers.push_back(data.x[k]);
    }
    while (static_cast<int>(centers.size()) < n) centers.push_back(data.x[data.x.size() / 2]);
    std::sort(centers.begin(), centers.end());
    for (int i = 0; i < n; ++i) {
      guess(3 * i) = *std::max_element(data.y.begin(), data.y.end()) - base;
      guess(3 * i + 1) = centers[static_cast<size_t>(i)];
      guess(3 * i + 2) = span / (5.0 * n);
    }
    guess(3 * n) = base;
  }

  FitResult result = fit_curve(spec, data, guess);
  result.estimates = canonicalize(spec, result.estimates);

  nlohmann::json out;
  out["model"] = cfg.fit_model;
  out["components"] = cfg.fit_components;
  out["converged"] = result.converged;
  out["iterations"] = result.iterations;
  out["residual_norm"] = result.residual_norm;
  out["removed_offset"] = removed_offset;
  out["message"] = result.message;
  const std::vector<std::string> names = parameter_names(spec);
  nlohmann::json params = nlohmann::json::array();
  for (size_t k = 0; k < names.size(); ++k) {
    nlohmann::json p;
    p["name"] = names[k];
    p["value"] = result.estimates(static_cast<Eigen::Index>(k));
    p["ci95"] = result.ci95(static_cast<Eigen::Index>(k));
    params.push_back(p);
  }
  out["parameters"] = params;
  std::ofstream json_out(cfg.out_dir + "/fit_result.json", std::ios::binary);
  json_out << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return result.converged ? exit_ok : exit_physics_error;
}

int run_validate(const RunConfig&) {
  const std::vector<CheckResult> checks = run_validation();
  bool all_pass = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " - " << c.detail << "\n";
    all_pass = all_pass && c.pass;
  }
  std::cout << (all_pass ? "all checks passed\n" : "some checks FAILED\n");
  return all_pass ? exit_ok : exit_validation_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vspin: vanadium-defect spin simulator and fitting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOverrides cli;
  app.add_option("--config", cli.config_path, "run-config JSON file");
  app.add_option("--seed", cli.seed, "override the noise RNG seed");
  app.add_option("--out", cli.out_dir, "output directory");
  app.add_option("--threads", cli.threads, "worker threads for ensemble averaging");
  app.add_option("--profile", cli.profile, "parameter profile (paper-2023-defaults)");

  auto* levels = app.add_subcommand("levels", "tracked eigenlevels vs magnetic field (CSV: b_mT, level_*)");
  auto* clock = app.add_subcommand("clock", "locate the field where the pair gap is stationary");
  auto* odmr = app.add_subcommand("odmr", "ensemble ODMR spectrum (CSV: frequency_MHz, intensity)");
  auto* rabi = app.add_subcommand("rabi", "Rabi oscillation trace (CSV: swept_parameter [us], signal, stderr_over_samples)");
  auto* ramsey = app.add_subcommand("ramsey", "Ramsey fringe trace (CSV: swept_parameter [us], signal, stderr_over_samples)");
  auto* hahn = app.add_subcommand("hahn", "Hahn-echo trace and echo amplitude (CSV: swept_parameter [us], signal, stderr_over_samples)");
  auto* fit = app.add_subcommand("fit", "least-squares fit of a CSV trace (JSON result)");
  auto* validate = app.add_subcommand("validate", "run the structural invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string raw_input;
    const RunConfig cfg = resolve_config(cli, raw_input);
    prepare_out_dir(cfg);

    int status = exit_ok;
    if (levels->parsed()) status = run_levels(cfg);
    else if (clock->parsed()) status = run_clock(cfg);
    else if (odmr->parsed()) status = run_odmr(cfg);
    else if (rabi->parsed()) status = run_rabi(cfg);
    else if (ramsey->parsed()) status = run_ramsey(cfg);
    else if (hahn->parsed()) status = run_hahn(cfg);
    else if (fit->parsed()) status = run_fit(cfg);
    else if (validate->parsed()) return run_validate(cfg);

    if (status == exit_ok) emit_manifest(cfg, raw_input);
    return status;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_physics_error;
  }
}
