#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "vspin/hamiltonian.hpp"

// Density-matrix propagation through pulse sequences (Rabi, Ramsey, Hahn
// echo). Pulses are applied in a frame rotating at the drive frequency; the
// rotating-wave Hamiltonian keeps diagonal detunings plus near-resonant drive
// elements. Lab-frame time stepping (rwa = false) is kept as a validation
// oracle only. Quasi-static field noise and the antenna depth profile are
// handled by deterministic ensemble averaging.
namespace vspin {

struct Pulse {
  double duration_us = 0.0;
  double b1_mt = 0.0;
  double freq_mhz = 0.0;
  double phase_rad = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

struct Delay {
  double duration_us = 0.0;
};

using SequenceElement = std::variant<Pulse, Delay>;

struct PulseSequence {
  std::vector<SequenceElement> elements;
  std::vector<int> readout_levels;   // sorted-eigenbasis indices at the working field
  int swept_element = -1;            // element whose duration is swept, -1 for none
  std::vector<double> sweep_values;  // us

  void validate(int dim) const;
};

struct DephasingRate {
  int level_i = 0, level_j = 0;
  double rate_per_us = 0.0;
};

struct NoiseModel {
  double sigma_b_mt = 0.0;  // std. dev. of the quasi-static field offset along z
  int n_noise_samples = 1;
  std::vector<DephasingRate> extra_dephasing_rates;  // per-coherence exponential rates
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct AntennaProfile {
  double loop_radius_um = 50.0;
  double sample_thickness_um = 500.0;
  int n_depth_samples = 1;

  void validate() const;
  // Relative field factor R^3/(z^2+R^2)^(3/2) at each slab midpoint; doubles
  // as the B1 scale of the slab and (normalized) as its averaging weight.
  std::vector<double> depth_factors() const;
};

struct DensityState {
  cxmat rho;  // in the sorted eigenbasis of the noise-free static Hamiltonian

  bool is_physical(double tol = 1e-10) const;
};

// Diagonal state with populations (1+p)/2 and (1-p)/2 split across the two
// level groups (scaled by pair_weight), uniform on the remaining levels.
DensityState initial_state(const StaticSystem& system, const std::vector<int>& group_hi,
                           const std::vector<int>& group_lo, double polarization,
                           double pair_weight = 1.0);
DensityState initial_state(const StaticSystem& system, std::pair<int, int> polarized_pair,
                           double polarization, double pair_weight = 1.0);

struct SignalTrace {
  std::vector<double> x;
  std::vector<double> signal;
  std::vector<double> stderr_over_samples;
  std::vector<std::string> warnings;
};

struct PropagateOptions {
  bool rwa = true;
  int threads = 1;
};

SignalTrace propagate(const PulseSequence& sequence, const SystemConfig& config,
                      const FieldVector& b0, const NoiseModel& noise,
                      const std::optional<AntennaProfile>& antenna, const DensityState& rho0,
                      const PropagateOptions& opts = {});

// The clock-pair-descended level groups at the working field, split at the
// largest energy gap inside the manifold.
struct ClockLevelSets {
  std::vector<int> lower, upper;
  double f_central_mhz = 0.0;
};

ClockLevelSets clock_level_sets(const StaticSystem& system);

// Pulse length maximizing population transfer between the groups in a
// noise-free sweep (pi time); pi/2 pulses use half of it.
double calibrate_pi_time(const SystemConfig& config, const FieldVector& b0, double b1_mt,
                         const Eigen::Vector3d& axis);

struct ExperimentOptions {
  double b1_mt = 0.1;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  NoiseModel noise;
  std::optional<AntennaProfile> antenna;
  bool rwa = true;
  int threads = 1;
  double polarization = 1.0;
  double pair_weight = 1.0;
};

SignalTrace simulate_rabi(const SystemConfig& config, const FieldVector& b0,
                          const std::vector<double>& durations_us, const ExperimentOptions& opts,
                          double detuning_mhz = 0.0);

SignalTrace simulate_ramsey(const SystemConfig& config, const FieldVector& b0,
                            double detuning_mhz, const std::vector<double>& tau_us,
                            const ExperimentOptions& opts);

SignalTrace simulate_hahn(const SystemConfig& config, const FieldVector& b0, double tau_fix_us,
                          const std::vector<double>& tau_var_us, const ExperimentOptions& opts,
                          double detuning_mhz = 0.0);

// Echo amplitude: signal(tau_var = tau_fix + 3 us) - signal(tau_var = tau_fix).
double hahn_echo_amplitude(const SystemConfig& config, const FieldVector& b0, double tau_fix_us,
                           const ExperimentOptions& opts, double detuning_mhz = 0.0);

// Two-pulse echo envelope for an S=1/2 electron coupled to one I=1/2 nucleus
// via Sz(a_par Iz + a_perp Ix), analytic modulation formula:
//   E(2 tau) = 1 - k/4 [2 - 2cos(w_a t) - 2cos(w_b t) + cos((w_a-w_b)t) + cos((w_a+w_b)t)]
double eseem_two_spin_oracle(double a_par_mhz, double a_perp_mhz, double g_nuclear, double b0_mt,
                             double tau_us);

// Same quantity from density-matrix propagation of the reduced model with
// ideal pulses; cross-checks the analytic form.
double hahn_echo_two_spin_numeric(double a_par_mhz, double a_perp_mhz, double g_nuclear,
                                  double b0_mt, double tau_us);

}  // namespace vspin
