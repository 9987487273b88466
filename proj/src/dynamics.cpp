#include "vspin/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <atomic>
#include <thread>

namespace vspin {

using namespace std::complex_literals;

void PulseSequence::validate(int dim) const {
  if (readout_levels.empty()) throw std::invalid_argument("PulseSequence: empty readout set");
  for (int k : readout_levels)
    if (k < 0 || k >= dim) throw std::invalid_argument("PulseSequence: readout level out of range");
  double total = 0.0;
  for (const auto& el : elements) {
    if (std::holds_alternative<Pulse>(el)) {
      const Pulse& p = std::get<Pulse>(el);
      if (p.duration_us < 0.0 || !std::isfinite(p.duration_us))
        throw std::invalid_argument("PulseSequence: invalid pulse duration");
      if (!(p.freq_mhz > 0.0)) throw std::invalid_argument("PulseSequence: pulse frequency must be positive");
      total += p.duration_us;
    } else {
      const Delay& d = std::get<Delay>(el);
      if (d.duration_us < 0.0 || !std::isfinite(d.duration_us))
        throw std::invalid_argument("PulseSequence: invalid delay duration");
      total += d.duration_us;
    }
  }
  if (!std::isfinite(total)) throw std::invalid_argument("PulseSequence: non-finite total duration");
  if (swept_element >= 0) {
    if (swept_element >= static_cast<int>(elements.size()))
      throw std::invalid_argument("PulseSequence: swept element out of range");
    if (sweep_values.empty()) throw std::invalid_argument("PulseSequence: empty sweep");
    for (double v : sweep_values)
      if (v < 0.0 || !std::isfinite(v))
        throw std::invalid_argument("PulseSequence: invalid swept duration");
  }
}

void NoiseModel::validate() const {
  if (sigma_b_mt < 0.0 || !std::isfinite(sigma_b_mt))
    throw std::invalid_argument("NoiseModel: sigma_b must be >= 0");
  if (n_noise_samples < 1) throw std::invalid_argument("NoiseModel: need at least one sample");
  for (const auto& r : extra_dephasing_rates)
    if (r.rate_per_us < 0.0 || !std::isfinite(r.rate_per_us))
      throw std::invalid_argument("NoiseModel: dephasing rates must be >= 0");
}

void AntennaProfile::validate() const {
  if (!(loop_radius_um > 0.0)) throw std::invalid_argument("AntennaProfile: radius must be positive");
  if (!(sample_thickness_um > 0.0))
    throw std::invalid_argument("AntennaProfile: thickness must be positive");
  if (n_depth_samples < 1) throw std::invalid_argument("AntennaProfile: need at least one slab");
}

std::vector<double> AntennaProfile::depth_factors() const {
  validate();
  std::vector<double> factors(static_cast<size_t>(n_depth_samples));
  const double r = loop_radius_um;
  for (int k = 0; k < n_depth_samples; ++k) {
    const double z = (k + 0.5) * sample_thickness_um / n_depth_samples;
    factors[static_cast<size_t>(k)] = r * r * r / std::pow(z * z + r * r, 1.5);
  }
  return factors;
}

bool DensityState::is_physical(double tol) const {
  if (rho.rows() != rho.cols()) return false;
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol) return false;
  Eigen::SelfAdjointEigenSolver<cxmat> solver(rho);
  return solver.eigenvalues().minCoeff() > -tol;
}

DensityState initial_state(const StaticSystem& system, const std::vector<int>& group_hi,
                           const std::vector<int>& group_lo, double polarization,
                           double pair_weight) {
  if (!(polarization >= 0.0 && polarization <= 1.0))
    throw std::invalid_argument("initial_state: polarization must be in [0, 1]");
  if (!(pair_weight >= 0.0 && pair_weight <= 1.0))
    throw std::invalid_argument("initial_state: pair_weight must be in [0, 1]");
  if (group_hi.empty() || group_lo.empty())
    throw std::invalid_argument("initial_state: empty level group");
  const int dim = system.dim();
  std::vector<char> in_pair(static_cast<size_t>(dim), 0);
  for (int k : group_hi) {
    if (k < 0 || k >= dim) throw std::invalid_argument("initial_state: level out of range");
    in_pair[static_cast<size_t>(k)] = 1;
  }
  for (int k : group_lo) {
    if (k < 0 || k >= dim || in_pair[static_cast<size_t>(k)])
      throw std::invalid_argument("initial_state: groups must be disjoint and in range");
    in_pair[static_cast<size_t>(k)] = 1;
  }

  DensityState state;
  state.rho = cxmat::Zero(dim, dim);
  const double w_hi = pair_weight * 0.5 * (1.0 + polarization) / group_hi.size();
  const double w_lo = pair_weight * 0.5 * (1.0 - polarization) / group_lo.size();
  for (int k : group_hi) state.rho(k, k) = w_hi;
  for (int k : group_lo) state.rho(k, k) = w_lo;
  const int n_rest = dim - static_cast<int>(group_hi.size() + group_lo.size());
  if (n_rest > 0) {
    const double w_rest = (1.0 - pair_weight) / n_rest;
    for (int k = 0; k < dim; ++k)
      if (!in_pair[static_cast<size_t>(k)]) state.rho(k, k) = w_rest;
  }
  const double trace = state.rho.trace().real();
  if (!(trace > 0.0)) throw std::invalid_argument("initial_state: zero total population");
  state.rho /= trace;
  return state;
}

DensityState initial_state(const StaticSystem& system, std::pair<int, int> polarized_pair,
                           double polarization, double pair_weight) {
  return initial_state(system, {polarized_pair.first}, {polarized_pair.second}, polarization,
                       pair_weight);
}

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

// Bijective overlap match from the reference basis onto the sample's
// eigenvectors; the quasi-static offsets are small so matches are sharp.
void match_to_reference(const cxmat& ref_vecs, Eigen::VectorXd& energies, cxmat& vecs) {
  const int dim = static_cast<int>(ref_vecs.cols());
  std::vector<std::tuple<double, int, int>> order;
  order.reserve(static_cast<size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      order.emplace_back(std::norm(ref_vecs.col(i).dot(vecs.col(j))), i, j);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  std::vector<int> assign(static_cast<size_t>(dim), -1);
  std::vector<char> used(static_cast<size_t>(dim), 0);
  int done = 0;
  for (const auto& [w, i, j] : order) {
    (void)w;
    if (assign[static_cast<size_t>(i)] >= 0 || used[static_cast<size_t>(j)]) continue;
    assign[static_cast<size_t>(i)] = j;
    used[static_cast<size_t>(j)] = 1;
    if (++done == dim) break;
  }
  Eigen::VectorXd e2(dim);
  cxmat v2(dim, dim);
  for (int i = 0; i < dim; ++i) {
    e2(i) = energies(assign[static_cast<size_t>(i)]);
    v2.col(i) = vecs.col(assign[static_cast<size_t>(i)]);
  }
  energies = std::move(e2);
  vecs = std::move(v2);
}

struct EigProp {
  cxmat w;             // eigenvectors of the pulse Hamiltonian
  Eigen::VectorXd lam;  // eigenvalues (MHz)

  cxmat unitary(double t_us) const {
    const int dim = static_cast<int>(lam.size());
    cxmat phase = cxmat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
      phase(k, k) = std::exp(-1i * two_pi * lam(k) * t_us);
    return w * phase * w.adjoint();
  }
};

struct SampleEngine {
  int dim = 0;
  Eigen::VectorXd energies;   // matched to the base level order
  cxmat vecs;                 // lab -> sample eigenbasis
  Eigen::VectorXd detuned;    // energies - n * f_drive (rotating frame)
  std::vector<long> photon;   // frame assignment n_i
  Eigen::MatrixXd gamma;      // per-coherence dephasing rates
  double f_drive = 0.0;
  bool rwa = true;
  // cached per-element pulse propagator generators
  std::vector<std::optional<EigProp>> pulse_eig;
  std::vector<cxmat> drive_eigenbasis;  // per element, unit-amplitude drive in eigenbasis

  void apply_delay(cxmat& rho, double tau) const {
    const Eigen::VectorXd& e = rwa ? detuned : energies;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        if (i == j) continue;
        const double phase = -two_pi * (e(i) - e(j)) * tau;
        rho(i, j) *= std::exp(1i * phase) * std::exp(-gamma(i, j) * tau);
      }
  }

  void apply_pulse_rwa(cxmat& rho, size_t element, double tau) const {
    const cxmat u = pulse_eig[element]->unitary(tau);
    rho = u * rho * u.adjoint();
  }

  void apply_pulse_lab(cxmat& rho, const Pulse& p, const cxmat& d_eig, double tau) const {
    if (tau <= 0.0) return;
    const double dt_max = 1.0 / (50.0 * p.freq_mhz);
    const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(tau / dt_max)));
    const double dt = tau / static_cast<double>(n_steps);
    cxmat u = cxmat::Identity(dim, dim);
    cxmat h(dim, dim);
    for (long s = 0; s < n_steps; ++s) {
      const double t_mid = (static_cast<double>(s) + 0.5) * dt;
      const double envelope = std::cos(two_pi * p.freq_mhz * t_mid + p.phase_rad);
      h = envelope * d_eig;
      h.diagonal() += energies.cast<std::complex<double>>();
      Eigen::SelfAdjointEigenSolver<cxmat> solver(h);
      cxmat phase = cxmat::Zero(dim, dim);
      for (int k = 0; k < dim; ++k)
        phase(k, k) = std::exp(-1i * two_pi * solver.eigenvalues()(k) * dt);
      u = solver.eigenvectors() * phase * solver.eigenvectors().adjoint() * u;
    }
    rho = u * rho * u.adjoint();
  }
};

}  // namespace

SignalTrace propagate(const PulseSequence& sequence, const SystemConfig& config,
                      const FieldVector& b0, const NoiseModel& noise,
                      const std::optional<AntennaProfile>& antenna, const DensityState& rho0,
                      const PropagateOptions& opts) {
  const StaticSystem base = make_static_system(config, b0);
  const int dim = base.dim();
  sequence.validate(dim);
  noise.validate();
  if (rho0.rho.rows() != dim || rho0.rho.cols() != dim)
    throw std::invalid_argument("propagate: initial state dimension mismatch");

  // one common drive frequency defines the rotating frame
  double f_drive = 0.0;
  bool has_pulse = false;
  for (const auto& el : sequence.elements) {
    if (!std::holds_alternative<Pulse>(el)) continue;
    const Pulse& p = std::get<Pulse>(el);
    if (!has_pulse) {
      f_drive = p.freq_mhz;
      has_pulse = true;
    } else if (std::abs(p.freq_mhz - f_drive) > 1e-9) {
      throw std::invalid_argument("propagate: all pulses in a sequence must share one frequency");
    }
  }

  // quasi-static field offsets, drawn up front for determinism
  std::vector<double> offsets(static_cast<size_t>(noise.n_noise_samples), 0.0);
  if (noise.sigma_b_mt > 0.0) {
    std::mt19937_64 gen(noise.rng_seed);
    std::normal_distribution<double> dist(0.0, noise.sigma_b_mt);
    for (double& v : offsets) v = dist(gen);
  }

  std::vector<double> depth_scales{1.0};
  std::vector<double> depth_weights{1.0};
  if (antenna) {
    depth_scales = antenna->depth_factors();
    const double sum = std::accumulate(depth_scales.begin(), depth_scales.end(), 0.0);
    depth_weights.assign(depth_scales.size(), 0.0);
    for (size_t k = 0; k < depth_scales.size(); ++k) depth_weights[k] = depth_scales[k] / sum;
  }

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& r : noise.extra_dephasing_rates) {
    if (r.level_i < 0 || r.level_i >= dim || r.level_j < 0 || r.level_j >= dim)
      throw std::invalid_argument("propagate: dephasing rate level out of range");
    gamma(r.level_i, r.level_j) = r.rate_per_us;
    gamma(r.level_j, r.level_i) = r.rate_per_us;
  }

  // lab-frame drive operators per element at unit amplitude and axis
  std::vector<cxmat> unit_drives(sequence.elements.size());
  for (size_t e = 0; e < sequence.elements.size(); ++e)
    if (std::holds_alternative<Pulse>(sequence.elements[e]))
      unit_drives[e] = build_drive_operator(config, std::get<Pulse>(sequence.elements[e]).axis, 1.0);

  const size_t n_samples = offsets.size() * depth_scales.size();
  const std::vector<double>& sweep =
      sequence.swept_element >= 0 ? sequence.sweep_values : std::vector<double>{0.0};
  std::vector<std::vector<double>> per_sample(n_samples,
                                              std::vector<double>(sweep.size(), 0.0));
  std::vector<double> sample_weight(n_samples, 0.0);

  bool rwa_warning = false;

  auto run_sample = [&](size_t s) {
    const size_t noise_idx = s / depth_scales.size();
    const size_t depth_idx = s % depth_scales.size();
    sample_weight[s] = depth_weights[depth_idx] / static_cast<double>(offsets.size());

    SampleEngine engine;
    engine.dim = dim;
    engine.rwa = opts.rwa;
    engine.f_drive = f_drive;
    engine.gamma = gamma;
    if (offsets[noise_idx] != 0.0) {
      const FieldVector b{b0.bx, b0.by, b0.bz + offsets[noise_idx]};
      Eigen::SelfAdjointEigenSolver<cxmat> solver(build_static_hamiltonian(config, b));
      engine.energies = solver.eigenvalues();
      engine.vecs = solver.eigenvectors();
      match_to_reference(base.vecs, engine.energies, engine.vecs);
    } else {
      engine.energies = base.energies;
      engine.vecs = base.vecs;
    }

    engine.photon.assign(static_cast<size_t>(dim), 0);
    engine.detuned = engine.energies;
    if (has_pulse) {
      const double e_min = engine.energies.minCoeff();
      for (int i = 0; i < dim; ++i) {
        engine.photon[static_cast<size_t>(i)] =
            std::llround((engine.energies(i) - e_min) / f_drive);
        engine.detuned(i) =
            engine.energies(i) - static_cast<double>(engine.photon[static_cast<size_t>(i)]) * f_drive;
      }
    }

    engine.pulse_eig.resize(sequence.elements.size());
    engine.drive_eigenbasis.resize(sequence.elements.size());
    for (size_t e = 0; e < sequence.elements.size(); ++e) {
      if (!std::holds_alternative<Pulse>(sequence.elements[e])) continue;
      const Pulse& p = std::get<Pulse>(sequence.elements[e]);
      const double amp = p.b1_mt * depth_scales[depth_idx];
      const cxmat d_eig = amp * (engine.vecs.adjoint() * unit_drives[e] * engine.vecs);
      engine.drive_eigenbasis[e] = d_eig;
      if (!opts.rwa) continue;
      cxmat h = cxmat::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) h(i, i) = engine.detuned(i);
      double omega_max = 0.0, gap_min = 1e300;
      const std::complex<double> phase = std::exp(1i * p.phase_rad);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          if (engine.photon[static_cast<size_t>(j)] != engine.photon[static_cast<size_t>(i)] + 1)
            continue;
          h(i, j) += 0.5 * d_eig(i, j) * phase;
          h(j, i) += 0.5 * std::conj(d_eig(i, j) * phase);
          const double el = std::abs(d_eig(i, j));
          if (el > 1e-9) {
            omega_max = std::max(omega_max, el);
            gap_min = std::min(gap_min, std::abs(engine.energies(j) - engine.energies(i)));
          }
        }
      }
      if (omega_max > 0.1 * gap_min) rwa_warning = true;
      Eigen::SelfAdjointEigenSolver<cxmat> solver(h);
      engine.pulse_eig[e] = EigProp{solver.eigenvectors(), solver.eigenvalues()};
    }

    for (size_t v = 0; v < sweep.size(); ++v) {
      cxmat rho = rho0.rho;
      for (size_t e = 0; e < sequence.elements.size(); ++e) {
        const bool swept = (static_cast<int>(e) == sequence.swept_element);
        if (std::holds_alternative<Delay>(sequence.elements[e])) {
          const double tau =
              swept ? sweep[v] : std::get<Delay>(sequence.elements[e]).duration_us;
          engine.apply_delay(rho, tau);
        } else {
          const Pulse& p = std::get<Pulse>(sequence.elements[e]);
          const double tau = swept ? sweep[v] : p.duration_us;
          if (opts.rwa)
            engine.apply_pulse_rwa(rho, e, tau);
          else
            engine.apply_pulse_lab(rho, p, engine.drive_eigenbasis[e], tau);
        }
      }
      double signal = 0.0;
      for (int k : sequence.readout_levels) signal += rho(k, k).real();
      per_sample[s][v] = signal;
    }
  };

  const int n_threads = std::max(1, opts.threads);
  if (n_threads == 1 || n_samples == 1) {
    for (size_t s = 0; s < n_samples; ++s) run_sample(s);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (size_t s = next.fetch_add(1); s < n_samples; s = next.fetch_add(1)) run_sample(s);
      });
    for (auto& th : pool) th.join();
  }

  // deterministic ordered reduction
  SignalTrace trace;
  trace.x = sweep;
  trace.signal.assign(sweep.size(), 0.0);
  trace.stderr_over_samples.assign(sweep.size(), 0.0);
  double w_total = 0.0;
  for (size_t s = 0; s < n_samples; ++s) w_total += sample_weight[s];
  for (size_t v = 0; v < sweep.size(); ++v) {
    double mean = 0.0;
    for (size_t s = 0; s < n_samples; ++s) mean += sample_weight[s] * per_sample[s][v];
    mean /= w_total;
    double var = 0.0;
    for (size_t s = 0; s < n_samples; ++s) {
      const double d = per_sample[s][v] - mean;
      var += sample_weight[s] * sample_weight[s] * d * d;
    }
    trace.signal[v] = mean;
    trace.stderr_over_samples[v] = std::sqrt(var) / w_total;
  }
  if (rwa_warning)
    trace.warnings.push_back(
        "drive amplitude exceeds 10% of the smallest driven transition gap; "
        "rotating-wave results may be inaccurate");
  return trace;
}

ClockLevelSets clock_level_sets(const StaticSystem& system) {
  const KetLabel upper_ket = parse_ket_vpart("up,-5/2");
  const KetLabel lower_ket = parse_ket_vpart("down,-7/2");
  std::vector<int> candidates;
  for (int i = 0; i < system.dim(); ++i) {
    const KetLabel& l = system.labels[static_cast<size_t>(i)];
    if (l.same_v_part(upper_ket) || l.same_v_part(lower_ket)) candidates.push_back(i);
  }
  if (candidates.size() < 2)
    throw std::runtime_error("clock_level_sets: clock manifold not found at this field");
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return system.energies(a) < system.energies(b); });
  // split at the largest internal gap (the manifolds are ~400 MHz apart)
  size_t split = 1;
  double best_gap = -1.0;
  for (size_t k = 1; k < candidates.size(); ++k) {
    const double gap = system.energies(candidates[k]) - system.energies(candidates[k - 1]);
    if (gap > best_gap) {
      best_gap = gap;
      split = k;
    }
  }
  ClockLevelSets sets;
  sets.lower.assign(candidates.begin(), candidates.begin() + static_cast<long>(split));
  sets.upper.assign(candidates.begin() + static_cast<long>(split), candidates.end());
  double e_lo = 0.0, e_hi = 0.0;
  for (int k : sets.lower) e_lo += system.energies(k);
  for (int k : sets.upper) e_hi += system.energies(k);
  sets.f_central_mhz = e_hi / sets.upper.size() - e_lo / sets.lower.size();
  return sets;
}

double calibrate_pi_time(const SystemConfig& config, const FieldVector& b0, double b1_mt,
                         const Eigen::Vector3d& axis) {
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  const cxmat drive = build_drive_operator(config, axis, b1_mt);
  const cxmat d_eig = sys.vecs.adjoint() * drive * sys.vecs;
  double omega = 0.0;
  for (int i : sets.lower)
    for (int j : sets.upper) omega = std::max(omega, std::abs(d_eig(i, j)));
  if (!(omega > 0.0)) throw std::runtime_error("calibrate_pi_time: drive does not couple the pair");

  PulseSequence seq;
  seq.elements.push_back(Pulse{0.0, b1_mt, sets.f_central_mhz, 0.0, axis});
  seq.readout_levels = sets.upper;
  seq.swept_element = 0;
  const int n_scan = 161;
  const double t_max = 0.8 / omega;
  for (int k = 0; k < n_scan; ++k) seq.sweep_values.push_back(t_max * k / double(n_scan - 1));

  const DensityState rho0 = initial_state(sys, sets.lower, sets.upper, 1.0, 1.0);
  const SignalTrace trace = propagate(seq, config, b0, NoiseModel{}, std::nullopt, rho0);
  size_t best = 0;
  for (size_t k = 1; k < trace.signal.size(); ++k)
    if (trace.signal[k] > trace.signal[best]) best = k;
  // parabolic refinement around the maximum
  if (best > 0 && best + 1 < trace.signal.size()) {
    const double y0 = trace.signal[best - 1], y1 = trace.signal[best], y2 = trace.signal[best + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-300) {
      const double shift = 0.5 * (y0 - y2) / denom;
      return trace.x[best] + shift * (trace.x[1] - trace.x[0]);
    }
  }
  return trace.x[best];
}

namespace {

PulseSequence ramsey_sequence(const ClockLevelSets& sets, double f_mhz, double b1,
                              const Eigen::Vector3d& axis, double t_half,
                              const std::vector<double>& tau) {
  PulseSequence seq;
  seq.elements.push_back(Pulse{t_half, b1, f_mhz, 0.0, axis});
  seq.elements.push_back(Delay{0.0});
  seq.elements.push_back(Pulse{t_half, b1, f_mhz, 0.0, axis});
  seq.readout_levels = sets.upper;
  seq.swept_element = 1;
  seq.sweep_values = tau;
  return seq;
}

}  // namespace

SignalTrace simulate_rabi(const SystemConfig& config, const FieldVector& b0,
                          const std::vector<double>& durations_us, const ExperimentOptions& opts,
                          double detuning_mhz) {
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  PulseSequence seq;
  seq.elements.push_back(Pulse{0.0, opts.b1_mt, sets.f_central_mhz + detuning_mhz, 0.0, opts.axis});
  seq.readout_levels = sets.upper;
  seq.swept_element = 0;
  seq.sweep_values = durations_us;
  const DensityState rho0 =
      initial_state(sys, sets.lower, sets.upper, opts.polarization, opts.pair_weight);
  return propagate(seq, config, b0, opts.noise, opts.antenna, rho0, {opts.rwa, opts.threads});
}

SignalTrace simulate_ramsey(const SystemConfig& config, const FieldVector& b0,
                            double detuning_mhz, const std::vector<double>& tau_us,
                            const ExperimentOptions& opts) {
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  const double t_half = 0.5 * calibrate_pi_time(config, b0, opts.b1_mt, opts.axis);
  PulseSequence seq = ramsey_sequence(sets, sets.f_central_mhz + detuning_mhz, opts.b1_mt,
                                      opts.axis, t_half, tau_us);
  const DensityState rho0 =
      initial_state(sys, sets.lower, sets.upper, opts.polarization, opts.pair_weight);
  return propagate(seq, config, b0, opts.noise, opts.antenna, rho0, {opts.rwa, opts.threads});
}

SignalTrace simulate_hahn(const SystemConfig& config, const FieldVector& b0, double tau_fix_us,
                          const std::vector<double>& tau_var_us, const ExperimentOptions& opts,
                          double detuning_mhz) {
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  const double t_pi = calibrate_pi_time(config, b0, opts.b1_mt, opts.axis);
  const double f = sets.f_central_mhz + detuning_mhz;
  PulseSequence seq;
  seq.elements.push_back(Pulse{0.5 * t_pi, opts.b1_mt, f, 0.0, opts.axis});
  seq.elements.push_back(Delay{tau_fix_us});
  seq.elements.push_back(Pulse{t_pi, opts.b1_mt, f, 0.0, opts.axis});
  seq.elements.push_back(Delay{0.0});
  seq.elements.push_back(Pulse{0.5 * t_pi, opts.b1_mt, f, 0.0, opts.axis});
  seq.readout_levels = sets.upper;
  seq.swept_element = 3;
  seq.sweep_values = tau_var_us;
  const DensityState rho0 =
      initial_state(sys, sets.lower, sets.upper, opts.polarization, opts.pair_weight);
  return propagate(seq, config, b0, opts.noise, opts.antenna, rho0, {opts.rwa, opts.threads});
}

double hahn_echo_amplitude(const SystemConfig& config, const FieldVector& b0, double tau_fix_us,
                           const ExperimentOptions& opts, double detuning_mhz) {
  const SignalTrace trace = simulate_hahn(config, b0, tau_fix_us,
                                          {tau_fix_us, tau_fix_us + 3.0}, opts, detuning_mhz);
  return trace.signal[1] - trace.signal[0];
}

double eseem_two_spin_oracle(double a_par_mhz, double a_perp_mhz, double g_nuclear, double b0_mt,
                             double tau_us) {
  const double w_i = constants::mu_n_over_h_mhz_per_mt * g_nuclear * b0_mt;
  const double w_a = std::hypot(0.5 * a_perp_mhz, w_i + 0.5 * a_par_mhz);
  const double w_b = std::hypot(0.5 * a_perp_mhz, w_i - 0.5 * a_par_mhz);
  if (w_a <= 0.0 || w_b <= 0.0) return 1.0;
  const double k = std::pow(w_i * a_perp_mhz / (w_a * w_b), 2);
  const double t = two_pi * tau_us;
  return 1.0 - 0.25 * k *
                   (2.0 - 2.0 * std::cos(w_a * t) - 2.0 * std::cos(w_b * t) +
                    std::cos((w_a - w_b) * t) + std::cos((w_a + w_b) * t));
}

double hahn_echo_two_spin_numeric(double a_par_mhz, double a_perp_mhz, double g_nuclear,
                                  double b0_mt, double tau_us) {
  const ProductSpace space = ProductSpace::make(
      {SpinSpecies::electron("e", 0.5, 2.0, 2.0), SpinSpecies::nucleus("n", 0.5, g_nuclear)});
  const cxmat sx = embed(space.ops[0].sx, 0, space);
  const cxmat sy = embed(space.ops[0].sy, 0, space);
  const cxmat sz = embed(space.ops[0].sz, 0, space);
  const cxmat ix = embed(space.ops[1].sx, 1, space);
  const cxmat iz = embed(space.ops[1].sz, 1, space);

  const double w_i = constants::mu_n_over_h_mhz_per_mt * g_nuclear * b0_mt;
  // electron Zeeman removed exactly (it commutes with the coupling)
  const cxmat h = sz * (a_par_mhz * iz + a_perp_mhz * ix) + w_i * iz;

  Eigen::SelfAdjointEigenSolver<cxmat> solver(h);
  const cxmat u = [&] {
    cxmat phase = cxmat::Zero(4, 4);
    for (int k = 0; k < 4; ++k)
      phase(k, k) = std::exp(-1i * two_pi * solver.eigenvalues()(k) * tau_us);
    return cxmat(solver.eigenvectors() * phase * solver.eigenvectors().adjoint());
  }();

  auto rot = [&](double angle) {
    Eigen::SelfAdjointEigenSolver<cxmat> sx_eig(sx);
    cxmat phase = cxmat::Zero(4, 4);
    for (int k = 0; k < 4; ++k)
      phase(k, k) = std::exp(-1i * angle * sx_eig.eigenvalues()(k));
    return cxmat(sx_eig.eigenvectors() * phase * sx_eig.eigenvectors().adjoint());
  };
  const cxmat r90 = rot(M_PI / 2.0);
  const cxmat r180 = rot(M_PI);

  // ideal two-pulse echo on the deviation density operator rho0 = Sz
  cxmat rho = sz;
  rho = r90 * rho * r90.adjoint();
  rho = u * rho * u.adjoint();
  rho = r180 * rho * r180.adjoint();
  rho = u * rho * u.adjoint();
  const double echo = (rho * sy).trace().real();

  // normalize to the tau = 0 echo (modulation-free reference)
  cxmat rho_ref = sz;
  rho_ref = r90 * rho_ref * r90.adjoint();
  rho_ref = r180 * rho_ref * r180.adjoint();
  const double ref = (rho_ref * sy).trace().real();
  return echo / ref;
}

}  // namespace vspin
