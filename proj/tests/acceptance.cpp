// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line. Tolerances are pinned in code.
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "vspin/constants.hpp"
#include "vspin/dynamics.hpp"
#include "vspin/fitting.hpp"
#include "vspin/spectra.hpp"
#include "vspin/validate.hpp"

using namespace vspin;

namespace {

struct Criterion {
  int id;
  const char* title;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      std::printf("    failed: %s\n", what.c_str());
      ok = false;
    }
  }
  void report() const {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, title);
    std::fflush(stdout);
  }
};

std::vector<double> linspace(double from, double to, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<size_t>(k)] = from + (to - from) * k / double(n - 1);
  return out;
}

double si_larmor_mhz(double b_mt) {
  return constants::mu_n_over_h_mhz_per_mt * std::abs(constants::g_nuclear_si29) * b_mt;
}

// gap between two tracked levels along a diagram
std::vector<double> pair_gap(const LevelDiagram& d, int ia, int ib) {
  std::vector<double> gap(d.b_mt.size());
  for (size_t f = 0; f < gap.size(); ++f)
    gap[f] = std::abs(d.energies(static_cast<Eigen::Index>(f), ia) -
                      d.energies(static_cast<Eigen::Index>(f), ib));
  return gap;
}

// field of the interior minimum of a gap curve, or -1 if the minimum is at an edge
double interior_gap_minimum(const std::vector<double>& b, const std::vector<double>& gap) {
  size_t k_min = 0;
  for (size_t k = 1; k < gap.size(); ++k)
    if (gap[k] < gap[k_min]) k_min = k;
  if (k_min == 0 || k_min + 1 == gap.size()) return -1.0;
  return b[k_min];
}

const double b_clock_operating = 30.0;  // the operating field of the clock-point measurements

}  // namespace

TEST_CASE("criterion 1: clock transition field") {
  Criterion c{1, "clock transition at B* = 30.0 +/- 0.5 mT for the (|up,-5/2>, |down,-7/2>) pair"};
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const ClockResult result =
      find_clock_transition(config, parse_ket_vpart("up,-5/2"), parse_ket_vpart("down,-7/2"),
                            BRange{20.0, 40.0});
  c.expect(result.found, "stationary point not found: " + result.message);
  if (result.found) {
    c.expect(std::abs(result.b_star_mt - 30.0) <= 0.5,
             "b_star = " + std::to_string(result.b_star_mt) + " mT outside 30.0 +/- 0.5");
    c.expect(result.dfdb_mhz_per_mt < 1e-3,
             "|d(dE)/dB| = " + std::to_string(result.dfdb_mhz_per_mt) + " MHz/mT above 1 kHz/mT");
    c.expect(result.f_star_mhz > 0.0, "empty transition frequency");
    std::printf("    b_star = %.3f mT, f_star = %.3f MHz\n", result.b_star_mt, result.f_star_mhz);
  }
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 2: level-diagram anti-crossings") {
  Criterion c{2, "final anti-crossing near 30 mT plus several at lower field"};
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const LevelDiagram diagram = sweep_levels(config, linspace(0.5, 50.0, 496));

  const double b_clock = interior_gap_minimum(
      diagram.b_mt, pair_gap(diagram, diagram.level_by_label(parse_ket_vpart("up,-5/2")),
                             diagram.level_by_label(parse_ket_vpart("down,-7/2"))));
  c.expect(b_clock > 29.0 && b_clock < 31.0,
           "highlighted pair gap minimum at " + std::to_string(b_clock) + " mT, expected near 30");

  // the lower-field anti-crossings of the neighboring hyperfine pairs
  const double b_m2 = interior_gap_minimum(
      diagram.b_mt, pair_gap(diagram, diagram.level_by_label(parse_ket_vpart("up,-3/2")),
                             diagram.level_by_label(parse_ket_vpart("down,-5/2"))));
  const double b_m1 = interior_gap_minimum(
      diagram.b_mt, pair_gap(diagram, diagram.level_by_label(parse_ket_vpart("up,-1/2")),
                             diagram.level_by_label(parse_ket_vpart("down,-3/2"))));
  c.expect(b_m2 > 17.0 && b_m2 < 23.0,
           "second anti-crossing at " + std::to_string(b_m2) + " mT, expected near 20");
  c.expect(b_m1 > 7.0 && b_m1 < 13.0,
           "third anti-crossing at " + std::to_string(b_m1) + " mT, expected near 10");
  std::printf("    anti-crossings at %.2f, %.2f and %.2f mT\n", b_m1, b_m2, b_clock);
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 3: ODMR sidepeak structure and suppression") {
  Criterion c{3, "DT_I: 2 sidepeaks, DT_II: 4, symmetric; sidepeaks collapse at 29-30 mT"};
  const SystemConfig base = SystemConfig::paper_defaults(0);
  const double fwhm = 0.45;

  // central reference: the DT0 line at 33 mT
  const StaticSystem dt0_sys = make_static_system(base, FieldVector::along_z(33.0));
  const double f0 = clock_level_sets(dt0_sys).f_central_mhz;
  const std::vector<double> f_axis = linspace(f0 - 4.0, f0 + 4.0, 3201);

  // DT_I: exactly two sidepeak maxima, symmetric about the central line
  const SpectrumTrace dt1 = odmr_spectrum(base.defect, base.si, 33.0,
                                          EnsembleComposition{0, 1, 0}, fwhm, f_axis);
  const auto p1 = find_spectrum_peaks(dt1, 0.05);
  c.expect(p1.size() == 2, "DT_I shows " + std::to_string(p1.size()) + " maxima, expected 2");
  if (p1.size() == 2) {
    c.expect(std::abs(0.5 * (p1.front().f_mhz + p1.back().f_mhz) - f0) < fwhm,
             "DT_I sidepeaks not symmetric about the central line");
    c.expect(p1.front().f_mhz < f0 && p1.back().f_mhz > f0, "DT_I peaks not on either side");
  }

  // DT_II: the five-Gaussian decomposition used for the measured spectra:
  // central line plus symmetric inner and outer sidepeak pairs
  const SpectrumTrace dt2 = odmr_spectrum(base.defect, base.si, 33.0,
                                          EnsembleComposition{0, 0, 1}, fwhm, f_axis);
  FitData spec_data;
  spec_data.x = dt2.f_mhz;
  spec_data.y = dt2.intensity;
  const GaussianPeakModelSpec five{5};
  Eigen::VectorXd seed5(16);
  const double offsets[5] = {-1.5, -0.75, 0.0, 0.75, 1.5};
  for (int i = 0; i < 5; ++i) {
    seed5(3 * i) = (i == 2) ? 1.0 : 0.3;
    seed5(3 * i + 1) = f0 + offsets[i];
    seed5(3 * i + 2) = 0.6;
  }
  seed5(15) = 0.0;
  const FitResult fit5 = fit_curve(five, spec_data, seed5);
  c.expect(fit5.converged, "five-Gaussian fit of the DT_II spectrum did not converge");

  const GaussianPeakModelSpec three{3};
  Eigen::VectorXd seed3(10);
  for (int i = 0; i < 3; ++i) {
    seed3(3 * i) = (i == 1) ? 1.0 : 0.4;
    seed3(3 * i + 1) = f0 + offsets[1 + i] * 2.0;
    seed3(3 * i + 2) = 0.6;
  }
  seed3(9) = 0.0;
  const FitResult fit3 = fit_curve(three, spec_data, seed3);

  if (fit5.converged) {
    std::vector<std::pair<double, double>> comps;  // (center, amplitude)
    for (int i = 0; i < 5; ++i) comps.emplace_back(fit5.estimates(3 * i + 1), fit5.estimates(3 * i));
    std::sort(comps.begin(), comps.end());
    const double central_amp = comps[2].second;
    c.expect(std::abs(comps[2].first - f0) < fwhm, "DT_II central component away from the line");
    for (int i : {0, 1, 3, 4})
      c.expect(comps[static_cast<size_t>(i)].second > 0.05 * central_amp,
               "DT_II sidepeak component " + std::to_string(i) + " insignificant");
    c.expect(std::abs(0.5 * (comps[1].first + comps[3].first) - comps[2].first) < fwhm,
             "inner sidepeak pair not symmetric");
    c.expect(std::abs(0.5 * (comps[0].first + comps[4].first) - comps[2].first) < fwhm,
             "outer sidepeak pair not symmetric");
    c.expect(comps[1].first - comps[0].first > 0.3 && comps[4].first - comps[3].first > 0.3,
             "inner and outer sidepeaks do not separate");
    // the inner pair carries real weight: without it the fit degrades hard
    c.expect(fit3.residual_norm > 3.0 * fit5.residual_norm,
             "three-Gaussian fit fits as well as five: no inner sidepeaks present");
    std::printf("    DT_II sidepeaks at %+.2f, %+.2f, %+.2f, %+.2f MHz about the line\n",
                comps[0].first - f0, comps[1].first - f0, comps[3].first - f0,
                comps[4].first - f0);
  }

  // suppression: sidepeak/central ratio collapses between 29 and 30 mT
  auto sidepeak_ratio = [&](double b_mt) {
    const StaticSystem sys = make_static_system(base, FieldVector::along_z(b_mt));
    const double fc = clock_level_sets(sys).f_central_mhz;
    const SpectrumTrace trace =
        odmr_spectrum(base.defect, base.si, b_mt, EnsembleComposition{0, 0, 1}, fwhm,
                      linspace(fc - 4.0, fc + 4.0, 3201));
    const auto peaks = find_spectrum_peaks(trace, 0.005);
    double central = 0.0, side = 0.0;
    for (const auto& p : peaks) {
      if (std::abs(p.f_mhz - fc) < fwhm)
        central = std::max(central, p.height);
      else
        side = std::max(side, p.height);
    }
    return central > 0.0 ? side / central : 0.0;
  };
  const double ratio_33 = sidepeak_ratio(33.0);
  c.expect(ratio_33 > 0.2, "DT_II sidepeaks not visible at 33 mT");
  for (double b : {29.0, 29.5, 30.0}) {
    const double ratio = sidepeak_ratio(b);
    c.expect(ratio < 0.2 * ratio_33, "sidepeak/central ratio at " + std::to_string(b) +
                                         " mT is " + std::to_string(ratio) +
                                         ", not below 0.2 x its 33 mT value");
  }
  std::printf("    sidepeak/central: %.3f at 33 mT, %.4f at 29.5 mT\n", ratio_33,
              sidepeak_ratio(29.5));
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 4: nuclear modulation at the clock point") {
  Criterion c{4, "DT_I fringe modulation at the bare 29Si Larmor frequency, steps 0.27 +/- 0.04"};
  // At the exact stationary field the 29Si modulation depth vanishes by
  // symmetry (the decoupling the clock transition provides); the measurement
  // operates at 30.0 mT, inside the B* = 30.0 +/- 0.5 window of criterion 1.
  const SystemConfig config = SystemConfig::paper_defaults(1);
  const FieldVector b0 = FieldVector::along_z(b_clock_operating);
  ExperimentOptions opts;
  opts.b1_mt = 0.1;
  const double detuning = 1.0;
  const std::vector<double> tau = linspace(0.0, 79.9, 800);
  const SignalTrace trace = simulate_ramsey(config, b0, detuning, tau, opts);

  // carrier group removal: the components within 0.15 MHz of the detuning are
  // unresolvable at the measured T2* and act as one central fringe
  std::vector<double> y(trace.signal);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  for (double& v : y) v -= mean;
  const double guard = 0.15;
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<double> grid = linspace(detuning - guard, detuning + guard, 12001);
    const std::vector<double> power = periodogram(tau, y, grid);
    size_t best = 0;
    for (size_t q = 1; q < power.size(); ++q)
      if (power[q] > power[best]) best = q;
    const double f = grid[best];
    double ss = 0, sc = 0, cc = 0, sy = 0, cy = 0;
    for (size_t k = 0; k < y.size(); ++k) {
      const double s = std::sin(2 * M_PI * f * tau[k]), co = std::cos(2 * M_PI * f * tau[k]);
      ss += s * s;
      sc += s * co;
      cc += co * co;
      sy += s * y[k];
      cy += co * y[k];
    }
    const double det = ss * cc - sc * sc;
    const double as = (cc * sy - sc * cy) / det;
    const double ac = (ss * cy - sc * sy) / det;
    for (size_t k = 0; k < y.size(); ++k)
      y[k] -= as * std::sin(2 * M_PI * f * tau[k]) + ac * std::cos(2 * M_PI * f * tau[k]);
  }

  const auto sidebands = testing::trace_peak_frequencies(tau, y, 2.0, 0.2, 0.05);
  std::vector<double> offsets;
  for (double f : sidebands)
    if (std::abs(f - detuning) > guard) offsets.push_back(std::abs(f - detuning));
  c.expect(offsets.size() >= 2, "expected nuclear sidebands on both sides of the carrier, found " +
                                    std::to_string(offsets.size()));
  const double larmor = si_larmor_mhz(b_clock_operating);
  for (double off : offsets) {
    c.expect(std::abs(off - larmor) / larmor < 0.15,
             "modulation frequency " + std::to_string(off) + " MHz not within 15% of the bare " +
                 std::to_string(larmor) + " MHz");
    c.expect(off > 0.23 && off < 0.31,
             "fringe component spacing " + std::to_string(off) + " MHz outside 0.27 +/- 0.04");
  }
  if (!offsets.empty())
    std::printf("    modulation frequencies: %.4f / %.4f MHz, bare Larmor %.4f MHz\n",
                offsets.front(), offsets.back(), larmor);
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 5: refocusing under quasi-static noise") {
  Criterion c{5, "Hahn echo amplitude constant to 1% out to 2 tau = 26 us while Ramsey decays"};
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const FieldVector b0 = FieldVector::along_z(33.0);
  ExperimentOptions opts;
  opts.b1_mt = 0.1;
  opts.noise.sigma_b_mt = 0.05;
  opts.noise.n_noise_samples = 200;
  opts.noise.rng_seed = 11;

  const SignalTrace ramsey = simulate_ramsey(config, b0, 1.0, linspace(0.0, 5.0, 101), opts);
  auto contrast = [&](double lo, double hi) {
    double vmin = 1e9, vmax = -1e9;
    for (size_t k = 0; k < ramsey.x.size(); ++k)
      if (ramsey.x[k] >= lo && ramsey.x[k] <= hi) {
        vmin = std::min(vmin, ramsey.signal[k]);
        vmax = std::max(vmax, ramsey.signal[k]);
      }
    return vmax - vmin;
  };
  const double early = contrast(0.0, 1.5);
  const double late = contrast(3.5, 5.0);
  c.expect(late < 0.3 * early, "Ramsey contrast did not decay: " + std::to_string(early) + " -> " +
                                   std::to_string(late));

  std::vector<double> amps;
  for (double tf : {4.0, 7.0, 10.0, 13.0}) amps.push_back(hahn_echo_amplitude(config, b0, tf, opts));
  double a_mean = 0.0;
  for (double a : amps) a_mean += a;
  a_mean /= amps.size();
  for (size_t k = 0; k < amps.size(); ++k)
    c.expect(std::abs(amps[k] - a_mean) < 0.01 * std::abs(a_mean),
             "echo amplitude drifts at 2 tau = " + std::to_string(8.0 + 6.0 * k) + " us");
  std::printf("    Ramsey contrast %.3f -> %.3f; echo amplitudes %.4f..%.4f over 2tau = 8..26 us\n",
              early, late, *std::min_element(amps.begin(), amps.end()),
              *std::max_element(amps.begin(), amps.end()));
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 6: fit round-trip on synthetic five-component Ramsey data") {
  Criterion c{6, "five-component damped-sinusoid recovery: f_i to 0.02 MHz, T2 to 20%, sharing selected"};
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const FieldVector b0 = FieldVector::along_z(30.0);
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  const std::vector<double> dets{0.46, 0.73, 1.0, 1.27, 1.54};
  const std::vector<double> tau = linspace(0.0, 20.0, 801);

  auto make_mixture = [&](const std::vector<double>& t2s, uint64_t seed) {
    FitData data;
    data.x = tau;
    data.y.assign(tau.size(), 0.0);
    for (size_t i = 0; i < dets.size(); ++i) {
      ExperimentOptions opts;
      opts.b1_mt = 0.1;
      opts.noise.extra_dephasing_rates.push_back(
          {sets.lower.front(), sets.upper.front(), 1.0 / t2s[i]});
      std::vector<double> tau_inf(tau);
      tau_inf.push_back(1.0e5);  // fully dephased point gives the exact asymptote
      const SignalTrace t = simulate_ramsey(config, b0, dets[i], tau_inf, opts);
      for (size_t k = 0; k < tau.size(); ++k) data.y[k] += 0.2 * (t.signal[k] - t.signal.back());
    }
    double rms = 0.0;
    for (double v : data.y) rms += v * v;
    rms = std::sqrt(rms / data.y.size());
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, 0.05 * rms);
    for (double& v : data.y) v += dist(gen);
    return data;
  };

  const std::vector<double> split_t2{0.7, 7.2, 0.7, 7.2, 0.7};
  const FitData split_data = make_mixture(split_t2, 20230501);
  const RamseyModelSpec spec{5, false};
  const FitResult fit = fit_curve(spec, split_data, seed_ramsey_guess(split_data, 5, false));
  c.expect(fit.converged, "five-component fit did not converge: " + fit.message);
  if (fit.converged) {
    Eigen::VectorXd p = canonicalize(spec, fit.estimates);
    std::vector<int> order{0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return p(4 * a + 1) < p(4 * b + 1); });
    for (int q = 0; q < 5; ++q) {
      const int i = order[static_cast<size_t>(q)];
      c.expect(std::abs(p(4 * i + 1) - dets[static_cast<size_t>(q)]) < 0.02,
               "f_" + std::to_string(q + 1) + " = " + std::to_string(p(4 * i + 1)) +
                   " off by more than 0.02 MHz");
      c.expect(std::abs(p(4 * i + 3) - split_t2[static_cast<size_t>(q)]) /
                       split_t2[static_cast<size_t>(q)] <
                   0.2,
               "T2_" + std::to_string(q + 1) + " = " + std::to_string(p(4 * i + 3)) +
                   " off by more than 20%");
    }
  }

  const SharingSelection split_sel = model_select_t2_sharing(split_data, 5);
  c.expect(split_sel.choice == T2Sharing::per_component,
           "split data did not select per-component T2");
  const FitData shared_data = make_mixture({2.0, 2.0, 2.0, 2.0, 2.0}, 555);
  const SharingSelection shared_sel = model_select_t2_sharing(shared_data, 5);
  c.expect(shared_sel.choice == T2Sharing::shared, "shared data did not select shared T2");
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 7: oracle equivalences") {
  Criterion c{7, "independent assembler, Mims ESEEM, lab-frame propagation, generalized Rabi"};

  // (a) Hamiltonian eigenvalues vs the independent assembler
  double worst_h = 0.0;
  for (int n_si : {0, 1, 2}) {
    const SystemConfig config = SystemConfig::paper_defaults(n_si);
    for (double b : {0.0, 9.5, 21.0, 30.0, 47.5}) {
      Eigen::SelfAdjointEigenSolver<cxmat> s1(
          build_static_hamiltonian(config, FieldVector::along_z(b)));
      Eigen::SelfAdjointEigenSolver<cxmat> s2(
          oracle_static_hamiltonian(config, FieldVector::along_z(b)));
      worst_h = std::max(worst_h, (s1.eigenvalues() - s2.eigenvalues()).cwiseAbs().maxCoeff());
    }
  }
  c.expect(worst_h < 1e-8, "assembler mismatch " + std::to_string(worst_h) + " MHz");

  // (b) numerical two-spin Hahn echo vs the analytic Mims form
  double worst_e = 0.0;
  for (double tau : linspace(0.0, 12.0, 49))
    worst_e = std::max(
        worst_e, std::abs(eseem_two_spin_oracle(-8.2, -3.6, constants::g_nuclear_si29, 30.0, tau) -
                          hahn_echo_two_spin_numeric(-8.2, -3.6, constants::g_nuclear_si29, 30.0,
                                                     tau)));
  c.expect(worst_e < 1e-6, "ESEEM mismatch " + std::to_string(worst_e));

  // (c) RWA vs direct lab-frame stepping on the isolated pair (dim 16)
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const FieldVector b0 = FieldVector::along_z(29.82);
  ExperimentOptions opts;
  opts.b1_mt = 0.13;  // ~1.5 MHz coupling
  const std::vector<double> durations = linspace(0.0, 0.65, 14);
  const SignalTrace rwa = simulate_rabi(config, b0, durations, opts);
  ExperimentOptions lab_opts = opts;
  lab_opts.rwa = false;
  const SignalTrace lab = simulate_rabi(config, b0, durations, lab_opts);
  double worst_p = 0.0;
  for (size_t k = 0; k < durations.size(); ++k)
    worst_p = std::max(worst_p, std::abs(rwa.signal[k] - lab.signal[k]));
  c.expect(worst_p < 0.01, "RWA vs lab-frame population mismatch " + std::to_string(worst_p));

  // (d) generalized Rabi frequency sqrt(Omega^2 + delta^2)
  const StaticSystem sys = make_static_system(config, b0);
  const ClockLevelSets sets = clock_level_sets(sys);
  const cxmat d =
      sys.vecs.adjoint() * build_drive_operator(config, Eigen::Vector3d::UnitZ(), 0.13) * sys.vecs;
  const double omega = std::abs(d(sets.lower.front(), sets.upper.front()));
  const SignalTrace detuned = simulate_rabi(config, b0, linspace(0.0, 6.0, 601), opts, 2.0);
  const auto peaks = testing::trace_peak_frequencies(detuned.x, detuned.signal, 5.0, 0.999, 0.05);
  const double expected = std::hypot(omega, 2.0);
  c.expect(!peaks.empty() && std::abs(peaks.front() - expected) / expected < 0.01,
           "generalized Rabi frequency off by more than 1%");

  std::printf("    assembler %.1e MHz, ESEEM %.1e, RWA-vs-lab %.1e, Rabi %.4f vs %.4f MHz\n",
              worst_h, worst_e, worst_p, peaks.empty() ? 0.0 : peaks.front(), expected);
  c.report();
  CHECK(c.ok);
}

TEST_CASE("criterion 8: structural invariants via the validate subcommand") {
  Criterion c{8, "validate subcommand passes every structural check"};
  const std::string cmd = std::string(VSPIN_CLI_PATH) + " validate --out /tmp/vspin_acceptance_validate";
  const int status = std::system(cmd.c_str());
  c.expect(status == 0, "validate exited with status " + std::to_string(status));
  c.report();
  CHECK(c.ok);
}
