#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "vspin/dynamics.hpp"
#include "vspin/spectra.hpp"

using namespace vspin;

namespace {

std::vector<double> linspace(double from, double to, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<size_t>(k)] = from + (to - from) * k / double(n - 1);
  return out;
}

// couplings off, nuclear Zeeman on: every level is exactly linear in B
SystemConfig decoupled_config() {
  SystemConfig config = SystemConfig::paper_defaults(0);
  config.defect.a_v_par = 0.0;
  config.defect.a_v_perp = 0.0;
  config.defect.q_zz = 0.0;
  return config;
}

}  // namespace

TEST_CASE("tracked energies agree with untracked diagonalization at every field") {
  // oracle: independent full diagonalization, sorted eigenvalue multiset
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const std::vector<double> axis = linspace(0.0, 50.0, 101);
  const LevelDiagram diagram = sweep_levels(config, axis);
  CHECK(diagram.min_overlap > 0.5);
  for (size_t f = 0; f < axis.size(); f += 10) {
    Eigen::SelfAdjointEigenSolver<cxmat> solver(
        build_static_hamiltonian(config, FieldVector::along_z(axis[f])));
    std::vector<double> tracked(static_cast<size_t>(diagram.dim()));
    for (int k = 0; k < diagram.dim(); ++k)
      tracked[static_cast<size_t>(k)] = diagram.energies(static_cast<Eigen::Index>(f), k);
    std::sort(tracked.begin(), tracked.end());
    for (int k = 0; k < diagram.dim(); ++k)
      CHECK(tracked[static_cast<size_t>(k)] ==
            doctest::Approx(solver.eigenvalues()(k)).epsilon(0).scale(1).epsilon(1e-12));
  }
}

TEST_CASE("decoupled system tracks trivially and stays linear in B") {
  const SystemConfig config = decoupled_config();
  const std::vector<double> axis = linspace(1.0, 50.0, 50);
  const LevelDiagram diagram = sweep_levels(config, axis);
  CHECK(diagram.min_overlap > 0.99);
  for (int k = 0; k < diagram.dim(); ++k) {
    std::vector<double> e(axis.size());
    for (size_t f = 0; f < axis.size(); ++f)
      e[f] = diagram.energies(static_cast<Eigen::Index>(f), k);
    const auto fit = testing::linear_regression(axis, e);
    for (size_t f = 0; f < axis.size(); ++f)
      CHECK(std::abs(e[f] - (fit.slope * axis[f] + fit.intercept)) < 1e-9);
  }
}

TEST_CASE("sweep_levels input validation") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  CHECK_THROWS_AS(sweep_levels(config, {10.0}), std::invalid_argument);
  CHECK_THROWS_AS(sweep_levels(config, {10.0, 5.0}), std::invalid_argument);
}

TEST_CASE("clock transition sits at 30 +/- 0.5 mT and matches a brute-force scan") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const KetLabel up = parse_ket_vpart("up,-5/2");
  const KetLabel down = parse_ket_vpart("down,-7/2");
  const ClockResult result = find_clock_transition(config, up, down, BRange{20.0, 40.0});
  REQUIRE(result.found);
  CHECK(result.b_star_mt == doctest::Approx(30.0).epsilon(0.5 / 30.0));
  CHECK(result.dfdb_mhz_per_mt < 1e-3);

  // 1 uT brute-force grid scan oracle: agreement within one grid step
  const auto scan = testing::clock_grid_scan(config, up, down, result.b_star_mt - 0.05,
                                             result.b_star_mt + 0.05, 1e-3);
  CHECK(std::abs(scan.b_star_mt - result.b_star_mt) <= 1e-3 + 1e-9);
}

TEST_CASE("a field-linear pair yields an explicit not-found result") {
  const SystemConfig config = decoupled_config();
  const ClockResult result = find_clock_transition(config, parse_ket_vpart("up,-5/2"),
                                                   parse_ket_vpart("down,-7/2"), BRange{10.0, 40.0});
  CHECK_FALSE(result.found);
  CHECK_FALSE(result.message.empty());
}

TEST_CASE("transition table invariants at 33 mT") {
  const SystemConfig config = SystemConfig::paper_defaults(1);
  const TransitionTable table = transitions(config, 33.0, Eigen::Vector3d::UnitZ(), 0.0);
  REQUIRE_FALSE(table.rows.empty());

  Eigen::SelfAdjointEigenSolver<cxmat> solver(
      build_static_hamiltonian(config, FieldVector::along_z(33.0)));
  for (const Transition& t : table.rows) {
    CHECK(t.frequency >= 0.0);
    CHECK(t.strength >= 0.0);
    CHECK(t.strength <= 1.0);
    CHECK(t.i < t.j);
    // tabulated frequency equals the level difference at the same field
    CHECK(std::abs(t.frequency - (solver.eigenvalues()(t.j) - solver.eigenvalues()(t.i))) < 1e-9);
  }
  CHECK_THROWS_AS(transitions(config, 33.0, Eigen::Vector3d::UnitZ(), 1.0), std::invalid_argument);
}

TEST_CASE("clock-manifold transitions: DT_I central plus one sidepeak pair") {
  const SystemConfig config = SystemConfig::paper_defaults(1);
  const TransitionTable table = transitions(config, 33.0, Eigen::Vector3d::UnitZ(), 0.05);
  const StaticSystem dt0 =
      make_static_system(SystemConfig::paper_defaults(0), FieldVector::along_z(33.0));
  const double f0 = clock_level_sets(dt0).f_central_mhz;

  std::vector<Transition> window;
  for (const Transition& t : table.rows)
    if (std::abs(t.frequency - f0) < 4.0) window.push_back(t);
  REQUIRE(window.size() == 4);

  // strong sidepeak transitions, one on either side of the central line, and
  // a weak near-degenerate central pair that merges under any realistic
  // linewidth; the clock transition carries a Delta m_i = 1 flip of the 51V
  // spin (the levels are electron-nuclear flip-flop hybrids)
  std::vector<double> strong, weak;
  for (const Transition& t : window) {
    CHECK(std::abs(t.delta_mi) == 1);
    if (t.strength > 0.5)
      strong.push_back(t.frequency - f0);
    else
      weak.push_back(t.frequency - f0);
  }
  REQUIRE(strong.size() == 2);
  REQUIRE(weak.size() == 2);
  std::sort(strong.begin(), strong.end());
  std::sort(weak.begin(), weak.end());
  CHECK(strong.front() < 0.0);
  CHECK(strong.back() > 0.0);
  CHECK(std::abs(strong.front() + strong.back()) < 0.45);
  CHECK(std::abs(weak.front()) < 0.3);
  CHECK(std::abs(weak.back()) < 0.3);
}

TEST_CASE("the pure nuclear branch frequency is near-linear over 20-28 mT") {
  // levels |up,-7/2> and |up,-3/2>; the transition is a Delta m_i = 2
  // nuclear flip of the 51V spin
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const std::vector<double> axis = linspace(20.0, 28.0, 81);
  const LevelDiagram diagram = sweep_levels(config, axis);
  const int ia = diagram.level_by_label(parse_ket_vpart("up,-7/2"));
  const int ib = diagram.level_by_label(parse_ket_vpart("up,-3/2"));
  CHECK((diagram.labels[static_cast<size_t>(ia)].mi2 - diagram.labels[static_cast<size_t>(ib)].mi2) /
            2 ==
        -2);
  std::vector<double> freq(axis.size());
  for (size_t f = 0; f < axis.size(); ++f)
    freq[f] = std::abs(diagram.energies(static_cast<Eigen::Index>(f), ia) -
                       diagram.energies(static_cast<Eigen::Index>(f), ib));
  const auto fit = testing::linear_regression(axis, freq);
  CHECK(fit.r_squared > 0.995);
}

TEST_CASE("composition profiles and validation") {
  const EnsembleComposition pure = EnsembleComposition::from_wavelength("1278.86 nm");
  CHECK(pure.w0 == doctest::Approx(1.0));
  const EnsembleComposition mixed = EnsembleComposition::from_wavelength("1278.76 nm");
  CHECK(mixed.w2 == doctest::Approx(0.6));
  CHECK(mixed.w2 / mixed.w1 == doctest::Approx(3.0));
  CHECK_THROWS_AS(EnsembleComposition::from_wavelength("1300 nm"), std::invalid_argument);
  EnsembleComposition empty{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("DT0-only spectrum is a single Gaussian line") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const std::vector<double> f_axis = linspace(431.0, 441.0, 1501);
  const SpectrumTrace trace = odmr_spectrum(config.defect, config.si, 33.0,
                                            EnsembleComposition{1.0, 0.0, 0.0}, 0.45, f_axis);
  const auto peaks = find_spectrum_peaks(trace, 0.01);
  REQUIRE(peaks.size() == 1);
  // shape matches one Gaussian at the peak position
  const std::vector<double> oracle =
      testing::naive_gaussian_sum(f_axis, {peaks.front().f_mhz}, {1.0}, 0.45);
  for (size_t k = 0; k < f_axis.size(); ++k) CHECK(std::abs(trace.intensity[k] - oracle[k]) < 2e-3);
}

TEST_CASE("ensemble spectrum equals the naive per-transition Gaussian sum") {
  // oracle: direct stick accumulation recomputed from the eigensystems
  const SystemConfig base = SystemConfig::paper_defaults(0);
  const std::vector<double> f_axis = linspace(430.0, 442.0, 901);
  const EnsembleComposition comp{0.2, 0.2, 0.6};
  const double fwhm = 0.45;
  const SpectrumTrace trace = odmr_spectrum(base.defect, base.si, 33.0, comp, fwhm, f_axis);

  std::vector<double> centers, weights;
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const std::array<double, 3> w{comp.w0, comp.w1, comp.w2};
  for (int n_si = 0; n_si < 3; ++n_si) {
    SystemConfig config = base;
    config.n_si = n_si;
    const StaticSystem sys = make_static_system(config, FieldVector::along_z(33.0));
    const cxmat d = sys.vecs.adjoint() *
                    build_drive_operator(config, Eigen::Vector3d::UnitZ(), 1.0) * sys.vecs;
    for (int i = 0; i < sys.dim(); ++i)
      for (int j = i + 1; j < sys.dim(); ++j) {
        const double f = sys.energies(j) - sys.energies(i);
        if (f < f_axis.front() - 6.0 * sigma || f > f_axis.back() + 6.0 * sigma) continue;
        centers.push_back(f);
        weights.push_back(w[static_cast<size_t>(n_si)] * std::abs(d(i, j)));
      }
  }
  std::vector<double> oracle = testing::naive_gaussian_sum(f_axis, centers, weights, fwhm);
  const double top = *std::max_element(oracle.begin(), oracle.end());
  for (double& v : oracle) v /= top;
  for (size_t k = 0; k < f_axis.size(); ++k)
    CHECK(std::abs(trace.intensity[k] - oracle[k]) < 1e-10);

  // five-peak structure of the mixed ensemble
  const auto peaks = find_spectrum_peaks(trace, 0.02);
  CHECK(peaks.size() == 5);
}

TEST_CASE("spectrum is linear in composition weights") {
  const SystemConfig base = SystemConfig::paper_defaults(0);
  const std::vector<double> f_axis = linspace(432.0, 440.0, 301);
  auto raw = [&](const EnsembleComposition& c) {
    const SpectrumTrace t = odmr_spectrum(base.defect, base.si, 33.0, c, 0.5, f_axis);
    std::vector<double> out(t.intensity.size());
    for (size_t k = 0; k < out.size(); ++k) out[k] = t.intensity[k] * t.raw_peak;
    return out;
  };
  // normalized weights: (0.5, 0.25, 0.25) = 0.5*(1,0,0) + 0.25*(0,1,0) + 0.25*(0,0,1)
  const auto mix = raw(EnsembleComposition{0.5, 0.25, 0.25});
  const auto s0 = raw(EnsembleComposition{1.0, 0.0, 0.0});
  const auto s1 = raw(EnsembleComposition{0.0, 1.0, 0.0});
  const auto s2 = raw(EnsembleComposition{0.0, 0.0, 1.0});
  for (size_t k = 0; k < mix.size(); ++k)
    CHECK(mix[k] == doctest::Approx(0.5 * s0[k] + 0.25 * s1[k] + 0.25 * s2[k]).epsilon(1e-12));
}

TEST_CASE("sidepeaks sit symmetrically about the central line at 33 mT") {
  const SystemConfig base = SystemConfig::paper_defaults(0);
  const std::vector<double> f_axis = linspace(430.0, 442.0, 2401);
  const double fwhm = 0.45;
  const SpectrumTrace dt1 = odmr_spectrum(base.defect, base.si, 33.0,
                                          EnsembleComposition{0.0, 1.0, 0.0}, fwhm, f_axis);
  const auto peaks = find_spectrum_peaks(dt1, 0.05);
  REQUIRE(peaks.size() == 2);
  // the central line of the ensemble is the DT0 transition
  const SpectrumTrace dt0 = odmr_spectrum(base.defect, base.si, 33.0,
                                          EnsembleComposition{1.0, 0.0, 0.0}, fwhm, f_axis);
  const double central = find_spectrum_peaks(dt0, 0.5).front().f_mhz;
  CHECK(std::abs(0.5 * (peaks.front().f_mhz + peaks.back().f_mhz) - central) < fwhm);
}

TEST_CASE("odmr_spectrum rejects bad inputs") {
  const SystemConfig base = SystemConfig::paper_defaults(0);
  const std::vector<double> f_axis = linspace(430.0, 440.0, 11);
  CHECK_THROWS_AS(odmr_spectrum(base.defect, base.si, 33.0, EnsembleComposition{0, 0, 0}, 0.5, f_axis),
                  std::invalid_argument);
  CHECK_THROWS_AS(odmr_spectrum(base.defect, base.si, 33.0, EnsembleComposition{1, 0, 0}, -0.5, f_axis),
                  std::invalid_argument);
  CHECK_THROWS_AS(odmr_spectrum(base.defect, base.si, 33.0, EnsembleComposition{1, 0, 0}, 0.5, {}),
                  std::invalid_argument);
}
