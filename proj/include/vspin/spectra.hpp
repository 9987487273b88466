#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "vspin/hamiltonian.hpp"

// Eigenlevel sweeps with adiabatic state tracking, clock-transition location,
// transition tables and ensemble ODMR spectra.
namespace vspin {

struct TrackingError : std::runtime_error {
  double b_lo, b_hi;
  TrackingError(double lo, double hi)
      : std::runtime_error("adiabatic tracking failed between " + std::to_string(lo) + " mT and " +
                           std::to_string(hi) + " mT (overlap below 0.5 after refinement)"),
        b_lo(lo),
        b_hi(hi) {}
};

struct LevelDiagram {
  std::vector<double> b_mt;          // requested field axis
  Eigen::MatrixXd energies;          // n_fields x dim, tracked order (MHz)
  std::vector<KetLabel> labels;      // dominant kets at the high-field end
  std::vector<std::vector<int>> tracking;  // per field: tracked slot -> sorted rank
  double min_overlap = 1.0;          // worst per-level overlap seen along the sweep

  int dim() const { return static_cast<int>(energies.cols()); }
  // Tracked slot whose high-field label matches the given V part (n_si = 0 ->
  // unique); throws if absent or ambiguous.
  int level_by_label(const KetLabel& v_part) const;
};

LevelDiagram sweep_levels(const SystemConfig& config, const std::vector<double>& b_axis_mt);

struct ClockResult {
  bool found = false;
  double b_star_mt = 0.0;
  double f_star_mhz = 0.0;
  double dfdb_mhz_per_mt = 0.0;  // |d(dE)/dB| at b_star
  std::string message;
};

struct BRange {
  double lo_mt = 0.0, hi_mt = 0.0;
};

// Locates the field where the tracked pair's gap is stationary via
// golden-section refinement of the finite-difference derivative.
ClockResult find_clock_transition(const SystemConfig& config, const KetLabel& level_a,
                                  const KetLabel& level_b, const BRange& range);

struct Transition {
  int i = 0, j = 0;          // level indices, i < j, sorted-energy order at b0
  double frequency = 0.0;    // MHz, E_j - E_i
  double strength = 0.0;     // |<j|H_drive|i>| normalized to the largest element
  int delta_mi = 0;          // 51V nuclear m_i change from dominant-ket labels
};

struct TransitionTable {
  std::vector<Transition> rows;
  std::vector<KetLabel> labels;  // per level at b0
  double max_element_mhz = 0.0;  // normalization scale (raw, for b1 = 1 mT)
};

TransitionTable transitions(const SystemConfig& config, double b0_mt,
                            const Eigen::Vector3d& drive_axis, double threshold);

struct EnsembleComposition {
  double w0 = 1.0, w1 = 0.0, w2 = 0.0;  // DT0, DT_I, DT_II weights

  void validate() const;
  void normalize();
  // "1278.86 nm" -> (1,0,0); "1278.76 nm" -> (1/5,1/5,3/5)
  static EnsembleComposition from_wavelength(const std::string& tag);
};

struct SpectrumTrace {
  std::vector<double> f_mhz;
  std::vector<double> intensity;  // normalized, strongest feature = 1
  double b0_mt = 0.0;
  EnsembleComposition composition;
  double linewidth_fwhm_mhz = 0.0;
  double raw_peak = 0.0;  // pre-normalization maximum (intensity * raw_peak is linear in weights)
};

// Gaussian-broadened stick spectrum: sticks at transition frequencies with
// weight (drive matrix element)^2 times the subensemble weight.
SpectrumTrace odmr_spectrum(const DefectParams& defect, const SiCouplingParams& si, double b0_mt,
                            const EnsembleComposition& composition, double linewidth_fwhm_mhz,
                            const std::vector<double>& f_axis_mhz);

struct SpectrumPeak {
  double f_mhz = 0.0;
  double height = 0.0;
};

// Local maxima above min_rel_height (relative to the trace maximum).
std::vector<SpectrumPeak> find_spectrum_peaks(const SpectrumTrace& trace, double min_rel_height);

}  // namespace vspin
