#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vspin/constants.hpp"
#include "vspin/spin_core.hpp"

// Static ground-state Hamiltonian of the vanadium defect (effective spin-1/2
// electron + 51V I=7/2, optionally coupled to one or two 29Si I=1/2 neighbors
// in the semi-secular approximation) and the drive operator for an oscillating
// field. Everything is H/h in MHz; fields in mT; z is the crystal c-axis.
namespace vspin {

struct DefectParams {
  double g_par = 1.664;
  double g_perp = 0.0;
  double a_v_par = -232.02;   // MHz
  double a_v_perp = -162.32;  // MHz
  double q_zz = -0.2;         // MHz
  double g_v = constants::g_nuclear_v51;
  double mu_b_over_h = constants::mu_b_over_h_mhz_per_mt;  // MHz/mT
  double mu_n_over_h = constants::mu_n_over_h_mhz_per_mt;  // MHz/mT

  void validate() const;
};

struct SiCouplingParams {
  double a_si_par = -8.2;   // MHz, per 29Si site
  double a_si_perp = -3.6;  // MHz
  double g_si = constants::g_nuclear_si29;
};

struct SystemConfig {
  int n_si = 0;  // 0, 1 or 2 nearest-neighbor 29Si (DT0 / DT_I / DT_II)
  DefectParams defect;
  SiCouplingParams si;

  int dim() const { return 16 << n_si; }
  void validate() const;

  // Table-default coupling parameters, profile "paper-2023-defaults".
  static SystemConfig paper_defaults(int n_si = 0);
};

struct FieldVector {
  double bx = 0.0, by = 0.0, bz = 0.0;  // mT

  void validate() const;
  static FieldVector along_z(double bz) { return FieldVector{0.0, 0.0, bz}; }
};

ProductSpace build_product_space(const SystemConfig& config);

cxmat build_static_hamiltonian(const SystemConfig& config, const FieldVector& b0);

// Magnetic coupling operator for an oscillating field b1 along `axis`; the
// full drive is this operator times cos(2 pi f t + phase).
cxmat build_drive_operator(const SystemConfig& config, const Eigen::Vector3d& axis,
                           double b1_amplitude_mt);

// Product-basis ket label, stored as twice the m quantum numbers.
// Rendering follows the level-diagram convention: the electron arrow marks the
// Kramers branch whose Zeeman energy rises with field along +z, so for
// g_par > 0 (with the -mu_B B.g.S sign) "up" is m_s = -1/2.
struct KetLabel {
  int ms2 = 0;              // 2*m_s of the electron, +1 or -1
  int mi2 = 0;              // 2*m_i of the 51V nucleus, odd in [-7, 7]
  std::vector<int> si2;     // 2*m per 29Si site

  bool same_v_part(const KetLabel& other) const {
    return ms2 == other.ms2 && mi2 == other.mi2;
  }
  bool operator==(const KetLabel& other) const {
    return ms2 == other.ms2 && mi2 == other.mi2 && si2 == other.si2;
  }
  std::string str(double g_par = 1.664) const;
};

// V-part label from text like "up,-5/2" or "down,-7/2" (arrows also accepted).
KetLabel parse_ket_vpart(const std::string& text);

KetLabel dominant_ket(const cxvec& eigenvector, const ProductSpace& space);

// Diagonalized static system at a working field: energies ascending, columns
// of `vecs` are the eigenvectors, labels are the dominant product kets.
struct StaticSystem {
  SystemConfig config;
  FieldVector b0;
  ProductSpace space;
  cxmat hamiltonian;
  Eigen::VectorXd energies;  // MHz, ascending
  cxmat vecs;
  std::vector<KetLabel> labels;

  int dim() const { return static_cast<int>(energies.size()); }
  std::vector<int> levels_with_v_part(const KetLabel& v_part) const;
};

StaticSystem make_static_system(const SystemConfig& config, const FieldVector& b0);

}  // namespace vspin
