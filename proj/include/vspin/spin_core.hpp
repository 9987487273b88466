#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

// Spin-operator algebra and tensor-product Hilbert-space construction.
// Basis convention: sz is diagonal with m = s, s-1, ..., -s in that order;
// the joint basis is row-major over the species list (first species is the
// slowest index, i.e. plain Kronecker order).
namespace vspin {

using cxmat = Eigen::MatrixXcd;
using cxvec = Eigen::VectorXcd;

struct SpinSpecies {
  enum class Kind { electron_effective, nuclear };

  std::string label;
  double s = 0.5;
  Kind kind = Kind::nuclear;
  double g_par = 0.0;   // nuclear species: g_par == g_perp == scalar g
  double g_perp = 0.0;

  static SpinSpecies electron(std::string label, double s, double g_par, double g_perp);
  static SpinSpecies nucleus(std::string label, double s, double g);

  int dim() const;
  void validate() const;
};

struct OperatorSet {
  int dim = 0;
  cxmat sx, sy, sz, s_plus, s_minus;
};

// Angular-momentum matrices for a single spin s (ladder-formula construction).
// Accepts half-integer s with 2 <= 2s+1 <= 16.
OperatorSet make_spin_operators(double s);

struct ProductSpace {
  std::vector<SpinSpecies> species;
  std::vector<OperatorSet> ops;  // one OperatorSet per species
  int dim = 1;

  static ProductSpace make(std::vector<SpinSpecies> species);

  int n_sites() const { return static_cast<int>(species.size()); }
  int site_dim(int site) const;

  // Bijection between joint basis index and per-site m-level indices
  // (index 0 <-> m = s at every site).
  std::vector<int> index_to_tuple(int index) const;
  int tuple_to_index(const std::vector<int>& tuple) const;
};

// Kronecker product, A slow index / B fast index.
cxmat kron(const cxmat& a, const cxmat& b);

// identity x ... x op x ... x identity with op acting on `site`.
cxmat embed(const cxmat& op, int site, const ProductSpace& space);

}  // namespace vspin
