#include "vspin/spin_core.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace vspin {

using namespace std::complex_literals;

SpinSpecies SpinSpecies::electron(std::string label, double s, double g_par, double g_perp) {
  SpinSpecies sp;
  sp.label = std::move(label);
  sp.s = s;
  sp.kind = Kind::electron_effective;
  sp.g_par = g_par;
  sp.g_perp = g_perp;
  sp.validate();
  return sp;
}

SpinSpecies SpinSpecies::nucleus(std::string label, double s, double g) {
  SpinSpecies sp;
  sp.label = std::move(label);
  sp.s = s;
  sp.kind = Kind::nuclear;
  sp.g_par = g;
  sp.g_perp = g;
  sp.validate();
  return sp;
}

int SpinSpecies::dim() const { return static_cast<int>(std::llround(2.0 * s)) + 1; }

void SpinSpecies::validate() const {
  const double twice = 2.0 * s;
  if (!(s > 0.0) || std::abs(twice - std::llround(twice)) > 1e-9)
    throw std::invalid_argument("SpinSpecies: s must be a positive half-integer, got " +
                                std::to_string(s));
  if (kind == Kind::nuclear && g_par != g_perp)
    throw std::invalid_argument("SpinSpecies: nuclear species carries a scalar g");
}

OperatorSet make_spin_operators(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("make_spin_operators: s must be positive");
  const double twice = 2.0 * s;
  const long twice_i = std::llround(twice);
  if (std::abs(twice - twice_i) > 1e-9)
    throw std::invalid_argument("make_spin_operators: s must be half-integer");
  const int dim = static_cast<int>(twice_i) + 1;
  if (dim < 2 || dim > 16)
    throw std::invalid_argument("make_spin_operators: 2s+1 out of supported range [2,16]");

  OperatorSet set;
  set.dim = dim;
  set.sz = cxmat::Zero(dim, dim);
  set.s_plus = cxmat::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double m = s - k;
    set.sz(k, k) = m;
    // s_plus |m> = sqrt(s(s+1) - m(m+1)) |m+1>, |m+1> sits one row up
    if (k >= 1) set.s_plus(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  set.s_minus = set.s_plus.adjoint();
  set.sx = 0.5 * (set.s_plus + set.s_minus);
  set.sy = -0.5i * (set.s_plus - set.s_minus);
  return set;
}

ProductSpace ProductSpace::make(std::vector<SpinSpecies> species) {
  if (species.empty()) throw std::invalid_argument("ProductSpace: at least one species");
  ProductSpace ps;
  ps.species = std::move(species);
  ps.dim = 1;
  for (const auto& sp : ps.species) {
    sp.validate();
    ps.ops.push_back(make_spin_operators(sp.s));
    ps.dim *= sp.dim();
  }
  return ps;
}

int ProductSpace::site_dim(int site) const {
  if (site < 0 || site >= n_sites()) throw std::out_of_range("ProductSpace: site index");
  return species[static_cast<size_t>(site)].dim();
}

std::vector<int> ProductSpace::index_to_tuple(int index) const {
  if (index < 0 || index >= dim) throw std::out_of_range("ProductSpace: basis index");
  std::vector<int> tuple(species.size());
  for (int k = n_sites() - 1; k >= 0; --k) {
    const int d = site_dim(k);
    tuple[static_cast<size_t>(k)] = index % d;
    index /= d;
  }
  return tuple;
}

int ProductSpace::tuple_to_index(const std::vector<int>& tuple) const {
  if (static_cast<int>(tuple.size()) != n_sites())
    throw std::invalid_argument("ProductSpace: tuple length mismatch");
  int index = 0;
  for (int k = 0; k < n_sites(); ++k) {
    const int d = site_dim(k);
    const int t = tuple[static_cast<size_t>(k)];
    if (t < 0 || t >= d) throw std::out_of_range("ProductSpace: tuple entry");
    index = index * d + t;
  }
  return index;
}

cxmat kron(const cxmat& a, const cxmat& b) {
  cxmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

cxmat embed(const cxmat& op, int site, const ProductSpace& space) {
  if (site < 0 || site >= space.n_sites())
    throw std::out_of_range("embed: site index out of range");
  if (op.rows() != op.cols() || op.rows() != space.site_dim(site))
    throw std::invalid_argument("embed: operator dimension does not match site");
  cxmat out = cxmat::Identity(1, 1);
  for (int k = 0; k < space.n_sites(); ++k) {
    if (k == site)
      out = kron(out, op);
    else
      out = kron(out, cxmat::Identity(space.site_dim(k), space.site_dim(k)));
  }
  return out;
}

}  // namespace vspin
