#include "vspin/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vspin {

namespace {

struct EigenPair {
  Eigen::VectorXd energies;
  cxmat vecs;
};

EigenPair solve_at(const SystemConfig& config, double b_mt) {
  Eigen::SelfAdjointEigenSolver<cxmat> solver(
      build_static_hamiltonian(config, FieldVector::along_z(b_mt)));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sweep_levels: eigensolver failed at B = " + std::to_string(b_mt));
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Eigenvalue clusters treated as degenerate for tracking purposes.
std::vector<std::pair<int, int>> degenerate_clusters(const Eigen::VectorXd& e) {
  const double tol = 1e-7;
  std::vector<std::pair<int, int>> clusters;
  int start = 0;
  for (int i = 1; i <= e.size(); ++i) {
    if (i == e.size() || e(i) - e(i - 1) > tol) {
      clusters.emplace_back(start, i - 1);
      start = i;
    }
  }
  return clusters;
}

struct MatchResult {
  bool ok = false;
  std::vector<int> assign;  // tracked slot -> new eigen index
  double min_overlap = 1.0;
};

// Bijective greedy match of previous tracked vectors onto the new eigenbasis.
// The acceptance score is the projection amplitude onto the matched vector's
// degenerate cluster, so exact degeneracies do not spuriously fail.
MatchResult match_levels(const cxmat& prev_vecs, const EigenPair& next) {
  const int dim = static_cast<int>(prev_vecs.cols());
  Eigen::MatrixXd overlap(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      overlap(i, j) = std::norm(prev_vecs.col(i).dot(next.vecs.col(j)));

  std::vector<std::tuple<double, int, int>> order;
  order.reserve(static_cast<size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) order.emplace_back(overlap(i, j), i, j);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });

  MatchResult res;
  res.assign.assign(static_cast<size_t>(dim), -1);
  std::vector<char> used(static_cast<size_t>(dim), 0);
  int assigned = 0;
  for (const auto& [w, i, j] : order) {
    (void)w;
    if (res.assign[static_cast<size_t>(i)] >= 0 || used[static_cast<size_t>(j)]) continue;
    res.assign[static_cast<size_t>(i)] = j;
    used[static_cast<size_t>(j)] = 1;
    if (++assigned == dim) break;
  }

  const auto clusters = degenerate_clusters(next.energies);
  std::vector<int> cluster_of(static_cast<size_t>(dim));
  for (size_t c = 0; c < clusters.size(); ++c)
    for (int j = clusters[c].first; j <= clusters[c].second; ++j)
      cluster_of[static_cast<size_t>(j)] = static_cast<int>(c);

  res.ok = true;
  for (int i = 0; i < dim; ++i) {
    const int j = res.assign[static_cast<size_t>(i)];
    const auto [lo, hi] = clusters[static_cast<size_t>(cluster_of[static_cast<size_t>(j)])];
    double proj = 0.0;
    for (int jj = lo; jj <= hi; ++jj) proj += overlap(i, jj);
    const double amp = std::sqrt(proj);
    res.min_overlap = std::min(res.min_overlap, amp);
    if (!(amp > 0.5)) res.ok = false;
  }
  return res;
}

// Advance the tracked basis from b_from to b_to, bisecting the interval until
// every level matches with overlap > 0.5.
void track_step(const SystemConfig& config, double b_from, double b_to, cxmat& vecs,
                Eigen::VectorXd& energies, double& min_overlap, int depth) {
  const EigenPair next = solve_at(config, b_to);
  const MatchResult match = match_levels(vecs, next);
  if (match.ok) {
    const int dim = static_cast<int>(vecs.cols());
    cxmat new_vecs(dim, dim);
    Eigen::VectorXd new_e(dim);
    for (int i = 0; i < dim; ++i) {
      const int j = match.assign[static_cast<size_t>(i)];
      new_vecs.col(i) = next.vecs.col(j);
      new_e(i) = next.energies(j);
    }
    vecs = std::move(new_vecs);
    energies = std::move(new_e);
    min_overlap = std::min(min_overlap, match.min_overlap);
    return;
  }
  if (depth >= 24 || b_to - b_from < 1e-9) throw TrackingError(b_from, b_to);
  const double mid = 0.5 * (b_from + b_to);
  track_step(config, b_from, mid, vecs, energies, min_overlap, depth + 1);
  track_step(config, mid, b_to, vecs, energies, min_overlap, depth + 1);
}

}  // namespace

int LevelDiagram::level_by_label(const KetLabel& v_part) const {
  int found = -1;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].same_v_part(v_part)) {
      if (found >= 0)
        throw std::invalid_argument("level_by_label: label " + v_part.str() +
                                    " is ambiguous (several 29Si states)");
      found = static_cast<int>(i);
    }
  }
  if (found < 0)
    throw std::invalid_argument("level_by_label: no tracked level labeled " + v_part.str());
  return found;
}

LevelDiagram sweep_levels(const SystemConfig& config, const std::vector<double>& b_axis_mt) {
  config.validate();
  if (b_axis_mt.size() < 2)
    throw std::invalid_argument("sweep_levels: need at least 2 field points");
  for (size_t i = 1; i < b_axis_mt.size(); ++i)
    if (!(b_axis_mt[i] > b_axis_mt[i - 1]))
      throw std::invalid_argument("sweep_levels: field axis must be strictly increasing");

  const int dim = config.dim();
  LevelDiagram diagram;
  diagram.b_mt = b_axis_mt;
  diagram.energies.resize(static_cast<Eigen::Index>(b_axis_mt.size()), dim);
  diagram.tracking.resize(b_axis_mt.size());

  EigenPair first = solve_at(config, b_axis_mt.front());
  cxmat vecs = first.vecs;
  Eigen::VectorXd energies = first.energies;
  const ProductSpace space = build_product_space(config);

  auto record = [&](size_t row) {
    for (int k = 0; k < dim; ++k) diagram.energies(static_cast<Eigen::Index>(row), k) = energies(k);
    // rank of each tracked slot in the sorted spectrum at this field
    std::vector<int> rank(static_cast<size_t>(dim));
    std::vector<int> idx(static_cast<size_t>(dim));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return energies(a) < energies(b); });
    for (int r = 0; r < dim; ++r) rank[static_cast<size_t>(idx[static_cast<size_t>(r)])] = r;
    diagram.tracking[row] = std::move(rank);
  };

  record(0);
  for (size_t f = 1; f < b_axis_mt.size(); ++f) {
    track_step(config, b_axis_mt[f - 1], b_axis_mt[f], vecs, energies, diagram.min_overlap, 0);
    record(f);
  }

  diagram.labels.reserve(static_cast<size_t>(dim));
  for (int k = 0; k < dim; ++k) diagram.labels.push_back(dominant_ket(vecs.col(k), space));
  return diagram;
}

namespace {

// Gap between the two levels continued by eigenvector overlap from reference
// vectors; used for derivative evaluations off the coarse grid.
double pair_gap(const SystemConfig& config, double b_mt, const cxmat& ref_a, const cxmat& ref_b) {
  const EigenPair ep = solve_at(config, b_mt);
  int best_a = 0, best_b = 0;
  double wa = -1.0, wb = -1.0;
  for (int j = 0; j < ep.energies.size(); ++j) {
    const double oa = std::norm(cxvec(ref_a).dot(ep.vecs.col(j)));
    const double ob = std::norm(cxvec(ref_b).dot(ep.vecs.col(j)));
    if (oa > wa) {
      wa = oa;
      best_a = j;
    }
    if (ob > wb) {
      wb = ob;
      best_b = j;
    }
  }
  if (best_a == best_b) throw std::runtime_error("find_clock_transition: pair lost while refining");
  return std::abs(ep.energies(best_a) - ep.energies(best_b));
}

}  // namespace

ClockResult find_clock_transition(const SystemConfig& config, const KetLabel& level_a,
                                  const KetLabel& level_b, const BRange& range) {
  if (!(range.hi_mt > range.lo_mt))
    throw std::invalid_argument("find_clock_transition: empty field range");

  const int n_grid = 241;
  std::vector<double> grid(n_grid);
  for (int i = 0; i < n_grid; ++i)
    grid[static_cast<size_t>(i)] =
        range.lo_mt + (range.hi_mt - range.lo_mt) * i / double(n_grid - 1);

  const LevelDiagram diagram = sweep_levels(config, grid);
  const int ia = diagram.level_by_label(level_a);
  const int ib = diagram.level_by_label(level_b);

  std::vector<double> gap(static_cast<size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i)
    gap[static_cast<size_t>(i)] = std::abs(diagram.energies(i, ia) - diagram.energies(i, ib));

  // coarse |d(gap)/dB| via central differences
  const double h_grid = grid[1] - grid[0];
  std::vector<double> deriv(static_cast<size_t>(n_grid), 0.0);
  for (int i = 1; i + 1 < n_grid; ++i)
    deriv[static_cast<size_t>(i)] =
        std::abs(gap[static_cast<size_t>(i + 1)] - gap[static_cast<size_t>(i - 1)]) /
        (2.0 * h_grid);

  int best = -1;
  for (int i = 1; i + 1 < n_grid; ++i) {
    const bool interior_min = deriv[static_cast<size_t>(i)] <= deriv[static_cast<size_t>(i - 1)] &&
                              deriv[static_cast<size_t>(i)] <= deriv[static_cast<size_t>(i + 1)];
    if (interior_min && (best < 0 || deriv[static_cast<size_t>(i)] < deriv[static_cast<size_t>(best)]))
      best = i;
  }

  ClockResult result;
  if (best < 0) {
    result.message = "no interior stationary point of the level gap in range";
    return result;
  }

  // reference eigenvectors near the bracket for pair continuation
  const double b_ref = grid[static_cast<size_t>(best)];
  const EigenPair ref = solve_at(config, b_ref);
  // match tracked levels at b_ref: ranks are stored in diagram.tracking
  const int rank_a = diagram.tracking[static_cast<size_t>(best)][static_cast<size_t>(ia)];
  const int rank_b = diagram.tracking[static_cast<size_t>(best)][static_cast<size_t>(ib)];
  const cxmat ref_a = ref.vecs.col(rank_a);
  const cxmat ref_b = ref.vecs.col(rank_b);

  const double fd_h = 1e-3;  // mT, finite-difference step for the derivative
  auto abs_deriv = [&](double b) {
    return std::abs(pair_gap(config, b + fd_h, ref_a, ref_b) -
                    pair_gap(config, b - fd_h, ref_a, ref_b)) /
           (2.0 * fd_h);
  };

  // golden-section refinement of |d(gap)/dB| on the bracketing interval
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = grid[static_cast<size_t>(best - 1)];
  double hi = grid[static_cast<size_t>(best + 1)];
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = abs_deriv(x1);
  double f2 = abs_deriv(x2);
  while (hi - lo > 1e-4) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = abs_deriv(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = abs_deriv(x2);
    }
  }
  const double b_star = 0.5 * (lo + hi);
  const double slope = abs_deriv(b_star);
  if (!(slope < 1e-3)) {
    result.message = "flattest point has |d(dE)/dB| = " + std::to_string(slope) +
                     " MHz/mT, above the 1 kHz/mT stationarity bound";
    return result;
  }
  result.found = true;
  result.b_star_mt = b_star;
  result.f_star_mhz = pair_gap(config, b_star, ref_a, ref_b);
  result.dfdb_mhz_per_mt = slope;
  return result;
}

TransitionTable transitions(const SystemConfig& config, double b0_mt,
                            const Eigen::Vector3d& drive_axis, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw std::invalid_argument("transitions: threshold must be in [0, 1)");
  const StaticSystem sys = make_static_system(config, FieldVector::along_z(b0_mt));
  const cxmat drive = build_drive_operator(config, drive_axis, 1.0);
  const cxmat d_eig = sys.vecs.adjoint() * drive * sys.vecs;

  TransitionTable table;
  table.labels = sys.labels;
  for (int i = 0; i < sys.dim(); ++i)
    for (int j = i + 1; j < sys.dim(); ++j)
      table.max_element_mhz = std::max(table.max_element_mhz, std::abs(d_eig(i, j)));
  if (table.max_element_mhz <= 0.0) return table;

  for (int i = 0; i < sys.dim(); ++i) {
    for (int j = i + 1; j < sys.dim(); ++j) {
      const double strength = std::abs(d_eig(i, j)) / table.max_element_mhz;
      if (!(strength > threshold)) continue;
      Transition t;
      t.i = i;
      t.j = j;
      t.frequency = sys.energies(j) - sys.energies(i);
      t.strength = strength;
      t.delta_mi = (sys.labels[static_cast<size_t>(j)].mi2 -
                    sys.labels[static_cast<size_t>(i)].mi2) / 2;
      table.rows.push_back(t);
    }
  }
  return table;
}

void EnsembleComposition::validate() const {
  if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0)
    throw std::invalid_argument("EnsembleComposition: negative weight");
  if (!(w0 + w1 + w2 > 0.0))
    throw std::invalid_argument("EnsembleComposition: empty composition");
}

void EnsembleComposition::normalize() {
  validate();
  const double sum = w0 + w1 + w2;
  w0 /= sum;
  w1 /= sum;
  w2 /= sum;
}

EnsembleComposition EnsembleComposition::from_wavelength(const std::string& tag) {
  if (tag == "1278.86 nm") return {1.0, 0.0, 0.0};
  if (tag == "1278.76 nm") return {0.2, 0.2, 0.6};
  throw std::invalid_argument("EnsembleComposition: unknown wavelength profile '" + tag + "'");
}

SpectrumTrace odmr_spectrum(const DefectParams& defect, const SiCouplingParams& si, double b0_mt,
                            const EnsembleComposition& composition, double linewidth_fwhm_mhz,
                            const std::vector<double>& f_axis_mhz) {
  if (!(linewidth_fwhm_mhz > 0.0))
    throw std::invalid_argument("odmr_spectrum: linewidth must be positive");
  if (f_axis_mhz.empty()) throw std::invalid_argument("odmr_spectrum: empty frequency axis");
  EnsembleComposition comp = composition;
  comp.normalize();

  SpectrumTrace trace;
  trace.f_mhz = f_axis_mhz;
  trace.intensity.assign(f_axis_mhz.size(), 0.0);
  trace.b0_mt = b0_mt;
  trace.composition = comp;
  trace.linewidth_fwhm_mhz = linewidth_fwhm_mhz;

  const double sigma = linewidth_fwhm_mhz / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double f_lo = *std::min_element(f_axis_mhz.begin(), f_axis_mhz.end()) - 6.0 * sigma;
  const double f_hi = *std::max_element(f_axis_mhz.begin(), f_axis_mhz.end()) + 6.0 * sigma;
  const std::array<double, 3> weights{comp.w0, comp.w1, comp.w2};

  for (int n_si = 0; n_si < 3; ++n_si) {
    const double w = weights[static_cast<size_t>(n_si)];
    if (w <= 0.0) continue;
    SystemConfig config;
    config.n_si = n_si;
    config.defect = defect;
    config.si = si;
    const StaticSystem sys = make_static_system(config, FieldVector::along_z(b0_mt));
    const cxmat drive = build_drive_operator(config, Eigen::Vector3d::UnitZ(), 1.0);
    const cxmat d_eig = sys.vecs.adjoint() * drive * sys.vecs;

    for (int i = 0; i < sys.dim(); ++i) {
      for (int j = i + 1; j < sys.dim(); ++j) {
        const double f = sys.energies(j) - sys.energies(i);
        if (f < f_lo || f > f_hi) continue;
        // intensity model: drive matrix element only, no population weighting
        const double stick = w * std::abs(d_eig(i, j));
        if (stick <= 0.0) continue;
        for (size_t k = 0; k < f_axis_mhz.size(); ++k) {
          const double x = (f_axis_mhz[k] - f) / sigma;
          trace.intensity[k] += stick * std::exp(-0.5 * x * x);
        }
      }
    }
  }

  trace.raw_peak = *std::max_element(trace.intensity.begin(), trace.intensity.end());
  if (trace.raw_peak > 0.0)
    for (double& v : trace.intensity) v /= trace.raw_peak;
  return trace;
}

std::vector<SpectrumPeak> find_spectrum_peaks(const SpectrumTrace& trace, double min_rel_height) {
  std::vector<SpectrumPeak> peaks;
  const auto& y = trace.intensity;
  if (y.size() < 3) return peaks;
  const double top = *std::max_element(y.begin(), y.end());
  for (size_t k = 1; k + 1 < y.size(); ++k) {
    if (y[k] >= y[k - 1] && y[k] > y[k + 1] && y[k] >= min_rel_height * top) {
      // quadratic interpolation of the peak position
      const double denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
      double shift = 0.0;
      if (std::abs(denom) > 1e-300) shift = 0.5 * (y[k - 1] - y[k + 1]) / denom;
      const double df = trace.f_mhz[k] - trace.f_mhz[k - 1];
      peaks.push_back({trace.f_mhz[k] + shift * df, y[k]});
    }
  }
  return peaks;
}

}  // namespace vspin
