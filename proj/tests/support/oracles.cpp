#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "vspin/fitting.hpp"
#include "vspin/spectra.hpp"

namespace vspin::testing {

GridScanResult clock_grid_scan(const SystemConfig& config, const KetLabel& a, const KetLabel& b,
                               double lo_mt, double hi_mt, double step_mt) {
  std::vector<double> grid;
  for (double v = lo_mt; v <= hi_mt + 0.5 * step_mt; v += step_mt) grid.push_back(v);
  const LevelDiagram diagram = sweep_levels(config, grid);
  const int ia = diagram.level_by_label(a);
  const int ib = diagram.level_by_label(b);

  GridScanResult result;
  double best = 1e300;
  for (size_t k = 1; k + 1 < grid.size(); ++k) {
    const double gap_prev = std::abs(diagram.energies(static_cast<Eigen::Index>(k - 1), ia) -
                                     diagram.energies(static_cast<Eigen::Index>(k - 1), ib));
    const double gap_next = std::abs(diagram.energies(static_cast<Eigen::Index>(k + 1), ia) -
                                     diagram.energies(static_cast<Eigen::Index>(k + 1), ib));
    const double deriv = std::abs(gap_next - gap_prev) / (2.0 * step_mt);
    if (deriv < best) {
      best = deriv;
      result.b_star_mt = grid[k];
      result.min_abs_deriv = deriv;
    }
  }
  return result;
}

double rabi_population(double omega_mhz, double detuning_mhz, double t_us) {
  const double general = std::hypot(omega_mhz, detuning_mhz);
  if (general <= 0.0) return 0.0;
  const double amp = omega_mhz * omega_mhz / (general * general);
  const double s = std::sin(M_PI * general * t_us);
  return amp * s * s;
}

std::vector<double> naive_gaussian_sum(const std::vector<double>& f_axis,
                                       const std::vector<double>& centers,
                                       const std::vector<double>& weights, double fwhm) {
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  std::vector<double> out(f_axis.size(), 0.0);
  for (size_t s = 0; s < centers.size(); ++s)
    for (size_t k = 0; k < f_axis.size(); ++k) {
      const double u = (f_axis[k] - centers[s]) / sigma;
      out[k] += weights[s] * std::exp(-0.5 * u * u);
    }
  return out;
}

LinearFit linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
    syy += y[k] * y[k];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0;
  const double mean = sy / n;
  double ss_tot = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.slope * x[k] + fit.intercept);
    ss_res += r * r;
    ss_tot += (y[k] - mean) * (y[k] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<double> trace_peak_frequencies(const std::vector<double>& t,
                                           const std::vector<double>& y, double f_max,
                                           double min_rel_amplitude, double cluster_radius) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> windowed(y.size());
  for (size_t k = 0; k < y.size(); ++k) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * k / (y.size() - 1.0));
    windowed[k] = (y[k] - mean) * w;
  }
  const int n_grid = 8192;
  std::vector<double> freqs(n_grid);
  for (int q = 0; q < n_grid; ++q) freqs[static_cast<size_t>(q)] = f_max * (q + 1) / n_grid;
  const std::vector<double> power = periodogram(t, windowed, freqs);
  const double top = *std::max_element(power.begin(), power.end());

  std::vector<std::pair<double, double>> raw;  // (f, power)
  for (size_t q = 1; q + 1 < power.size(); ++q)
    if (power[q] >= power[q - 1] && power[q] > power[q + 1] &&
        power[q] >= min_rel_amplitude * top) {
      // parabolic interpolation on the magnitude
      const double denom = power[q - 1] - 2.0 * power[q] + power[q + 1];
      double shift = 0.0;
      if (std::abs(denom) > 1e-300) shift = 0.5 * (power[q - 1] - power[q + 1]) / denom;
      raw.emplace_back(freqs[q] + shift * (freqs[1] - freqs[0]), power[q]);
    }

  // merge peaks closer than cluster_radius, keeping the strongest position
  std::sort(raw.begin(), raw.end());
  std::vector<double> merged;
  size_t k = 0;
  while (k < raw.size()) {
    double best_f = raw[k].first, best_p = raw[k].second;
    size_t j = k + 1;
    while (j < raw.size() && raw[j].first - raw[j - 1].first < cluster_radius) {
      if (raw[j].second > best_p) {
        best_p = raw[j].second;
        best_f = raw[j].first;
      }
      ++j;
    }
    merged.push_back(best_f);
    k = j;
  }
  return merged;
}

}  // namespace vspin::testing
