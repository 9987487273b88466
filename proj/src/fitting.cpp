#include "vspin/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vspin {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

struct SinusoidLayout {
  int n = 0;
  bool shared = true;
  int count() const { return shared ? 3 * n + 1 : 4 * n; }
  int a(int i) const { return shared ? 3 * i : 4 * i; }
  int f(int i) const { return shared ? 3 * i + 1 : 4 * i + 1; }
  int phi(int i) const { return shared ? 3 * i + 2 : 4 * i + 2; }
  int t2(int i) const { return shared ? 3 * n : 4 * i + 3; }
};

SinusoidLayout sinusoid_layout(const ModelSpec& spec) {
  if (std::holds_alternative<RamseyModelSpec>(spec)) {
    const auto& m = std::get<RamseyModelSpec>(spec);
    return {m.n, m.shared_t2};
  }
  if (std::holds_alternative<RabiModelSpec>(spec))
    return {std::get<RabiModelSpec>(spec).n, true};
  throw std::logic_error("not a sinusoid model");
}

bool is_sinusoid(const ModelSpec& spec) {
  return !std::holds_alternative<GaussianPeakModelSpec>(spec);
}

constexpr double four_ln2 = 2.7725887222397812376689284858327;

}  // namespace

int parameter_count(const ModelSpec& spec) {
  if (std::holds_alternative<GaussianPeakModelSpec>(spec))
    return 3 * std::get<GaussianPeakModelSpec>(spec).n + 1;
  return sinusoid_layout(spec).count();
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  if (std::holds_alternative<GaussianPeakModelSpec>(spec)) {
    const int n = std::get<GaussianPeakModelSpec>(spec).n;
    for (int i = 0; i < n; ++i) {
      const std::string s = std::to_string(i + 1);
      names.push_back("amplitude_" + s);
      names.push_back("center_" + s);
      names.push_back("fwhm_" + s);
    }
    names.push_back("baseline");
    return names;
  }
  const SinusoidLayout lay = sinusoid_layout(spec);
  for (int i = 0; i < lay.n; ++i) {
    const std::string s = std::to_string(i + 1);
    names.push_back("a_" + s);
    names.push_back("f_" + s);
    names.push_back("phi_" + s);
    if (!lay.shared) names.push_back("t2_" + s);
  }
  if (lay.shared) names.push_back("t2");
  return names;
}

double model_value(const ModelSpec& spec, const Eigen::VectorXd& params, double x) {
  if (std::holds_alternative<GaussianPeakModelSpec>(spec)) {
    const int n = std::get<GaussianPeakModelSpec>(spec).n;
    double y = params(3 * n);
    for (int i = 0; i < n; ++i) {
      const double a = params(3 * i), c = params(3 * i + 1), w = params(3 * i + 2);
      const double u = (x - c) / w;
      y += a * std::exp(-four_ln2 * u * u);
    }
    return y;
  }
  const SinusoidLayout lay = sinusoid_layout(spec);
  double y = 0.0;
  for (int i = 0; i < lay.n; ++i) {
    const double decay = std::exp(-x / params(lay.t2(i)));
    y += params(lay.a(i)) * decay * std::sin(two_pi * params(lay.f(i)) * x + params(lay.phi(i)));
  }
  return y;
}

Eigen::VectorXd model_gradient(const ModelSpec& spec, const Eigen::VectorXd& params, double x) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params.size());
  if (std::holds_alternative<GaussianPeakModelSpec>(spec)) {
    const int n = std::get<GaussianPeakModelSpec>(spec).n;
    for (int i = 0; i < n; ++i) {
      const double a = params(3 * i), c = params(3 * i + 1), w = params(3 * i + 2);
      const double u = (x - c) / w;
      const double e = std::exp(-four_ln2 * u * u);
      g(3 * i) = e;
      g(3 * i + 1) = a * e * 2.0 * four_ln2 * u / w;
      g(3 * i + 2) = a * e * 2.0 * four_ln2 * u * u / w;
    }
    g(3 * n) = 1.0;
    return g;
  }
  const SinusoidLayout lay = sinusoid_layout(spec);
  for (int i = 0; i < lay.n; ++i) {
    const double a = params(lay.a(i));
    const double t2 = params(lay.t2(i));
    const double decay = std::exp(-x / t2);
    const double arg = two_pi * params(lay.f(i)) * x + params(lay.phi(i));
    const double s = std::sin(arg), c = std::cos(arg);
    g(lay.a(i)) += decay * s;
    g(lay.f(i)) += a * decay * c * two_pi * x;
    g(lay.phi(i)) += a * decay * c;
    g(lay.t2(i)) += a * decay * s * x / (t2 * t2);
  }
  return g;
}

FitResult fit_curve(const ModelSpec& spec, const FitData& data, const Eigen::VectorXd& initial) {
  const int n_params = parameter_count(spec);
  const auto n_data = static_cast<Eigen::Index>(data.x.size());
  FitResult result;
  result.estimates = initial;
  result.ci95 = Eigen::VectorXd::Zero(n_params);

  if (initial.size() != n_params)
    throw std::invalid_argument("fit_curve: initial guess has wrong length");
  if (data.y.size() != data.x.size())
    throw std::invalid_argument("fit_curve: x/y length mismatch");
  if (!data.weight.empty() && data.weight.size() != data.x.size())
    throw std::invalid_argument("fit_curve: weight length mismatch");
  if (n_data < 2 * n_params)
    throw std::invalid_argument("fit_curve: need at least 2x more points than parameters");
  for (size_t k = 0; k < data.x.size(); ++k)
    if (!std::isfinite(data.x[k]) || !std::isfinite(data.y[k]))
      throw std::invalid_argument("fit_curve: non-finite data");

  Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(n_data);
  if (!data.weight.empty())
    for (Eigen::Index k = 0; k < n_data; ++k) sqrt_w(k) = std::sqrt(data.weight[static_cast<size_t>(k)]);

  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n_data);
    for (Eigen::Index k = 0; k < n_data; ++k)
      r(k) = sqrt_w(k) * (model_value(spec, p, data.x[static_cast<size_t>(k)]) -
                          data.y[static_cast<size_t>(k)]);
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(n_data, n_params);
    for (Eigen::Index k = 0; k < n_data; ++k)
      j.row(k) = sqrt_w(k) * model_gradient(spec, p, data.x[static_cast<size_t>(k)]).transpose();
    return j;
  };

  Eigen::VectorXd p = initial;
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const int max_iter = 400;
  int iter = 0;
  bool converged = false;
  std::string message = "reached iteration limit";

  for (; iter < max_iter; ++iter) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;
    if (jtr.norm() < 1e-12 * (1.0 + std::sqrt(cost))) {
      converged = true;
      message = "gradient below tolerance";
      break;
    }
    const double diag_max = jtj.diagonal().maxCoeff();
    if (!(diag_max > 0.0)) {
      message = "singular Jacobian: model is insensitive to every parameter here";
      break;
    }

    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd damped = jtj;
      for (int d = 0; d < n_params; ++d)
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-12 * diag_max);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = ldlt.solve(-jtr);
      const Eigen::VectorXd p_try = p + step;
      const Eigen::VectorXd r_try = residual(p_try);
      const double cost_try = r_try.squaredNorm();
      if (cost_try < cost) {  // monotone safeguard
        const double improvement = cost - cost_try;
        p = p_try;
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (improvement < 1e-14 * (1.0 + cost)) {
          converged = true;
          message = "cost improvement below tolerance";
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (converged) break;
    if (!stepped) {
      converged = true;  // no descent direction left: local optimum within damping range
      message = "no further descent possible";
      break;
    }
  }

  result.estimates = p;
  result.residual_norm = std::sqrt(cost);
  result.converged = converged;
  result.iterations = iter;
  result.message = message;

  // linearized 95% confidence half-widths at the optimum
  const Eigen::MatrixXd j = jacobian(p);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible() && n_data > n_params) {
    const double sigma2 = cost / static_cast<double>(n_data - n_params);
    const Eigen::MatrixXd cov = sigma2 * lu.inverse();
    for (int d = 0; d < n_params; ++d)
      result.ci95(d) = 1.96 * std::sqrt(std::max(0.0, cov(d, d)));
  } else if (result.converged) {
    result.converged = false;
    result.message = "singular Jacobian at the optimum: parameters not identifiable";
  }
  return result;
}

Eigen::VectorXd canonicalize(const ModelSpec& spec, Eigen::VectorXd params) {
  if (!is_sinusoid(spec)) return params;
  const SinusoidLayout lay = sinusoid_layout(spec);
  for (int i = 0; i < lay.n; ++i) {
    double a = params(lay.a(i));
    double f = params(lay.f(i));
    double phi = params(lay.phi(i));
    if (f < 0.0) {  // sin(-wt + phi) = -sin(wt - phi)
      f = -f;
      phi = -phi;
      a = -a;
    }
    if (a < 0.0) {
      a = -a;
      phi += M_PI;
    }
    phi = std::fmod(phi, two_pi);
    if (phi < 0.0) phi += two_pi;
    params(lay.a(i)) = a;
    params(lay.f(i)) = f;
    params(lay.phi(i)) = phi;
  }
  return params;
}

std::vector<double> periodogram(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& freqs) {
  std::vector<double> power(freqs.size(), 0.0);
  for (size_t q = 0; q < freqs.size(); ++q) {
    double re = 0.0, im = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
      const double arg = two_pi * freqs[q] * x[k];
      re += y[k] * std::cos(arg);
      im -= y[k] * std::sin(arg);
    }
    power[q] = std::hypot(re, im);
  }
  return power;
}

namespace {

struct SeedComp {
  double a = 0.0, f = 0.0, phi = 0.0, t2 = 1.0;
};

double seed_model(const SeedComp& c, double x) {
  return c.a * std::exp(-x / c.t2) * std::sin(two_pi * c.f * x + c.phi);
}

// Pick the strongest periodogram peak outside the exclusion zones, estimate
// its decay time from the peak width, and solve the linear sin/cos amplitudes
// with that envelope.
SeedComp pursue_component(const std::vector<double>& x, const std::vector<double>& resid,
                          const std::vector<double>& freqs, double df, double f_min,
                          double dx_min, double span,
                          const std::vector<std::pair<double, double>>& exclusions) {
  const std::vector<double> power = periodogram(x, resid, freqs);
  size_t best = power.size();
  for (size_t q = 0; q < power.size(); ++q) {
    if (freqs[q] < f_min) continue;
    bool excluded = false;
    for (const auto& [tf, radius] : exclusions)
      if (std::abs(freqs[q] - tf) < radius) excluded = true;
    if (excluded) continue;
    if (best == power.size() || power[q] > power[best]) best = q;
  }
  if (best == power.size()) best = power.size() / 2;

  SeedComp comp;
  comp.f = freqs[best];
  const double half = 0.5 * power[best];
  size_t left = best, right = best;
  while (left > 0 && power[left] > half) --left;
  while (right + 1 < power.size() && power[right] > half) ++right;
  const double hwhm = 0.5 * static_cast<double>(right - left) * df;
  comp.t2 = std::clamp(std::sqrt(3.0) / (two_pi * std::max(hwhm, 0.5 * df)), 4.0 * dx_min,
                       5.0 * span);

  double ss = 0.0, sc = 0.0, cc = 0.0, sy = 0.0, cy = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double decay = std::exp(-x[k] / comp.t2);
    const double s = decay * std::sin(two_pi * comp.f * x[k]);
    const double c = decay * std::cos(two_pi * comp.f * x[k]);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    sy += s * resid[k];
    cy += c * resid[k];
  }
  const double det = ss * cc - sc * sc;
  if (std::abs(det) > 1e-300) {
    const double as = (cc * sy - sc * cy) / det;
    const double ac = (ss * cy - sc * sy) / det;
    comp.a = std::hypot(as, ac);
    comp.phi = std::atan2(ac, as);  // a sin(wt) cos(phi) + a cos(wt) sin(phi)
  }
  return comp;
}

}  // namespace

Eigen::VectorXd seed_ramsey_guess(const FitData& data, int n, bool shared_t2) {
  if (n < 1) throw std::invalid_argument("seed_ramsey_guess: n must be >= 1");
  const size_t n_data = data.x.size();
  if (n_data < 8) throw std::invalid_argument("seed_ramsey_guess: too few points");
  const double span = data.x.back() - data.x.front();
  double dx_min = span;
  for (size_t k = 1; k < n_data; ++k) dx_min = std::min(dx_min, data.x[k] - data.x[k - 1]);
  const double f_nyq = 0.5 / dx_min;

  const int n_grid = 8192;
  std::vector<double> freqs(n_grid);
  for (int q = 0; q < n_grid; ++q) freqs[static_cast<size_t>(q)] = f_nyq * (q + 1) / n_grid;
  const double df = f_nyq / n_grid;
  const double f_min = 1.5 / span;  // below this a component is indistinguishable from DC

  // the model has no constant term; strip any DC offset before peak picking
  std::vector<double> centered = data.y;
  double dc = 0.0;
  for (double v : centered) dc += v;
  dc /= static_cast<double>(n_data);
  for (double& v : centered) v -= dc;

  // initial matching pursuit
  std::vector<SeedComp> comps;
  std::vector<std::pair<double, double>> taken;
  std::vector<double> resid = centered;
  for (int i = 0; i < n; ++i) {
    const SeedComp comp =
        pursue_component(data.x, resid, freqs, df, f_min, dx_min, span, taken);
    comps.push_back(comp);
    taken.emplace_back(comp.f, 2.0 / span);
    for (size_t k = 0; k < n_data; ++k) resid[k] -= seed_model(comp, data.x[k]);
  }

  // cyclic refinement: re-estimate each component against the residual of the
  // others, which untangles overlapping peak-width estimates
  for (int cycle = 0; cycle < 2; ++cycle) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> others = centered;
      std::vector<std::pair<double, double>> exclusions;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        for (size_t k = 0; k < n_data; ++k)
          others[k] -= seed_model(comps[static_cast<size_t>(j)], data.x[k]);
        exclusions.emplace_back(comps[static_cast<size_t>(j)].f, 2.0 / span);
      }
      comps[static_cast<size_t>(i)] =
          pursue_component(data.x, others, freqs, df, f_min, dx_min, span, exclusions);
    }
  }
  std::sort(comps.begin(), comps.end(),
            [](const SeedComp& a, const SeedComp& b) { return a.f < b.f; });

  const SinusoidLayout lay{n, shared_t2};
  Eigen::VectorXd params(lay.count());
  double t2_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    params(lay.a(i)) = comps[static_cast<size_t>(i)].a;
    params(lay.f(i)) = comps[static_cast<size_t>(i)].f;
    params(lay.phi(i)) = comps[static_cast<size_t>(i)].phi;
    if (!shared_t2) params(lay.t2(i)) = comps[static_cast<size_t>(i)].t2;
    t2_sum += comps[static_cast<size_t>(i)].t2;
  }
  if (shared_t2) params(lay.t2(0)) = t2_sum / n;
  return params;
}

SharingSelection model_select_t2_sharing(const FitData& data, int n_components) {
  SharingSelection sel;
  const RamseyModelSpec shared{n_components, true};
  const RamseyModelSpec split{n_components, false};
  const SinusoidLayout lay_s{n_components, true};
  const SinusoidLayout lay_p{n_components, false};

  auto better = [](const FitResult& a, const FitResult& b) {
    if (a.converged != b.converged) return a.converged ? a : b;
    return a.residual_norm <= b.residual_norm ? a : b;
  };

  // each model is fitted from its own seed and from the other model's
  // optimum; the cross-starts guard against one-sided local minima
  sel.split_fit = fit_curve(split, data, seed_ramsey_guess(data, n_components, false));
  sel.shared_fit = fit_curve(shared, data, seed_ramsey_guess(data, n_components, true));

  Eigen::VectorXd cross_shared(lay_s.count());
  double t2_mean = 0.0;
  for (int i = 0; i < n_components; ++i) t2_mean += sel.split_fit.estimates(lay_p.t2(i));
  t2_mean /= n_components;
  for (int i = 0; i < n_components; ++i) {
    cross_shared(lay_s.a(i)) = sel.split_fit.estimates(lay_p.a(i));
    cross_shared(lay_s.f(i)) = sel.split_fit.estimates(lay_p.f(i));
    cross_shared(lay_s.phi(i)) = sel.split_fit.estimates(lay_p.phi(i));
  }
  cross_shared(lay_s.t2(0)) = t2_mean;
  sel.shared_fit = better(fit_curve(shared, data, cross_shared), sel.shared_fit);

  Eigen::VectorXd cross_split(lay_p.count());
  for (int i = 0; i < n_components; ++i) {
    cross_split(lay_p.a(i)) = sel.shared_fit.estimates(lay_s.a(i));
    cross_split(lay_p.f(i)) = sel.shared_fit.estimates(lay_s.f(i));
    cross_split(lay_p.phi(i)) = sel.shared_fit.estimates(lay_s.phi(i));
    cross_split(lay_p.t2(i)) = sel.shared_fit.estimates(lay_s.t2(0));
  }
  sel.split_fit = better(fit_curve(split, data, cross_split), sel.split_fit);

  if (!sel.shared_fit.converged || !sel.split_fit.converged) {
    sel.choice = T2Sharing::abstain;
    return sel;
  }
  const auto n_data = static_cast<double>(data.x.size());
  auto criterion = [n_data](const FitResult& fit, int k) {
    const double rss = std::max(fit.residual_norm * fit.residual_norm, 1e-300);
    return n_data * std::log(rss / n_data) + 2.0 * k;
  };
  sel.criterion_shared = criterion(sel.shared_fit, 3 * n_components + 1);
  sel.criterion_split = criterion(sel.split_fit, 4 * n_components);
  sel.choice =
      sel.criterion_split < sel.criterion_shared ? T2Sharing::per_component : T2Sharing::shared;
  return sel;
}

}  // namespace vspin
