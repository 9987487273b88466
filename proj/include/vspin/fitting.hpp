#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

// Nonlinear least-squares fitting of Rabi/Ramsey traces (sums of damped
// sinusoids) and multi-Gaussian spectra, via damped Gauss-Newton with a
// Levenberg-style trust safeguard. Confidence intervals come from the
// linearized covariance at the optimum.
namespace vspin {

// value = sum_i a_i exp(-t/T2_i) sin(2 pi f_i t + phi_i)
// shared_t2: parameters [a,f,phi] x n + [T2]  (3n+1)
// otherwise: parameters [a,f,phi,T2] x n      (4n)
struct RamseyModelSpec {
  int n = 1;
  bool shared_t2 = true;
};

// Damped sinusoids in pulse duration with per-component generalized Rabi
// frequency and a common drive-dephasing time; same layout as shared-T2.
struct RabiModelSpec {
  int n = 1;
};

// value = baseline + sum_i A_i exp(-4 ln2 (x - c_i)^2 / w_i^2)
// parameters [A,c,w] x n + [baseline]  (3n+1)
struct GaussianPeakModelSpec {
  int n = 1;
};

using ModelSpec = std::variant<RamseyModelSpec, RabiModelSpec, GaussianPeakModelSpec>;

int parameter_count(const ModelSpec& spec);
std::vector<std::string> parameter_names(const ModelSpec& spec);

double model_value(const ModelSpec& spec, const Eigen::VectorXd& params, double x);
Eigen::VectorXd model_gradient(const ModelSpec& spec, const Eigen::VectorXd& params, double x);

struct FitResult {
  Eigen::VectorXd estimates;
  Eigen::VectorXd ci95;  // 95% confidence half-widths
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

struct FitData {
  std::vector<double> x, y, weight;  // weight empty -> uniform
};

FitResult fit_curve(const ModelSpec& spec, const FitData& data, const Eigen::VectorXd& initial);

// a_i >= 0, phi_i in [0, 2pi), f_i >= 0 (sinusoid models only).
Eigen::VectorXd canonicalize(const ModelSpec& spec, Eigen::VectorXd params);

// Initial guess for an n-component Ramsey model by iterative periodogram
// peak picking with component subtraction.
Eigen::VectorXd seed_ramsey_guess(const FitData& data, int n, bool shared_t2);

// |sum y_k exp(-2 pi i f x_k)| on an arbitrary frequency grid.
std::vector<double> periodogram(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& freqs);

enum class T2Sharing { shared, per_component, abstain };

struct SharingSelection {
  T2Sharing choice = T2Sharing::abstain;
  FitResult shared_fit, split_fit;
  double criterion_shared = 0.0, criterion_split = 0.0;
};

// Penalized residual criterion; picks per-component T2 only when it earns its
// extra parameters, abstains when either fit fails to converge.
SharingSelection model_select_t2_sharing(const FitData& data, int n_components);

}  // namespace vspin
