#include "vspin/validate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "vspin/dynamics.hpp"
#include "vspin/spectra.hpp"

namespace vspin {

using namespace std::complex_literals;

namespace {

double ladder(double s, double m) { return std::sqrt(s * (s + 1.0) - m * (m + 1.0)); }

struct BasisDecode {
  double ms, mv;
  std::vector<double> msi;
};

BasisDecode decode(int index, int n_si) {
  BasisDecode d;
  d.msi.resize(static_cast<size_t>(n_si));
  for (int k = n_si - 1; k >= 0; --k) {
    d.msi[static_cast<size_t>(k)] = (index % 2 == 0) ? 0.5 : -0.5;
    index /= 2;
  }
  d.mv = 3.5 - static_cast<double>(index % 8);
  index /= 8;
  d.ms = (index == 0) ? 0.5 : -0.5;
  return d;
}

}  // namespace

cxmat oracle_static_hamiltonian(const SystemConfig& config, const FieldVector& b0) {
  config.validate();
  const int n_si = config.n_si;
  const int dim = config.dim();
  const DefectParams& d = config.defect;
  const double mu_b = d.mu_b_over_h, mu_n = d.mu_n_over_h;

  cxmat h = cxmat::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const BasisDecode bra = decode(r, n_si);
    for (int c = 0; c < dim; ++c) {
      const BasisDecode ket = decode(c, n_si);
      std::complex<double> element = 0.0;

      int diff_sites = 0;
      if (bra.ms != ket.ms) ++diff_sites;
      if (bra.mv != ket.mv) ++diff_sites;
      int si_diff = -1;
      for (int k = 0; k < n_si; ++k)
        if (bra.msi[static_cast<size_t>(k)] != ket.msi[static_cast<size_t>(k)]) {
          ++diff_sites;
          si_diff = k;
        }

      if (diff_sites == 0) {
        element += -mu_b * d.g_par * b0.bz * ket.ms;
        element += d.a_v_par * ket.ms * ket.mv;
        element += mu_n * d.g_v * b0.bz * ket.mv;
        element += d.q_zz * ket.mv * ket.mv;
        for (int k = 0; k < n_si; ++k) {
          const double mk = ket.msi[static_cast<size_t>(k)];
          element += config.si.a_si_par * ket.ms * mk;
          element += mu_n * config.si.g_si * b0.bz * mk;
        }
      } else if (diff_sites == 1 && bra.ms != ket.ms) {
        // transverse electron Zeeman
        if (bra.ms == ket.ms + 1.0) {
          const double l = ladder(0.5, ket.ms);
          element += -mu_b * d.g_perp * l * (0.5 * b0.bx + std::complex<double>(0.0, -0.5) * b0.by);
        } else if (bra.ms == ket.ms - 1.0) {
          const double l = ladder(0.5, ket.ms - 1.0);
          element += -mu_b * d.g_perp * l * (0.5 * b0.bx + std::complex<double>(0.0, 0.5) * b0.by);
        }
      } else if (diff_sites == 1 && bra.mv != ket.mv) {
        // transverse 51V nuclear Zeeman
        if (bra.mv == ket.mv + 1.0) {
          const double l = ladder(3.5, ket.mv);
          element += mu_n * d.g_v * (b0.bx * 0.5 * l + b0.by * std::complex<double>(0.0, -0.5) * l);
        } else if (bra.mv == ket.mv - 1.0) {
          const double l = ladder(3.5, ket.mv - 1.0);
          element += mu_n * d.g_v * (b0.bx * 0.5 * l + b0.by * std::complex<double>(0.0, 0.5) * l);
        }
      } else if (diff_sites == 1 && si_diff >= 0) {
        // 29Si: semi-secular hyperfine (Sz I_kx) plus transverse nuclear Zeeman
        const double mk = ket.msi[static_cast<size_t>(si_diff)];
        const double mk_bra = bra.msi[static_cast<size_t>(si_diff)];
        if (mk_bra == mk + 1.0 || mk_bra == mk - 1.0) {
          element += config.si.a_si_perp * ket.ms * 0.5;
          element += mu_n * config.si.g_si * b0.bx * 0.5;
          const double sign = (mk_bra == mk + 1.0) ? -1.0 : 1.0;
          element += mu_n * config.si.g_si * b0.by * std::complex<double>(0.0, sign * 0.5);
        }
      } else if (diff_sites == 2 && bra.ms != ket.ms && bra.mv != ket.mv) {
        // hyperfine flip-flop, a_perp/2 (S+I- + S-I+)
        if (bra.ms == ket.ms + 1.0 && bra.mv == ket.mv - 1.0)
          element += 0.5 * d.a_v_perp * ladder(0.5, ket.ms) * ladder(3.5, ket.mv - 1.0);
        else if (bra.ms == ket.ms - 1.0 && bra.mv == ket.mv + 1.0)
          element += 0.5 * d.a_v_perp * ladder(0.5, ket.ms - 1.0) * ladder(3.5, ket.mv);
      }
      h(r, c) = element;
    }
  }
  return h;
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

Eigen::VectorXd sorted_eigs(const cxmat& h) {
  Eigen::SelfAdjointEigenSolver<cxmat> solver(h);
  return solver.eigenvalues();
}

void check(std::vector<CheckResult>& out, const std::string& name, bool pass,
           const std::string& detail) {
  out.push_back({name, pass, detail});
}

}  // namespace

std::vector<CheckResult> run_validation() {
  std::vector<CheckResult> results;

  // operator algebra for every spin in use
  {
    double worst = 0.0;
    for (double s : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5}) {
      const OperatorSet ops = make_spin_operators(s);
      const int dim = ops.dim;
      const cxmat id = cxmat::Identity(dim, dim);
      worst = std::max(worst, (ops.sx * ops.sy - ops.sy * ops.sx - 1i * ops.sz).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ops.sy * ops.sz - ops.sz * ops.sy - 1i * ops.sx).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ops.sz * ops.sx - ops.sx * ops.sz - 1i * ops.sy).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ops.sx - ops.sx.adjoint()).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ops.sy - ops.sy.adjoint()).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ops.sz - ops.sz.adjoint()).cwiseAbs().maxCoeff());
      worst = std::max(worst,
                       (ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz - s * (s + 1.0) * id)
                           .cwiseAbs()
                           .maxCoeff());
      worst = std::max(worst, (ops.s_plus - (ops.sx + 1i * ops.sy)).cwiseAbs().maxCoeff());
    }
    check(results, "commutator-algebra", worst < 1e-12, "max deviation " + fmt(worst));
  }

  // embedding rules on a two-spin-1/2 space
  {
    const ProductSpace space = ProductSpace::make(
        {SpinSpecies::nucleus("a", 0.5, 1.0), SpinSpecies::nucleus("b", 0.5, 1.0)});
    const cxmat sz1 = embed(space.ops[1].sz, 1, space);
    cxmat expect = cxmat::Zero(4, 4);
    expect.diagonal() << 0.5, -0.5, 0.5, -0.5;
    double worst = (sz1 - expect).cwiseAbs().maxCoeff();
    const cxmat sx0 = embed(space.ops[0].sx, 0, space);
    worst = std::max(worst, (sx0 * sz1 - sz1 * sx0).cwiseAbs().maxCoeff());
    worst = std::max(
        worst, (embed(cxmat::Identity(2, 2), 0, space) - cxmat::Identity(4, 4)).cwiseAbs().maxCoeff());
    bool bijection = true;
    for (int i = 0; i < space.dim; ++i)
      if (space.tuple_to_index(space.index_to_tuple(i)) != i) bijection = false;
    check(results, "embedding-and-basis-bijection", worst < 1e-12 && bijection,
          "max deviation " + fmt(worst));
  }

  // Hermiticity of constructed operators
  {
    double worst = 0.0;
    for (int n_si : {0, 1, 2}) {
      const SystemConfig config = SystemConfig::paper_defaults(n_si);
      const FieldVector b{0.4, 0.2, 31.0};
      const cxmat h = build_static_hamiltonian(config, b);
      worst = std::max(worst, (h - h.adjoint()).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff());
      const cxmat drv = build_drive_operator(config, Eigen::Vector3d(0.3, 0.1, 0.9), 0.5);
      worst = std::max(worst, (drv - drv.adjoint()).cwiseAbs().maxCoeff() / drv.cwiseAbs().maxCoeff());
    }
    check(results, "hermiticity", worst < 1e-10, "max relative deviation " + fmt(worst));
  }

  // linearity of all field terms
  {
    const SystemConfig config = SystemConfig::paper_defaults(1);
    const FieldVector b{0.5, -0.3, 28.0};
    const double alpha = 1.7;
    const cxmat h0 = build_static_hamiltonian(config, FieldVector{});
    const cxmat hb = build_static_hamiltonian(config, b);
    const cxmat hab = build_static_hamiltonian(config, FieldVector{alpha * b.bx, alpha * b.by, alpha * b.bz});
    const double worst = ((hab - h0) - alpha * (hb - h0)).cwiseAbs().maxCoeff();
    check(results, "field-linearity", worst < 1e-10, "max deviation " + fmt(worst) + " MHz");
  }

  // isotropic limit: eigenvalues depend only on |B|
  {
    SystemConfig config = SystemConfig::paper_defaults(0);
    config.defect.g_perp = config.defect.g_par;
    config.defect.a_v_perp = config.defect.a_v_par;
    config.defect.q_zz = 0.0;
    const double b = 30.0;
    const Eigen::VectorXd ez = sorted_eigs(build_static_hamiltonian(config, FieldVector{0, 0, b}));
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    const Eigen::VectorXd exyz = sorted_eigs(build_static_hamiltonian(
        config, FieldVector{b * inv_sqrt3, b * inv_sqrt3, b * inv_sqrt3}));
    const double worst = (ez - exyz).cwiseAbs().maxCoeff();
    check(results, "isotropy", worst < 1e-8, "max eigenvalue deviation " + fmt(worst) + " MHz");
  }

  // n_si = 2 with the Si coupling off reduces to the 16-dim system plus free
  // 29Si Zeeman shifts
  {
    SystemConfig c2 = SystemConfig::paper_defaults(2);
    c2.si.a_si_par = 0.0;
    c2.si.a_si_perp = 0.0;
    const SystemConfig c0 = SystemConfig::paper_defaults(0);
    const double b = 27.0;
    const Eigen::VectorXd e2 = sorted_eigs(build_static_hamiltonian(c2, FieldVector{0, 0, b}));
    const Eigen::VectorXd e0 = sorted_eigs(build_static_hamiltonian(c0, FieldVector{0, 0, b}));
    const double zeeman = c2.defect.mu_n_over_h * c2.si.g_si * b;
    std::vector<double> expected;
    for (int i = 0; i < e0.size(); ++i)
      for (double m1 : {0.5, -0.5})
        for (double m2 : {0.5, -0.5}) expected.push_back(e0(i) + zeeman * (m1 + m2));
    std::sort(expected.begin(), expected.end());
    double worst = 0.0;
    for (int i = 0; i < e2.size(); ++i)
      worst = std::max(worst, std::abs(e2(i) - expected[static_cast<size_t>(i)]));
    check(results, "si-block-consistency", worst < 1e-8, "max deviation " + fmt(worst) + " MHz");
  }

  // eigen-decomposition residual
  {
    const SystemConfig config = SystemConfig::paper_defaults(2);
    const StaticSystem sys = make_static_system(config, FieldVector::along_z(33.0));
    double worst = 0.0;
    const double scale = sys.hamiltonian.norm();
    for (int i = 0; i < sys.dim(); ++i)
      worst = std::max(worst,
                       (sys.hamiltonian * sys.vecs.col(i) - sys.energies(i) * sys.vecs.col(i)).norm());
    check(results, "eigen-residual", worst < 1e-8 * scale,
          "worst ||Hv - Ev|| / ||H|| = " + fmt(worst / scale));
  }

  // oracle cross-check: independent assembler
  {
    double worst = 0.0;
    for (int n_si : {0, 1, 2}) {
      const SystemConfig config = SystemConfig::paper_defaults(n_si);
      for (double b : {0.0, 12.5, 30.0, 47.0}) {
        const Eigen::VectorXd e1 = sorted_eigs(build_static_hamiltonian(config, FieldVector{0, 0, b}));
        const Eigen::VectorXd e2 = sorted_eigs(oracle_static_hamiltonian(config, FieldVector{0, 0, b}));
        worst = std::max(worst, (e1 - e2).cwiseAbs().maxCoeff());
      }
      const FieldVector tilted{0.7, -0.4, 22.0};
      const Eigen::VectorXd e1 = sorted_eigs(build_static_hamiltonian(config, tilted));
      const Eigen::VectorXd e2 = sorted_eigs(oracle_static_hamiltonian(config, tilted));
      worst = std::max(worst, (e1 - e2).cwiseAbs().maxCoeff());
    }
    check(results, "oracle-hamiltonian", worst < 1e-8, "max eigenvalue deviation " + fmt(worst) + " MHz");
  }

  // oracle cross-check: analytic vs numerical two-spin echo modulation
  {
    double worst = 0.0;
    for (double tau : {0.0, 0.7, 2.3, 5.9}) {
      const double analytic = eseem_two_spin_oracle(-8.2, -3.6, constants::g_nuclear_si29, 30.0, tau);
      const double numeric = hahn_echo_two_spin_numeric(-8.2, -3.6, constants::g_nuclear_si29, 30.0, tau);
      worst = std::max(worst, std::abs(analytic - numeric));
    }
    check(results, "oracle-eseem", worst < 1e-6, "max |analytic - numeric| = " + fmt(worst));
  }

  // unitarity of a pulse propagator and trace preservation through a noisy,
  // dephased sequence
  {
    const SystemConfig config = SystemConfig::paper_defaults(0);
    const FieldVector b0 = FieldVector::along_z(30.0);
    const StaticSystem sys = make_static_system(config, b0);
    const ClockLevelSets sets = clock_level_sets(sys);

    // direct unitarity of exp(-2 pi i H t) built the same way as pulses
    const cxmat drive = build_drive_operator(config, Eigen::Vector3d::UnitZ(), 0.1);
    cxmat h_pulse = sys.vecs.adjoint() * drive * sys.vecs;
    h_pulse.diagonal() += sys.energies.cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<cxmat> solver(h_pulse);
    cxmat phase = cxmat::Zero(sys.dim(), sys.dim());
    for (int k = 0; k < sys.dim(); ++k)
      phase(k, k) = std::exp(std::complex<double>(0.0, -2.0 * M_PI * solver.eigenvalues()(k) * 0.37));
    const cxmat u = solver.eigenvectors() * phase * solver.eigenvectors().adjoint();
    const double unit_dev = (u * u.adjoint() - cxmat::Identity(sys.dim(), sys.dim())).cwiseAbs().maxCoeff();

    NoiseModel noise;
    noise.sigma_b_mt = 0.05;
    noise.n_noise_samples = 8;
    noise.rng_seed = 7;
    noise.extra_dephasing_rates.push_back({sets.lower.front(), sets.upper.front(), 0.5});
    PulseSequence seq;
    const double t_pi = calibrate_pi_time(config, b0, 0.1, Eigen::Vector3d::UnitZ());
    seq.elements.push_back(Pulse{0.5 * t_pi, 0.1, sets.f_central_mhz, 0.0, Eigen::Vector3d::UnitZ()});
    seq.elements.push_back(Delay{2.0});
    seq.elements.push_back(Pulse{0.5 * t_pi, 0.1, sets.f_central_mhz, 0.0, Eigen::Vector3d::UnitZ()});
    seq.readout_levels.resize(static_cast<size_t>(sys.dim()));
    for (int k = 0; k < sys.dim(); ++k) seq.readout_levels[static_cast<size_t>(k)] = k;
    seq.swept_element = 1;
    seq.sweep_values = {0.0, 1.0, 2.0};
    const DensityState rho0 = initial_state(sys, sets.lower, sets.upper, 0.8, 0.9);
    const SignalTrace trace = propagate(seq, config, b0, noise, std::nullopt, rho0);
    double trace_dev = 0.0;
    for (double s : trace.signal) trace_dev = std::max(trace_dev, std::abs(s - 1.0));

    const bool physical = rho0.is_physical(1e-10);
    check(results, "unitarity-and-trace", unit_dev < 1e-10 && trace_dev < 1e-10 && physical,
          "unitary deviation " + fmt(unit_dev) + ", trace deviation " + fmt(trace_dev));
  }

  // determinism under a fixed seed
  {
    const SystemConfig config = SystemConfig::paper_defaults(0);
    const FieldVector b0 = FieldVector::along_z(33.0);
    ExperimentOptions opts;
    opts.noise.sigma_b_mt = 0.05;
    opts.noise.n_noise_samples = 16;
    opts.noise.rng_seed = 42;
    std::vector<double> tau;
    for (int k = 0; k < 12; ++k) tau.push_back(0.25 * k);
    const SignalTrace a = simulate_ramsey(config, b0, 1.0, tau, opts);
    const SignalTrace b = simulate_ramsey(config, b0, 1.0, tau, opts);
    bool identical = a.signal.size() == b.signal.size();
    for (size_t k = 0; identical && k < a.signal.size(); ++k)
      identical = (a.signal[k] == b.signal[k]);
    check(results, "determinism", identical, identical ? "bit-identical traces" : "traces differ");
  }

  return results;
}

}  // namespace vspin
