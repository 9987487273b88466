#include "vspin/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

namespace vspin {

void DefectParams::validate() const {
  if (!(mu_b_over_h > 0.0) || !(mu_n_over_h > 0.0))
    throw std::invalid_argument("DefectParams: magneton constants must be positive");
  for (double v : {g_par, g_perp, a_v_par, a_v_perp, q_zz, g_v})
    if (!std::isfinite(v)) throw std::invalid_argument("DefectParams: non-finite parameter");
}

void SystemConfig::validate() const {
  if (n_si < 0 || n_si > 2)
    throw std::invalid_argument("SystemConfig: n_si must be 0, 1 or 2");
  defect.validate();
  for (double v : {si.a_si_par, si.a_si_perp, si.g_si})
    if (!std::isfinite(v)) throw std::invalid_argument("SystemConfig: non-finite Si parameter");
}

SystemConfig SystemConfig::paper_defaults(int n_si) {
  SystemConfig config;
  config.n_si = n_si;
  config.validate();
  return config;
}

void FieldVector::validate() const {
  if (!std::isfinite(bx) || !std::isfinite(by) || !std::isfinite(bz))
    throw std::invalid_argument("FieldVector: non-finite component");
}

ProductSpace build_product_space(const SystemConfig& config) {
  config.validate();
  std::vector<SpinSpecies> species;
  species.push_back(SpinSpecies::electron("e", 0.5, config.defect.g_par, config.defect.g_perp));
  species.push_back(SpinSpecies::nucleus("51V", 3.5, config.defect.g_v));
  for (int k = 0; k < config.n_si; ++k)
    species.push_back(SpinSpecies::nucleus("29Si_" + std::to_string(k + 1), 0.5, config.si.g_si));
  return ProductSpace::make(std::move(species));
}

cxmat build_static_hamiltonian(const SystemConfig& config, const FieldVector& b0) {
  config.validate();
  b0.validate();
  const ProductSpace space = build_product_space(config);
  const DefectParams& d = config.defect;

  const cxmat sx = embed(space.ops[0].sx, 0, space);
  const cxmat sy = embed(space.ops[0].sy, 0, space);
  const cxmat sz = embed(space.ops[0].sz, 0, space);
  const cxmat ivx = embed(space.ops[1].sx, 1, space);
  const cxmat ivy = embed(space.ops[1].sy, 1, space);
  const cxmat ivz = embed(space.ops[1].sz, 1, space);

  cxmat h = -d.mu_b_over_h * (d.g_perp * (b0.bx * sx + b0.by * sy) + d.g_par * b0.bz * sz);
  h += d.a_v_par * sz * ivz + d.a_v_perp * (sx * ivx + sy * ivy);
  h += d.mu_n_over_h * d.g_v * (b0.bx * ivx + b0.by * ivy + b0.bz * ivz);
  h += d.q_zz * ivz * ivz;

  // 29Si neighbors couple to the electron via Sz only (semi-secular form);
  // the in-plane component is fixed along x per site.
  for (int k = 0; k < config.n_si; ++k) {
    const int site = 2 + k;
    const cxmat ikx = embed(space.ops[static_cast<size_t>(site)].sx, site, space);
    const cxmat iky = embed(space.ops[static_cast<size_t>(site)].sy, site, space);
    const cxmat ikz = embed(space.ops[static_cast<size_t>(site)].sz, site, space);
    h += sz * (config.si.a_si_par * ikz + config.si.a_si_perp * ikx);
    h += d.mu_n_over_h * config.si.g_si * (b0.bx * ikx + b0.by * iky + b0.bz * ikz);
  }
  return h;
}

cxmat build_drive_operator(const SystemConfig& config, const Eigen::Vector3d& axis,
                           double b1_amplitude_mt) {
  config.validate();
  const double norm = axis.norm();
  if (!(norm > 1e-12)) throw std::invalid_argument("build_drive_operator: zero-length axis");
  const Eigen::Vector3d n = axis / norm;
  if (!std::isfinite(b1_amplitude_mt))
    throw std::invalid_argument("build_drive_operator: non-finite amplitude");

  const ProductSpace space = build_product_space(config);
  const DefectParams& d = config.defect;
  const double b1 = b1_amplitude_mt;

  const cxmat sx = embed(space.ops[0].sx, 0, space);
  const cxmat sy = embed(space.ops[0].sy, 0, space);
  const cxmat sz = embed(space.ops[0].sz, 0, space);

  cxmat drive = -d.mu_b_over_h * b1 * (d.g_perp * (n.x() * sx + n.y() * sy) + d.g_par * n.z() * sz);

  const cxmat ivx = embed(space.ops[1].sx, 1, space);
  const cxmat ivy = embed(space.ops[1].sy, 1, space);
  const cxmat ivz = embed(space.ops[1].sz, 1, space);
  drive += d.mu_n_over_h * b1 * d.g_v * (n.x() * ivx + n.y() * ivy + n.z() * ivz);

  for (int k = 0; k < config.n_si; ++k) {
    const int site = 2 + k;
    const cxmat ikx = embed(space.ops[static_cast<size_t>(site)].sx, site, space);
    const cxmat iky = embed(space.ops[static_cast<size_t>(site)].sy, site, space);
    const cxmat ikz = embed(space.ops[static_cast<size_t>(site)].sz, site, space);
    drive += d.mu_n_over_h * b1 * config.si.g_si * (n.x() * ikx + n.y() * iky + n.z() * ikz);
  }
  return drive;
}

namespace {

std::string half_fraction(int twice) {
  // twice is 2m; render integers plainly and half-integers as n/2
  if (twice % 2 == 0) return std::to_string(twice / 2);
  return std::to_string(twice) + "/2";
}

}  // namespace

std::string KetLabel::str(double g_par) const {
  // With the -mu_B B.g.S convention and g_par > 0, the m_s = -1/2 state rises
  // with field and is drawn as the upper branch.
  const bool up = (g_par > 0.0) ? (ms2 < 0) : (ms2 > 0);
  std::string out = "|";
  out += up ? "↑" : "↓";
  out += "," + half_fraction(mi2);
  if (!si2.empty()) {
    out += ";";
    for (int v : si2) out += (v > 0) ? "⇑" : "⇓";
  }
  out += ">";
  return out;
}

KetLabel parse_ket_vpart(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("parse_ket_vpart: expected '<up|down>,<m_i>' in '" + text + "'");
  std::string arrow = text.substr(0, comma);
  std::string m_text = text.substr(comma + 1);

  KetLabel label;
  if (arrow == "up" || arrow == "↑")
    label.ms2 = -1;  // rising branch for g_par > 0
  else if (arrow == "down" || arrow == "↓")
    label.ms2 = +1;
  else
    throw std::invalid_argument("parse_ket_vpart: unknown electron arrow '" + arrow + "'");

  double m = 0.0;
  const auto slash = m_text.find('/');
  if (slash != std::string::npos) {
    const double num = std::stod(m_text.substr(0, slash));
    const double den = std::stod(m_text.substr(slash + 1));
    m = num / den;
  } else {
    m = std::stod(m_text);
  }
  label.mi2 = static_cast<int>(std::llround(2.0 * m));
  if (std::abs(label.mi2) > 7 || label.mi2 % 2 == 0)
    throw std::invalid_argument("parse_ket_vpart: m_i out of range for I=7/2 in '" + text + "'");
  return label;
}

KetLabel dominant_ket(const cxvec& eigenvector, const ProductSpace& space) {
  if (eigenvector.size() != space.dim)
    throw std::invalid_argument("dominant_ket: dimension mismatch");
  int best = 0;
  double best_w = -1.0;
  for (int i = 0; i < space.dim; ++i) {
    const double w = std::norm(eigenvector(i));
    if (w > best_w + 1e-15) {
      best_w = w;
      best = i;
    }
  }
  const std::vector<int> tuple = space.index_to_tuple(best);
  KetLabel label;
  label.ms2 = (tuple[0] == 0) ? +1 : -1;  // electron index 0 is m_s = +1/2
  label.mi2 = 7 - 2 * tuple[1];           // 51V index 0 is m_i = +7/2
  for (size_t k = 2; k < tuple.size(); ++k) label.si2.push_back(tuple[k] == 0 ? +1 : -1);
  return label;
}

std::vector<int> StaticSystem::levels_with_v_part(const KetLabel& v_part) const {
  std::vector<int> out;
  for (int i = 0; i < dim(); ++i)
    if (labels[static_cast<size_t>(i)].same_v_part(v_part)) out.push_back(i);
  return out;
}

StaticSystem make_static_system(const SystemConfig& config, const FieldVector& b0) {
  StaticSystem sys;
  sys.config = config;
  sys.b0 = b0;
  sys.space = build_product_space(config);
  sys.hamiltonian = build_static_hamiltonian(config, b0);
  Eigen::SelfAdjointEigenSolver<cxmat> solver(sys.hamiltonian);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("make_static_system: eigensolver failed");
  sys.energies = solver.eigenvalues();
  sys.vecs = solver.eigenvectors();
  sys.labels.reserve(static_cast<size_t>(sys.dim()));
  for (int i = 0; i < sys.dim(); ++i)
    sys.labels.push_back(dominant_ket(sys.vecs.col(i), sys.space));
  return sys;
}

}  // namespace vspin
