#include <doctest.h>

#include "support/oracles.hpp"
#include "vspin/dynamics.hpp"
#include "vspin/hamiltonian.hpp"
#include "vspin/validate.hpp"

using namespace vspin;

namespace {

Eigen::VectorXd eigs(const cxmat& h) {
  Eigen::SelfAdjointEigenSolver<cxmat> solver(h);
  return solver.eigenvalues();
}

}  // namespace

TEST_CASE("table defaults are wired into the parameter structs") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  CHECK(config.defect.g_par == doctest::Approx(1.664));
  CHECK(config.defect.g_perp == doctest::Approx(0.0));
  CHECK(config.defect.a_v_par == doctest::Approx(-232.02));
  CHECK(config.defect.a_v_perp == doctest::Approx(-162.32));
  CHECK(config.defect.q_zz == doctest::Approx(-0.2));
  CHECK(config.si.a_si_par == doctest::Approx(-8.2));
  CHECK(config.si.a_si_perp == doctest::Approx(-3.6));
  CHECK(config.dim() == 16);
  CHECK(SystemConfig::paper_defaults(1).dim() == 32);
  CHECK(SystemConfig::paper_defaults(2).dim() == 64);
}

TEST_CASE("transverse field couples only to the nuclei when g_perp = 0") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const cxmat h_bx = build_static_hamiltonian(config, FieldVector{0.8, 0.0, 0.0});
  const cxmat h_0 = build_static_hamiltonian(config, FieldVector{});
  const ProductSpace space = build_product_space(config);
  const cxmat expected =
      config.defect.mu_n_over_h * config.defect.g_v * 0.8 * embed(space.ops[1].sx, 1, space);
  CHECK((h_bx - h_0 - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigenvalues match the independent assembler") {
  // oracle: second, independently written Hamiltonian built from explicit
  // matrix elements
  for (int n_si : {0, 1, 2}) {
    CAPTURE(n_si);
    const SystemConfig config = SystemConfig::paper_defaults(n_si);
    const Eigen::VectorXd a = eigs(build_static_hamiltonian(config, FieldVector::along_z(30.0)));
    const Eigen::VectorXd b = eigs(oracle_static_hamiltonian(config, FieldVector::along_z(30.0)));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("zero field, zero quadrupole reduces to the pure axial hyperfine spectrum") {
  SystemConfig config = SystemConfig::paper_defaults(0);
  config.defect.q_zz = 0.0;
  const Eigen::VectorXd a = eigs(build_static_hamiltonian(config, FieldVector{}));
  const Eigen::VectorXd b = eigs(oracle_static_hamiltonian(config, FieldVector{}));
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hermiticity and field linearity") {
  const SystemConfig config = SystemConfig::paper_defaults(2);
  const FieldVector b{0.3, -0.6, 28.5};
  const cxmat h = build_static_hamiltonian(config, b);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-10 * h.cwiseAbs().maxCoeff());

  const double alpha = 2.3;
  const cxmat h0 = build_static_hamiltonian(config, FieldVector{});
  const cxmat ha =
      build_static_hamiltonian(config, FieldVector{alpha * b.bx, alpha * b.by, alpha * b.bz});
  CHECK(((ha - h0) - alpha * (h - h0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("isotropic limit depends only on |B|") {
  SystemConfig config = SystemConfig::paper_defaults(0);
  config.defect.g_perp = config.defect.g_par;
  config.defect.a_v_perp = config.defect.a_v_par;
  config.defect.q_zz = 0.0;
  const double b = 24.0;
  const Eigen::VectorXd ez = eigs(build_static_hamiltonian(config, FieldVector{0, 0, b}));
  const Eigen::VectorXd ex = eigs(build_static_hamiltonian(config, FieldVector{b, 0, 0}));
  const double inv = 1.0 / std::sqrt(2.0);
  const Eigen::VectorXd exz =
      eigs(build_static_hamiltonian(config, FieldVector{b * inv, 0, b * inv}));
  CHECK((ez - ex).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((ez - exz).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("drive operator geometry") {
  const SystemConfig config = SystemConfig::paper_defaults(1);

  SUBCASE("z axis drive is diagonal in the product basis") {
    const cxmat d = build_drive_operator(config, Eigen::Vector3d::UnitZ(), 0.4);
    cxmat off = d;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("x axis drive with g_perp = 0 leaves only nuclear ladder terms") {
    const cxmat d = build_drive_operator(config, Eigen::Vector3d::UnitX(), 0.4);
    const ProductSpace space = build_product_space(config);
    const cxmat expected =
        config.defect.mu_n_over_h * 0.4 *
        (config.defect.g_v * embed(space.ops[1].sx, 1, space) +
         config.si.g_si * embed(space.ops[2].sx, 2, space));
    CHECK((d - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("zero axis rejected") {
    CHECK_THROWS_AS(build_drive_operator(config, Eigen::Vector3d::Zero(), 0.4),
                    std::invalid_argument);
  }
}

TEST_CASE("z drive couples the clock pair through state mixing") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const StaticSystem sys = make_static_system(config, FieldVector::along_z(30.0));
  const ClockLevelSets sets = clock_level_sets(sys);
  REQUIRE(sets.lower.size() == 1);
  REQUIRE(sets.upper.size() == 1);
  const cxmat d = build_drive_operator(config, Eigen::Vector3d::UnitZ(), 1.0);
  const cxmat d_eig = sys.vecs.adjoint() * d * sys.vecs;
  const double element = std::abs(d_eig(sets.lower.front(), sets.upper.front()));
  const double diag_scale = d.diagonal().cwiseAbs().maxCoeff();
  CHECK(element > 1e-3 * diag_scale);
}

TEST_CASE("invalid inputs are rejected") {
  SystemConfig config = SystemConfig::paper_defaults(0);
  config.n_si = 3;
  CHECK_THROWS_AS(build_static_hamiltonian(config, FieldVector{}), std::invalid_argument);
  CHECK_THROWS_AS(
      build_static_hamiltonian(SystemConfig::paper_defaults(0),
                               FieldVector{0.0, 0.0, std::nan("")}),
      std::invalid_argument);
}

TEST_CASE("ket labels render and parse consistently") {
  const SystemConfig config = SystemConfig::paper_defaults(0);
  const ProductSpace space = build_product_space(config);
  // basis state (m_s = +1/2, m_i = -7/2) is index row 0*8 + 7
  cxvec e = cxvec::Zero(16);
  e(7) = 1.0;
  const KetLabel label = dominant_ket(e, space);
  CHECK(label.ms2 == 1);
  CHECK(label.mi2 == -7);
  // with g_par > 0, m_s = +1/2 is the branch that falls with field: "down"
  CHECK(label.str(config.defect.g_par) == "|↓,-7/2>");
  CHECK(parse_ket_vpart("down,-7/2").same_v_part(label));
  CHECK(parse_ket_vpart("up,-5/2").ms2 == -1);
  CHECK_THROWS_AS(parse_ket_vpart("sideways,-1/2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ket_vpart("up,-9/2"), std::invalid_argument);
}
