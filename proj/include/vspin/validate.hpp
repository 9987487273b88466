#pragma once

#include <string>
#include <vector>

#include "vspin/hamiltonian.hpp"

namespace vspin {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Second, independently written Hamiltonian assembler: explicit matrix
// elements from quantum numbers and ladder coefficients, no operator
// matrices or Kronecker products. Cross-checks build_static_hamiltonian.
cxmat oracle_static_hamiltonian(const SystemConfig& config, const FieldVector& b0);

// Structural invariant suite behind the `validate` subcommand: operator
// algebra, Hermiticity, linearity, unitarity, trace preservation, positivity,
// oracle cross-checks and seeded determinism.
std::vector<CheckResult> run_validation();

}  // namespace vspin
