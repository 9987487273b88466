#pragma once

// Physical constants in the frequency-per-field units used throughout:
// all Hamiltonians are H/h in MHz, fields in mT, times in us.
namespace vspin::constants {

inline constexpr double mu_b_over_h_mhz_per_mt = 13.9962449;    // Bohr magneton / h
inline constexpr double mu_n_over_h_mhz_per_mt = 7.6225932e-3;  // nuclear magneton / h

// Nuclear g-factors (moment / (I * mu_N)).
inline constexpr double g_nuclear_v51  = 1.47106;
inline constexpr double g_nuclear_si29 = -1.11058;

}  // namespace vspin::constants
