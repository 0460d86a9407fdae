#pragma once

namespace resq::constants {

// 2019 SI exact values
inline constexpr double k_boltzmann = 1.380649e-23;      // J/K
inline constexpr double h_planck    = 6.62607015e-34;    // J*s
inline constexpr double hbar        = 1.054571817e-34;   // J*s

inline constexpr double pi          = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;

// BCS weak-coupling gap ratio, Delta_0 = bcs_gap_ratio * k_B * Tc
inline constexpr double bcs_gap_ratio = 1.764;

}  // namespace resq::constants
