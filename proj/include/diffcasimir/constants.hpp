#pragma once

#include <numbers>

// CODATA 2018 exact / recommended values, SI units.
namespace diffcasimir::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double c = 299792458.0;                 // m/s
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double hbar_ev = 6.582119569e-16;       // eV s
inline constexpr double e = 1.602176634e-19;             // C
inline constexpr double eps0 = 8.8541878128e-12;         // F/m
inline constexpr double m_e = 9.1093837015e-31;          // kg

inline constexpr double nm = 1e-9;
inline constexpr double um = 1e-6;
inline constexpr double pN = 1e-12;

// photon energy in eV -> angular frequency in rad/s
inline constexpr double ev_to_rad_s(double ev) { return ev / hbar_ev; }
inline constexpr double rad_s_to_ev(double w) { return w * hbar_ev; }

} // namespace diffcasimir::constants
