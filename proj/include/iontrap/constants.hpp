#pragma once

#include <numbers>

/// CODATA 2018 values, SI units.
namespace iontrap::constants {

inline constexpr double hbar = 1.054571817e-34;              // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double electron_mass = 9.1093837015e-31;     // kg

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

static_assert(hbar > 0 && elementary_charge > 0 && atomic_mass_unit > 0);

}  // namespace iontrap::constants
