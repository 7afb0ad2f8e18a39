#ifndef POLSYNTH_CONSTANTS_HPP
#define POLSYNTH_CONSTANTS_HPP

namespace polsynth {

// CODATA values, hard-coded to 6 significant figures for reproducibility.
namespace constants {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double planck = 6.62607e-34;     // J s
inline constexpr double hbar = 1.05457e-34;       // J s
inline constexpr double boltzmann = 1.38065e-23;  // J/K

// Cesium-133 atomic mass (132.905 u).
inline constexpr double cesium_mass = 2.20695e-25;  // kg

}  // namespace constants

}  // namespace polsynth

#endif
