#pragma once

// Physical constants (SI). Values follow the 2018 CODATA adjustment.
namespace halo {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double elementary_charge = 1.602176634e-19;   // C (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m

// Coulomb constant q^2 prefactor, 1/(4 pi eps0) [m/F]
inline constexpr double coulomb_constant = 1.0 / (4.0 * pi * vacuum_permittivity);

inline constexpr double deg_to_rad = pi / 180.0;
inline constexpr double rad_to_deg = 180.0 / pi;

}  // namespace halo
