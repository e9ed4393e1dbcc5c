#pragma once

#include <array>
#include <string>
#include <vector>

#include "halo/pseudo.hpp"

// Two-ion crystal configurations in a ring trap, in scaled units. The
// natural length is
//   r* = (q^2/(4 pi eps0) * 2/(m omega_r^2))^(1/3)
// and the natural energy E* = (1/2) m omega_r^2 r*^2. With ion positions
// (+/-x, 0, +/-z) in units of r*, the scaled two-ion energy is
//   H(x, z) = 1/(2 sqrt(x^2 + z^2)) + 2 alpha z^2 + 2 (|x| - r0)^2,
// where alpha = omega_z^2/omega_r^2 and r0 = R/r*.
namespace halo {

struct ScaledTrap {
  double alpha = 0;  // omega_z^2 / omega_r^2, >= 0
  double r0 = 0;     // ring radius in units of r*, >= 0
};

enum class CrystalPhase { in_plane, off_plane };

struct PhaseState {
  ScaledTrap trap;
  double x = 0;  // scaled equilibrium half-separation, in plane
  double z = 0;  // scaled axial displacement (0 for in-plane)
  CrystalPhase phase = CrystalPhase::in_plane;
  double energy = 0;  // scaled H at the equilibrium
};

double r_star(const IonSpecies& species, double omega_r);  // m
double e_star(const IonSpecies& species, double omega_r);  // J

// Scaled two-ion energy; throws Singularity at x = z = 0.
double scaled_hamiltonian(double x, double z, const ScaledTrap& trap);

// Analytic gradient of H for x > 0 (used by checks and the oracle).
std::array<double, 2> hamiltonian_gradient(double x, double z,
                                           const ScaledTrap& trap);

// In-plane equilibrium: the unique root > r0 of 8x^3 - 8 r0 x^2 - 1 = 0.
// Closed cubic form, Newton-refined (guards against cancellation at small
// r0); alpha-independent.
double in_plane_x(double r0);

// Critical ring radius separating the phases: r0_c = |alpha - 1| /
// (2 alpha^(1/3)). Below it (and alpha < 1) the pair tilts out of plane.
double phase_boundary(double alpha);

// Energy-minimizing stationary branch. The off-plane branch
//   x = r0/|alpha - 1|,  x^2 + z^2 = (8 alpha)^(-2/3)
// exists only for alpha < 1 and r0 < phase_boundary(alpha); otherwise the
// in-plane branch is returned. Selection is by explicit energy comparison.
// Throws InvalidTrap for r0 <= 0 or alpha < 0.
PhaseState equilibrium(const ScaledTrap& trap);

// Independent numerical oracle: coarse grid scan over (0, r0+3] x [0, 3],
// Nelder-Mead descent, then damped Newton polish to |grad H| <= 1e-10.
PhaseState brute_force_minimum(const ScaledTrap& trap);

struct PhaseCell {
  PhaseState state;
  bool boundary_rule_in_plane = false;  // literal r0 > boundary && alpha > 1
  bool disagrees = false;  // literal rule vs energy-based label differ
};

// Tabulate equilibrium() over an (alpha, r0) rectangle, flagging cells where
// the literal validity-condition reading and the energy comparison disagree.
std::vector<PhaseCell> phase_map(double alpha_min, double alpha_max,
                                 double r0_min, double r0_max, int resolution);

// Scaled potential energy of N ions at scaled positions (x, y, z):
//   sum_{i<j} 1/|ri - rj| + sum_i [(rho_i - r0)^2 + alpha z_i^2],
// rho = sqrt(x^2 + y^2). Throws CoincidentIons on zero pair distance.
double n_ion_energy(const std::vector<std::array<double, 3>>& positions,
                    const ScaledTrap& trap);

}  // namespace halo
