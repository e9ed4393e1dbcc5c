#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "halo/grid.hpp"

// Time-averaged pseudopotential of the RF drive,
//   psi = q^2 |grad V|^2 / (4 m Omega_T^2),
// reported in eV. The input field is the unit-voltage RF solution; psi
// scales exactly as V0^2 / (m Omega_T^2).
namespace halo {

struct IonSpecies {
  std::string name = "Mg-24";
  double mass_u = 24.0;    // atomic mass units
  double charge_e = 1.0;   // elementary charges (fractional allowed)

  double mass_kg() const;
  double charge_C() const;
  void validate() const;  // throws ConfigError on non-positive mass/charge
};

struct DriveSettings {
  double V0 = 300.0;             // RF amplitude [V]
  double omega_T = 0;            // RF angular frequency [rad/s]
  static DriveSettings from_frequency(double V0, double freq_Hz);
  void validate() const;
};

struct PseudoMap {
  GridSpec grid;
  std::vector<double> psi;       // eV; 0 on masked cells
  std::vector<uint8_t> valid;    // 1 where the gradient stencil is clean
  double node_r = 0;             // m, pseudopotential minimum along z = 0
  double node_psi = 0;           // eV, parabolic-refined minimum value
  double saddle_r = 0;           // m, escape barrier top along z = 0
  double saddle_psi = 0;         // eV
  double depth = 0;              // eV, saddle - node
};

// Build the map from the unit-voltage RF field. Gradients use central
// differences; cells whose stencil touches a conductor or the grid edge are
// masked (psi = 0, valid = 0). Node and saddle are located along z = 0: the
// node as the largest-prominence local minimum, the saddle as the barrier
// maximum outward of the node. Throws SaddleNotFound if psi rises
// monotonically to the domain edge, NoNodeFound without an interior minimum.
PseudoMap pseudopotential(const ScalarField& rf_unit_field,
                          const IonSpecies& species, const DriveSettings& drive);

struct SecularFrequencies {
  double omega_s = 0;  // rad/s, radial (in-plane) secular frequency
  double omega_z = 0;  // rad/s, axial secular frequency
  double alpha = 0;    // omega_z^2 / omega_s^2
};

// Quadratic fits of the total potential energy psi*e + q*static_scale*U
// along r and z through the node, over a +/- window (default 30 um).
// static_field is the unit-reference static solution; static_scale
// multiplies it (pass 0 for RF-only confinement). Throws Unstable when a
// fitted curvature is non-positive.
SecularFrequencies secular_curvatures(const PseudoMap& pseudo,
                                      const ScalarField& static_field,
                                      double static_scale,
                                      const IonSpecies& species,
                                      double window = 30e-6);

}  // namespace halo
