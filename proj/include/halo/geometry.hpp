#pragma once

#include <array>
#include <string>
#include <vector>

// Electrode geometry of the compact toroidal ("halo") RF trap.
//
// The trap is an axisymmetric stack of three concentric electrode pairs in
// cylindrical (r, z) coordinates, mirror-symmetric about z = 0:
//   - an inner needle pair (solid cylinders with conical tips on the axis),
//   - a middle control tube pair,
//   - an outer tube pair.
// Cross-sections are fixed by stock part radii; the design degrees of freedom
// are the three axial gap ratios (A_h, K_h, V_h) and the needle tip angle.
namespace halo {

// Outer/inner radii of the stock electrode parts [m].
struct ElectrodeRadii {
  double needle_outer = 255e-6;   // needle wire radius
  double control_inner = 415e-6;  // control tube bore radius
  double control_outer = 550e-6;
  double tube_inner = 675e-6;  // outer tube bore radius
  double tube_outer = 825e-6;

  // Tube midline radius R_t = (ID + OD)/2, the length scale of A_h.
  double tube_mid() const { return 0.5 * (tube_inner + tube_outer); }

  void validate() const;  // throws InvalidGeometry on ordering violations
};

// Dimensionless design parameters. With half-gaps z_n, z_c, z_t (electrode
// faces at |z| >= gap) and tube midline radius R_t:
//   A_h = (z_n + z_t) / R_t      overall aspect ratio
//   K_h = z_t / z_n              tube/needle gap ratio
//   V_h = (z_c - z_t) / z_n      control electrode recess
struct DesignParams {
  double A_h = 0.676;
  double K_h = 1.68;
  double V_h = 2.06;
  double theta_n_deg = 16.7;  // needle tip angle, degrees from the r-plane

  void validate() const;  // throws InvalidGeometry outside the physical range
};

// Concrete geometry in SI units.
struct TrapGeometry {
  ElectrodeRadii radii;
  double half_gap_needle = 0;   // z_n [m]: needle tips at z = +/- z_n
  double half_gap_control = 0;  // z_c [m]
  double half_gap_tube = 0;     // z_t [m]
  double needle_angle_deg = 0;  // cone surface angle from the r-plane
  double insulator_setback = 500e-6;  // m; insulators modeled as vacuum

  void validate() const;
};

// Inverse map: geometry -> dimensionless parameters.
DesignParams design_params(const TrapGeometry& g);

// Forward map: parameters -> geometry (throws InvalidGeometry on bad input).
TrapGeometry build_geometry(const DesignParams& p,
                            const ElectrodeRadii& radii = ElectrodeRadii{},
                            double insulator_setback = 500e-6);

enum class ElectrodeLabel : int {
  needle_top = 0,
  needle_bottom,
  control_top,
  control_bottom,
  tube_top,
  tube_bottom,
  far_field,
};
inline constexpr int n_electrode_labels = 7;

const char* label_name(ElectrodeLabel label);
ElectrodeLabel label_from_name(const std::string& name);

// Is this label one of the six conductor parts (not the far-field box)?
bool is_conductor_label(ElectrodeLabel label);

// Rectangular solve domain [r_min, r_max] x [z_min, z_max] in meters.
struct Domain {
  double r_min = 0, r_max = 0;
  double z_min = 0, z_max = 0;
};

// Grounded far-field box: 5x the outer tube radius in every direction.
Domain default_domain(const ElectrodeRadii& radii, double box_factor = 5.0);

// One straight piece of exposed conductor surface (or far-field box edge).
struct Segment {
  double r0 = 0, z0 = 0;  // start [m]
  double r1 = 0, z1 = 0;  // end [m]
  ElectrodeLabel label = ElectrodeLabel::far_field;
};

// Closed polygon cross-section of one conductor part, for rasterization.
struct Conductor {
  ElectrodeLabel label;
  std::vector<std::array<double, 2>> polygon;  // (r, z) loop, not repeated
};

struct ElectrodeBoundary {
  Domain domain;
  std::vector<Conductor> conductors;  // six parts
  std::vector<Segment> segments;      // exposed surfaces + far-field edges
};

// Build the full boundary description. Conductor bodies extend to the domain
// edge in z (stems are effectively infinite); exposed-surface segments are
// truncated insulator_setback past the gap-facing surfaces. Throws
// DomainTooSmall when the domain does not enclose the electrodes with margin
// >= 2x tube_outer, InvalidGeometry on inconsistent gaps.
ElectrodeBoundary boundary_segments(const TrapGeometry& g, const Domain& domain);

// Point-in-conductor test used by the solver rasterizer (boundary inclusive).
bool conductor_contains(const Conductor& c, double r, double z);

// JSON serialization with explicit SI units (meters, degrees).
std::string geometry_to_json(const TrapGeometry& g);
TrapGeometry geometry_from_json(const std::string& text);

}  // namespace halo
