#pragma once

#include <functional>
#include <string>

#include "halo/grid.hpp"

// Local quadrupole fits around the RF node. Displacements are s = r - R
// (radial, from the trap center) and z. Models:
//   RF:     V(s, z) = -2 V0 s z / ell_rf^2            (one parameter, 1/ell^2)
//   static: U(s, z) = U_eff (s^2 - z^2) / ell_st^2 + d (offset d free,
//                                                       discarded)
// Both are linear least squares in the curvature coefficient; the figure of
// merit is the squared-residual area integral over a disc, discretized as a
// Riemann sum of cell contributions (residual^2 * h^2) [V^2 m^2].
namespace halo {

struct FitRegion {
  double center_r = 0;  // R [m], disc center on the z = 0 line
  double radius = 50e-6;  // m
};

struct QuadrupoleFit {
  std::string model;     // "rf" or "static"
  double ell = 0;        // m
  double chi2 = 0;       // V^2 m^2
  double center_r = 0;   // m
  double radius = 0;     // m
  int orientation = +1;  // +1: model sign as written above; -1: flipped
  double coefficient = 0;  // fitted curvature coefficient [V/m^2]
  double offset = 0;       // fitted constant [V] (static model only)
  double reference_voltage = 1.0;  // V0 or U_eff used to express ell
};

// r minimizing |grad V|^2 along the z = 0 row, refined by parabolic
// interpolation between grid nodes. Among the strict interior local minima
// of |grad V|^2 the one with the largest prominence is taken, which rejects
// shallow numerical ripples in the far field. Throws NoNodeFound if no
// interior minimum exists.
double locate_trap_center(const ScalarField& rf_field);

// Ratio |grad V|(R, 0) / min over the two midpoints toward the neighboring
// electrode surfaces; small values indicate a deep node. Diagnostic only.
double node_quality(const ScalarField& rf_field, double R, double probe_offset);

// Single-parameter fit of the RF model over the disc; reference_voltage is
// the V0 the model is expressed with (fields solved at 1 V -> pass 1.0).
// Throws EmptyRegion when no vacuum cell lies in the disc, DegenerateFit
// when the normal matrix is singular, OutOfDomain when the disc leaves the
// grid or touches a conductor cell.
QuadrupoleFit fit_rf(const ScalarField& field, const FitRegion& region,
                     double reference_voltage = 1.0);

// Two-parameter fit (curvature + offset) of the static model over the disc.
QuadrupoleFit fit_static(const ScalarField& field, const FitRegion& region,
                         double reference_voltage = 1.0);

// Squared-residual area integral of an arbitrary model over the disc.
double chi2(const ScalarField& field, const FitRegion& region,
            const std::function<double(double s, double z)>& model);

}  // namespace halo
