#include "halo/grid.hpp"

#include <cmath>

#include "halo/errors.hpp"

namespace halo {

int GridSpec::mid_j() const {
  const double t = (0.0 - z_min) / h;
  int j = static_cast<int>(std::lround(t));
  if (j < 0) j = 0;
  if (j > n_z - 1) j = n_z - 1;
  return j;
}

void GridSpec::validate() const {
  if (!(h > 0) || !std::isfinite(h))
    throw NonPositiveSpacing("grid spacing must be positive");
  if (n_r < 16 || n_z < 16)
    throw DomainTooSmall("grid must have at least 16 nodes per direction");
  if (r_min < 0) throw DomainTooSmall("radial grid extent must be >= 0");
  if (!(r_max > r_min) || !(z_max > z_min))
    throw DomainTooSmall("grid extents must be increasing");
  const double tol = 1e-9 * h;
  if (std::abs((r_max - r_min) - (n_r - 1) * h) > tol ||
      std::abs((z_max - z_min) - (n_z - 1) * h) > tol)
    throw NonPositiveSpacing("grid extents are not whole multiples of h");
}

GridSpec GridSpec::regular(double r_min, double r_max, double z_min,
                           double z_max, int n_cells_r) {
  if (n_cells_r < 1) throw NonPositiveSpacing("cell count must be positive");
  GridSpec g;
  g.h = (r_max - r_min) / n_cells_r;
  g.r_min = r_min;
  g.r_max = r_max;
  g.n_r = n_cells_r + 1;
  const int n_cells_z = static_cast<int>(std::lround((z_max - z_min) / g.h));
  g.z_min = z_min;
  g.z_max = z_min + n_cells_z * g.h;
  g.n_z = n_cells_z + 1;
  g.validate();
  return g;
}

GridSpec default_grid(const Domain& domain, int radial_cells) {
  // Symmetric z extent with an even cell count puts a node line on z = 0.
  GridSpec g;
  g.h = (domain.r_max - domain.r_min) / radial_cells;
  g.r_min = domain.r_min;
  g.r_max = domain.r_max;
  g.n_r = radial_cells + 1;
  int half_cells = static_cast<int>(std::ceil(domain.z_max / g.h - 1e-9));
  g.z_max = half_cells * g.h;
  g.z_min = -g.z_max;
  g.n_z = 2 * half_cells + 1;
  g.validate();
  return g;
}

namespace {

// Central difference of the potential along r and z at an interior node.
GradientRZ node_gradient(const ScalarField& f, int i, int j) {
  const double inv2h = 1.0 / (2.0 * f.grid.h);
  GradientRZ g;
  g.d_dr = (f.at(i + 1, j) - f.at(i - 1, j)) * inv2h;
  g.d_dz = (f.at(i, j + 1) - f.at(i, j - 1)) * inv2h;
  return g;
}

}  // namespace

GradientRZ gradient(const ScalarField& field, double r, double z) {
  const GridSpec& g = field.grid;
  if (!g.contains(r, z)) throw OutOfDomain("gradient point outside the grid");
  const double u = (r - g.r_min) / g.h;
  const double v = (z - g.z_min) / g.h;
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  // The stencil needs central differences at nodes (i0..i0+1, j0..j0+1).
  if (i0 >= g.n_r - 2) i0 = g.n_r - 3;
  if (j0 >= g.n_z - 2) j0 = g.n_z - 3;
  if (i0 < 1 || j0 < 1 || i0 + 1 > g.n_r - 2 || j0 + 1 > g.n_z - 2)
    throw OutOfDomain("gradient stencil leaves the grid");
  const double fu = u - i0, fv = v - j0;
  GradientRZ g00 = node_gradient(field, i0, j0);
  GradientRZ g10 = node_gradient(field, i0 + 1, j0);
  GradientRZ g01 = node_gradient(field, i0, j0 + 1);
  GradientRZ g11 = node_gradient(field, i0 + 1, j0 + 1);
  GradientRZ out;
  out.d_dr = (1 - fu) * (1 - fv) * g00.d_dr + fu * (1 - fv) * g10.d_dr +
             (1 - fu) * fv * g01.d_dr + fu * fv * g11.d_dr;
  out.d_dz = (1 - fu) * (1 - fv) * g00.d_dz + fu * (1 - fv) * g10.d_dz +
             (1 - fu) * fv * g01.d_dz + fu * fv * g11.d_dz;
  return out;
}

double value_at(const ScalarField& field, double r, double z) {
  const GridSpec& g = field.grid;
  if (!g.contains(r, z)) throw OutOfDomain("interpolation point outside the grid");
  double u = (r - g.r_min) / g.h;
  double v = (z - g.z_min) / g.h;
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  if (i0 > g.n_r - 2) i0 = g.n_r - 2;
  if (j0 > g.n_z - 2) j0 = g.n_z - 2;
  const double fu = u - i0, fv = v - j0;
  return (1 - fu) * (1 - fv) * field.at(i0, j0) +
         fu * (1 - fv) * field.at(i0 + 1, j0) +
         (1 - fu) * fv * field.at(i0, j0 + 1) + fu * fv * field.at(i0 + 1, j0 + 1);
}

}  // namespace halo
