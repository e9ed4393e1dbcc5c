#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "halo/geometry.hpp"

namespace halo {

// Uniform node-centered grid on [r_min, r_max] x [z_min, z_max], identical
// spacing h in both directions. Values are stored row-major with z fastest:
// index(i, j) = i * n_z + j for radial index i and axial index j.
struct GridSpec {
  double r_min = 0, r_max = 0;  // m
  double z_min = 0, z_max = 0;  // m
  int n_r = 0, n_z = 0;         // node counts
  double h = 0;                 // node spacing, m

  std::size_t size() const { return std::size_t(n_r) * std::size_t(n_z); }
  std::size_t idx(int i, int j) const { return std::size_t(i) * n_z + j; }
  double r(int i) const { return r_min + i * h; }
  double z(int j) const { return z_min + j * h; }
  bool has_axis() const { return r_min == 0.0; }
  bool contains(double r, double z) const {
    return r >= r_min && r <= r_max && z >= z_min && z <= z_max;
  }
  // Index of the grid line nearest z = 0 (the trap midplane).
  int mid_j() const;

  void validate() const;  // throws NonPositiveSpacing / DomainTooSmall

  // Build a grid with exactly n_cells_r intervals across [r_min, r_max];
  // the z extent is rounded to a whole number of cells of the same h.
  static GridSpec regular(double r_min, double r_max, double z_min,
                          double z_max, int n_cells_r);
};

// Default solve grid for a trap geometry: square cells over the far-field
// box with at least `radial_cells` intervals across the radial extent, and a
// node line exactly on z = 0.
GridSpec default_grid(const Domain& domain, int radial_cells = 400);

// Sampled scalar field (electric potential [V], or any cell-wise quantity).
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  // Per-node conductor occupancy: -1 vacuum, else int(ElectrodeLabel).
  // Empty means "no conductors anywhere" (synthetic fields).
  std::vector<int8_t> conductor;
  // Applied voltages [V] keyed by electrode label (solver provenance).
  std::map<ElectrodeLabel, double> voltages;

  bool is_vacuum(int i, int j) const {
    return conductor.empty() || conductor[grid.idx(i, j)] < 0;
  }
  double at(int i, int j) const { return values[grid.idx(i, j)]; }
  double& at(int i, int j) { return values[grid.idx(i, j)]; }
};

struct GradientRZ {
  double d_dr = 0;  // dV/dr [V/m]
  double d_dz = 0;  // dV/dz [V/m]
};

// Central-difference gradient at the four surrounding nodes, bilinearly
// interpolated to the point; second-order accurate in h. Throws OutOfDomain
// if the point is within one cell of the grid edge (no full stencil).
GradientRZ gradient(const ScalarField& field, double r, double z);

// Bilinear interpolation of the field value at a point inside the grid.
double value_at(const ScalarField& field, double r, double z);

}  // namespace halo
