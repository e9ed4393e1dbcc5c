#pragma once

#include <map>

#include "halo/geometry.hpp"
#include "halo/grid.hpp"

// Finite-difference solver for the axisymmetric Laplace equation
//   d2V/dr2 + (1/r) dV/dr + d2V/dz2 = 0
// on a uniform grid, with conductors rasterized as fixed (Dirichlet) cells
// (staircase approximation) and the on-axis 1/r singularity handled by the
// regularized stencil V0 = (4 V_r+ + V_z+ + V_z-) / 6.
//
// Relaxation is successive over-relaxation in red-black sweep order. Within
// one color every update depends only on the other color, so the OpenMP
// kernel is bit-identical to the serial reference kernel regardless of
// thread count; both are kept and compared by tests and the benchmark.
namespace halo {

enum class BcKind { dirichlet, neumann };

struct EdgeBc {
  BcKind kind = BcKind::dirichlet;
  double value = 0.0;  // V, used when kind == dirichlet
};

struct SolveOptions {
  double tol = 1e-6;     // residual max-norm <= tol * max |applied voltage|
  long max_sweeps = 0;   // 0: pick from grid size
  double omega = 0.0;    // 0: optimal estimate from grid size
  bool parallel = true;  // false selects the serial reference kernel
  // Domain edge conditions. r_min is the symmetry axis when r_min == 0
  // (the axis stencil applies and bc_r_min is ignored).
  EdgeBc bc_r_min{}, bc_r_max{}, bc_z_min{}, bc_z_max{};
};

// Rasterized cell classification shared by solves on one boundary + grid.
struct CellMask {
  GridSpec grid;
  std::vector<int8_t> conductor;  // -1 vacuum, else int(ElectrodeLabel)
};

CellMask build_mask(const ElectrodeBoundary& boundary, const GridSpec& grid);

// Solve with the given applied voltages [V]. Labels absent from the map are
// held at 0 V (far_field sets the Dirichlet box value). Throws NoConvergence
// if the residual criterion is not met within the sweep budget.
ScalarField solve(const ElectrodeBoundary& boundary,
                  const std::map<ElectrodeLabel, double>& voltages,
                  const GridSpec& grid, const SolveOptions& opts = {});

// Same, reusing a prebuilt mask (saves rasterization across related solves).
ScalarField solve_masked(const CellMask& mask,
                         const std::map<ElectrodeLabel, double>& voltages,
                         const SolveOptions& opts = {});

// Max |local stencil solution - value| over free cells [V]: the convergence
// measure, evaluated exactly (not the relaxation step size).
double max_residual(const ScalarField& field, const SolveOptions& opts = {});

// Unit-voltage solutions per electrode group, top and bottom parts driven
// together (the static bias configuration), all other conductors and the
// far-field box grounded. Any static voltage assignment is then a linear
// superposition, making voltage retuning O(grid) instead of a fresh solve.
struct BasisFields {
  ScalarField needle;   // needle_top = needle_bottom = 1 V
  ScalarField control;  // control_top = control_bottom = 1 V
  ScalarField tube;     // tube_top = tube_bottom = 1 V
};

BasisFields solve_basis(const ElectrodeBoundary& boundary, const GridSpec& grid,
                        const SolveOptions& opts = {});

struct GroupVoltages {
  double needle = 0;   // V applied to both needle parts
  double control = 0;  // V applied to both control parts
  double tube = 0;     // V applied to both tube parts
};

// Cell-wise linear combination of the basis fields. Throws GridMismatch if
// the basis members disagree on the grid.
ScalarField superpose(const BasisFields& basis, const GroupVoltages& volts);

// --- kernels (exposed for the serial/parallel comparison tests + bench) ---

// One red-black SOR half-sweep over free cells of the given color (0 or 1);
// `fixed` marks Dirichlet nodes (1 = held).
void sor_sweep_color(ScalarField& field, const std::vector<uint8_t>& fixed,
                     const SolveOptions& opts, int color, double omega);
void sor_sweep_color_serial(ScalarField& field,
                            const std::vector<uint8_t>& fixed,
                            const SolveOptions& opts, int color, double omega);

// Dirichlet-node mask the solver derives for a field (conductors + box).
std::vector<uint8_t> fixed_mask(const ScalarField& field);

}  // namespace halo
