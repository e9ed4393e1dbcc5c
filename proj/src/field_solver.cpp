#include "halo/field_solver.hpp"

#include <algorithm>
#include <cmath>

#include "halo/constants.hpp"
#include "halo/errors.hpp"

namespace halo {

namespace {

// Gauss-Seidel target value for a free node: the value that zeroes the local
// discrete cylindrical-Laplacian residual given the current neighbors.
// Regularized axis stencil at r = 0; mirror ghosts on Neumann edges. Edge
// branches are reached only for free (Neumann) edge cells; Dirichlet edge
// cells are fixed and never updated.
inline double gs_target(const GridSpec& g, const std::vector<double>& V,
                        int i, int j) {
  const std::size_t id = g.idx(i, j);
  const std::size_t nz = g.n_z;
  const double vzm = (j == 0) ? V[id + 1] : V[id - 1];
  const double vzp = (j == g.n_z - 1) ? V[id - 1] : V[id + 1];
  if (i == 0 && g.has_axis()) return (4.0 * V[id + nz] + vzp + vzm) / 6.0;
  const double cr = g.h / (2.0 * g.r(i));
  const double vrm = (i == 0) ? V[id + nz] : V[id - nz];
  const double vrp = (i == g.n_r - 1) ? V[id - nz] : V[id + nz];
  return ((1.0 + cr) * vrp + (1.0 - cr) * vrm + vzp + vzm) * 0.25;
}

struct MaskedProblem {
  std::vector<uint8_t> fixed;  // 1 = Dirichlet node
  double voltage_scale = 0;    // max |fixed value|
};

double voltage_for(const std::map<ElectrodeLabel, double>& voltages,
                   ElectrodeLabel label) {
  auto it = voltages.find(label);
  return it == voltages.end() ? 0.0 : it->second;
}

double edge_value(const std::map<ElectrodeLabel, double>& voltages,
                  const EdgeBc& bc) {
  auto it = voltages.find(ElectrodeLabel::far_field);
  return it == voltages.end() ? bc.value : it->second;
}

// Rasterize fixed cells into the field: conductors at their applied voltage,
// then Dirichlet domain edges at the box value.
MaskedProblem prepare(ScalarField& f,
                      const std::map<ElectrodeLabel, double>& voltages,
                      const SolveOptions& opts) {
  const GridSpec& g = f.grid;
  MaskedProblem p;
  p.fixed.assign(g.size(), 0);
  if (f.conductor.empty()) f.conductor.assign(g.size(), -1);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_z; ++j) {
      const std::size_t id = g.idx(i, j);
      if (f.conductor[id] >= 0) {
        p.fixed[id] = 1;
        f.values[id] =
            voltage_for(voltages, static_cast<ElectrodeLabel>(f.conductor[id]));
      }
    }
  auto fix_edge = [&](int i, int j, const EdgeBc& bc) {
    const std::size_t id = g.idx(i, j);
    if (bc.kind != BcKind::dirichlet || p.fixed[id]) return;
    p.fixed[id] = 1;
    f.conductor[id] = static_cast<int8_t>(ElectrodeLabel::far_field);
    f.values[id] = edge_value(voltages, bc);
  };
  for (int j = 0; j < g.n_z; ++j) {
    if (!g.has_axis()) fix_edge(0, j, opts.bc_r_min);
    fix_edge(g.n_r - 1, j, opts.bc_r_max);
  }
  for (int i = 0; i < g.n_r; ++i) {
    fix_edge(i, 0, opts.bc_z_min);
    fix_edge(i, g.n_z - 1, opts.bc_z_max);
  }
  for (std::size_t id = 0; id < g.size(); ++id)
    if (p.fixed[id]) p.voltage_scale = std::max(p.voltage_scale, std::abs(f.values[id]));
  return p;
}

// Special rows and columns of one color sweep: the axis row and any free
// (Neumann) domain edges. Cheap relative to the interior; shared verbatim by
// the parallel and serial kernels so both produce identical results.
void sweep_edges(ScalarField& f, const std::vector<uint8_t>& fixed,
                 const SolveOptions& opts, int color, double omega) {
  const GridSpec& g = f.grid;
  std::vector<double>& V = f.values;
  auto relax_row_i = [&](int i) {
    for (int j = (i + color) & 1; j < g.n_z; j += 2) {
      const std::size_t id = g.idx(i, j);
      if (fixed[id]) continue;
      V[id] += omega * (gs_target(g, V, i, j) - V[id]);
    }
  };
  auto relax_row_j = [&](int j) {
    for (int i = 1 + ((j + color + 1) & 1); i < g.n_r - 1; i += 2) {
      const std::size_t id = g.idx(i, j);
      if (fixed[id]) continue;
      V[id] += omega * (gs_target(g, V, i, j) - V[id]);
    }
  };
  if (g.has_axis() || opts.bc_r_min.kind == BcKind::neumann) relax_row_i(0);
  if (opts.bc_r_max.kind == BcKind::neumann) relax_row_i(g.n_r - 1);
  if (opts.bc_z_min.kind == BcKind::neumann) relax_row_j(0);
  if (opts.bc_z_max.kind == BcKind::neumann) relax_row_j(g.n_z - 1);
}

}  // namespace

// OpenMP kernel. Red-black coloring makes every update within one color
// independent (the 5-point stencil reads only the other color), so the
// result is bit-identical to the serial kernel for any thread count.
void sor_sweep_color(ScalarField& f, const std::vector<uint8_t>& fixed,
                     const SolveOptions& opts, int color, double omega) {
  const GridSpec& g = f.grid;
  double* V = f.values.data();
  const uint8_t* fx = fixed.data();
  const int n_z = g.n_z;
  const double h = g.h;
  const double r_min = g.r_min;
#pragma omp parallel for schedule(static)
  for (int i = 1; i < g.n_r - 1; ++i) {
    const double cr = h / (2.0 * (r_min + i * h));
    const double ap = (1.0 + cr) * 0.25, am = (1.0 - cr) * 0.25;
    const std::size_t row = std::size_t(i) * n_z;
    for (int j = 1 + ((i + color + 1) & 1); j < n_z - 1; j += 2) {
      const std::size_t id = row + j;
      if (fx[id]) continue;
      const double t =
          ap * V[id + n_z] + am * V[id - n_z] + 0.25 * (V[id + 1] + V[id - 1]);
      V[id] += omega * (t - V[id]);
    }
  }
  sweep_edges(f, fixed, opts, color, omega);
}

// Serial reference kernel: identical arithmetic, plain loops.
void sor_sweep_color_serial(ScalarField& f,
                            const std::vector<uint8_t>& fixed,
                            const SolveOptions& opts, int color, double omega) {
  const GridSpec& g = f.grid;
  double* V = f.values.data();
  const uint8_t* fx = fixed.data();
  const int n_z = g.n_z;
  const double h = g.h;
  const double r_min = g.r_min;
  for (int i = 1; i < g.n_r - 1; ++i) {
    const double cr = h / (2.0 * (r_min + i * h));
    const double ap = (1.0 + cr) * 0.25, am = (1.0 - cr) * 0.25;
    const std::size_t row = std::size_t(i) * n_z;
    for (int j = 1 + ((i + color + 1) & 1); j < n_z - 1; j += 2) {
      const std::size_t id = row + j;
      if (fx[id]) continue;
      const double t =
          ap * V[id + n_z] + am * V[id - n_z] + 0.25 * (V[id + 1] + V[id - 1]);
      V[id] += omega * (t - V[id]);
    }
  }
  sweep_edges(f, fixed, opts, color, omega);
}

namespace {

double residual_max(const ScalarField& f, const std::vector<uint8_t>& fixed) {
  const GridSpec& g = f.grid;
  double worst = 0;
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_z; ++j) {
      const std::size_t id = g.idx(i, j);
      if (fixed[id]) continue;
      worst = std::max(worst, std::abs(gs_target(g, f.values, i, j) - f.values[id]));
    }
  return worst;
}

}  // namespace

std::vector<uint8_t> fixed_mask(const ScalarField& f) {
  std::vector<uint8_t> fixed(f.grid.size(), 0);
  if (!f.conductor.empty())
    for (std::size_t id = 0; id < fixed.size(); ++id)
      if (f.conductor[id] >= 0) fixed[id] = 1;
  return fixed;
}

double max_residual(const ScalarField& field, const SolveOptions&) {
  return residual_max(field, fixed_mask(field));
}

CellMask build_mask(const ElectrodeBoundary& boundary, const GridSpec& grid) {
  grid.validate();
  const double slack = 0.5 * grid.h;
  if (grid.r_min > boundary.domain.r_min + slack ||
      grid.r_max < boundary.domain.r_max - slack ||
      std::abs(grid.r_max - boundary.domain.r_max) > slack ||
      std::abs(grid.z_min - boundary.domain.z_min) > slack ||
      std::abs(grid.z_max - boundary.domain.z_max) > slack)
    throw GridMismatch("solve grid does not coincide with the boundary domain");

  CellMask mask;
  mask.grid = grid;
  mask.conductor.assign(grid.size(), -1);
  for (const Conductor& c : boundary.conductors) {
    double r_lo = 1e300, r_hi = -1e300, z_lo = 1e300, z_hi = -1e300;
    for (const auto& v : c.polygon) {
      r_lo = std::min(r_lo, v[0]);
      r_hi = std::max(r_hi, v[0]);
      z_lo = std::min(z_lo, v[1]);
      z_hi = std::max(z_hi, v[1]);
    }
    const double eps = 1e-12;
    int i0 = std::max(0, int(std::ceil((r_lo - eps - grid.r_min) / grid.h)));
    int i1 = std::min(grid.n_r - 1, int(std::floor((r_hi + eps - grid.r_min) / grid.h)));
    int j0 = std::max(0, int(std::ceil((z_lo - eps - grid.z_min) / grid.h)));
    int j1 = std::min(grid.n_z - 1, int(std::floor((z_hi + eps - grid.z_min) / grid.h)));
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        if (conductor_contains(c, grid.r(i), grid.z(j)))
          mask.conductor[grid.idx(i, j)] = static_cast<int8_t>(c.label);
  }
  return mask;
}

ScalarField solve_masked(const CellMask& mask,
                         const std::map<ElectrodeLabel, double>& voltages,
                         const SolveOptions& opts) {
  if (!(opts.tol > 0)) throw ConfigError("solver tolerance must be positive");
  ScalarField f;
  f.grid = mask.grid;
  f.values.assign(mask.grid.size(), 0.0);
  f.conductor = mask.conductor;
  f.voltages = voltages;

  MaskedProblem p = prepare(f, voltages, opts);
  if (p.voltage_scale == 0.0) return f;  // all boundaries grounded

  const int n_max = std::max(f.grid.n_r, f.grid.n_z);
  double omega = opts.omega;
  if (omega <= 0) {
    const double rho_j = 0.5 * (std::cos(pi / (f.grid.n_r - 1)) +
                                std::cos(pi / (f.grid.n_z - 1)));
    omega = 2.0 / (1.0 + std::sqrt(1.0 - rho_j * rho_j));
  }
  const long budget = opts.max_sweeps > 0 ? opts.max_sweeps : 60L * n_max + 2000;
  const double target = opts.tol * p.voltage_scale;

  long sweep = 0;
  bool converged = false;
  auto do_sweep = opts.parallel ? sor_sweep_color : sor_sweep_color_serial;
  while (sweep < budget) {
    ++sweep;
    do_sweep(f, p.fixed, opts, 0, omega);
    do_sweep(f, p.fixed, opts, 1, omega);
    if (sweep % 32 == 0 && residual_max(f, p.fixed) <= target) {
      converged = true;
      break;
    }
  }
  if (!converged && residual_max(f, p.fixed) <= target) converged = true;
  if (!converged)
    throw NoConvergence("field solve exceeded the sweep budget", sweep);
  return f;
}

ScalarField solve(const ElectrodeBoundary& boundary,
                  const std::map<ElectrodeLabel, double>& voltages,
                  const GridSpec& grid, const SolveOptions& opts) {
  return solve_masked(build_mask(boundary, grid), voltages, opts);
}

BasisFields solve_basis(const ElectrodeBoundary& boundary, const GridSpec& grid,
                        const SolveOptions& opts) {
  const CellMask mask = build_mask(boundary, grid);
  BasisFields basis;
  basis.needle = solve_masked(mask,
                              {{ElectrodeLabel::needle_top, 1.0},
                               {ElectrodeLabel::needle_bottom, 1.0}},
                              opts);
  basis.control = solve_masked(mask,
                               {{ElectrodeLabel::control_top, 1.0},
                                {ElectrodeLabel::control_bottom, 1.0}},
                               opts);
  basis.tube = solve_masked(mask,
                            {{ElectrodeLabel::tube_top, 1.0},
                             {ElectrodeLabel::tube_bottom, 1.0}},
                            opts);
  return basis;
}

namespace {

bool same_grid(const GridSpec& a, const GridSpec& b) {
  return a.n_r == b.n_r && a.n_z == b.n_z &&
         std::abs(a.r_min - b.r_min) < 1e-12 && std::abs(a.h - b.h) < 1e-15 &&
         std::abs(a.z_min - b.z_min) < 1e-12;
}

}  // namespace

ScalarField superpose(const BasisFields& basis, const GroupVoltages& volts) {
  if (!same_grid(basis.needle.grid, basis.control.grid) ||
      !same_grid(basis.needle.grid, basis.tube.grid))
    throw GridMismatch("basis fields solved on different grids");
  ScalarField out;
  out.grid = basis.needle.grid;
  out.conductor = basis.needle.conductor;
  out.values.resize(out.grid.size());
  for (std::size_t id = 0; id < out.values.size(); ++id)
    out.values[id] = volts.needle * basis.needle.values[id] +
                     volts.control * basis.control.values[id] +
                     volts.tube * basis.tube.values[id];
  out.voltages = {{ElectrodeLabel::needle_top, volts.needle},
                  {ElectrodeLabel::needle_bottom, volts.needle},
                  {ElectrodeLabel::control_top, volts.control},
                  {ElectrodeLabel::control_bottom, volts.control},
                  {ElectrodeLabel::tube_top, volts.tube},
                  {ElectrodeLabel::tube_bottom, volts.tube}};
  return out;
}

}  // namespace halo
