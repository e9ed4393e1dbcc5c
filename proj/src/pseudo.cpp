#include "halo/pseudo.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "halo/constants.hpp"
#include "halo/errors.hpp"

namespace halo {

double IonSpecies::mass_kg() const { return mass_u * atomic_mass_unit; }
double IonSpecies::charge_C() const { return charge_e * elementary_charge; }

void IonSpecies::validate() const {
  if (!(mass_u > 0) || !std::isfinite(mass_u))
    throw ConfigError("ion mass must be positive");
  if (!(charge_e > 0) || !std::isfinite(charge_e))
    throw ConfigError("ion charge must be positive");
}

DriveSettings DriveSettings::from_frequency(double V0, double freq_Hz) {
  DriveSettings d;
  d.V0 = V0;
  d.omega_T = 2.0 * pi * freq_Hz;
  return d;
}

void DriveSettings::validate() const {
  if (!(V0 > 0) || !std::isfinite(V0)) throw ConfigError("V0 must be positive");
  if (!(omega_T > 0) || !std::isfinite(omega_T))
    throw ConfigError("RF drive frequency must be positive");
}

PseudoMap pseudopotential(const ScalarField& rf_unit_field,
                          const IonSpecies& species,
                          const DriveSettings& drive) {
  species.validate();
  drive.validate();
  const GridSpec& g = rf_unit_field.grid;
  PseudoMap map;
  map.grid = g;
  map.psi.assign(g.size(), 0.0);
  map.valid.assign(g.size(), 0);

  // psi[eV] = q^2 V0^2 |grad V_unit|^2 / (4 m Omega^2) / e
  const double q = species.charge_C();
  const double coef = q * q * drive.V0 * drive.V0 /
                      (4.0 * species.mass_kg() * drive.omega_T * drive.omega_T *
                       elementary_charge);

#pragma omp parallel for schedule(static)
  for (int i = 1; i < g.n_r - 1; ++i)
    for (int j = 1; j < g.n_z - 1; ++j) {
      if (!detail::stencil_vacuum(rf_unit_field, i, j)) continue;
      const std::size_t id = g.idx(i, j);
      map.psi[id] = coef * detail::grad2_at(rf_unit_field, i, j);
      map.valid[id] = 1;
    }

  // Node and escape barrier along the z = 0 midplane row.
  const int j0 = g.mid_j();
  if (j0 < 1 || j0 > g.n_z - 2)
    throw NoNodeFound("midplane row lies on the grid edge");
  std::vector<double> row(g.n_r, 0.0);
  std::vector<char> ok(g.n_r, 0);
  std::vector<double> x(g.n_r, 0.0);
  for (int i = 0; i < g.n_r; ++i) {
    const std::size_t id = g.idx(i, j0);
    x[i] = g.r(i);
    row[i] = map.psi[id];
    ok[i] = map.valid[id];
  }
  const detail::RowMinimum node = detail::primary_minimum(row, ok, x);
  if (node.index < 0)
    throw NoNodeFound("no interior pseudopotential minimum along the midplane");
  map.node_r = node.refined_x;
  map.node_psi = std::max(0.0, node.refined_value);

  int peak = -1;
  double peak_val = -1.0;
  int last_valid = node.index;
  for (int i = node.index + 1; i < g.n_r && ok[i]; ++i) {
    last_valid = i;
    if (row[i] > peak_val) {
      peak_val = row[i];
      peak = i;
    }
  }
  if (peak < 1 || peak >= last_valid)
    throw SaddleNotFound("pseudopotential rises monotonically to the domain edge");
  double sx, sv;
  detail::parabolic_refine(-row[peak - 1], -row[peak], -row[peak + 1], x[peak],
                           x[peak + 1] - x[peak], sx, sv);
  map.saddle_r = sx;
  map.saddle_psi = -sv;
  map.depth = map.saddle_psi - map.node_psi;
  return map;
}

namespace {

// Quadratic least squares y ~ p0 + p1 x + p2 x^2; returns p2.
double quadratic_curvature(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double b[3] = {0, 0, 0};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double p[3] = {1.0, x[k], x[k] * x[k]};
    for (int a = 0; a < 3; ++a) {
      for (int c = 0; c < 3; ++c) m[a][c] += p[a] * p[c];
      b[a] += p[a] * y[k];
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int order[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int rr = col + 1; rr < 3; ++rr)
      if (std::abs(m[order[rr]][col]) > std::abs(m[order[piv]][col])) piv = rr;
    std::swap(order[col], order[piv]);
    const double diag = m[order[col]][col];
    if (diag == 0) throw Unstable("degenerate curvature fit window");
    for (int rr = col + 1; rr < 3; ++rr) {
      const double f = m[order[rr]][col] / diag;
      for (int cc = col; cc < 3; ++cc) m[order[rr]][cc] -= f * m[order[col]][cc];
      b[order[rr]] -= f * b[order[col]];
    }
  }
  double sol[3];
  for (int rr = 2; rr >= 0; --rr) {
    double acc = b[order[rr]];
    for (int cc = rr + 1; cc < 3; ++cc) acc -= m[order[rr]][cc] * sol[cc];
    sol[rr] = acc / m[order[rr]][rr];
  }
  return sol[2];
}

}  // namespace

SecularFrequencies secular_curvatures(const PseudoMap& pseudo,
                                      const ScalarField& static_field,
                                      double static_scale,
                                      const IonSpecies& species,
                                      double window) {
  species.validate();
  const GridSpec& g = pseudo.grid;
  const bool use_static = static_scale != 0.0;
  if (use_static &&
      (static_field.grid.n_r != g.n_r || static_field.grid.n_z != g.n_z))
    throw GridMismatch("static field grid differs from the pseudopotential grid");

  const double q = species.charge_C();
  const int j0 = g.mid_j();
  const int i0 = static_cast<int>(std::lround((pseudo.node_r - g.r_min) / g.h));
  const int k = std::max(2, static_cast<int>(std::floor(window / g.h)));

  // Total potential energy [J] at a valid node of the map.
  auto energy = [&](int i, int j) {
    const std::size_t id = g.idx(i, j);
    double w = pseudo.psi[id] * elementary_charge;
    if (use_static) w += q * static_scale * static_field.values[id];
    return w;
  };

  std::vector<double> xs, ys;
  for (int i = i0 - k; i <= i0 + k; ++i) {
    if (i < 0 || i >= g.n_r || !pseudo.valid[g.idx(i, j0)]) continue;
    xs.push_back(g.r(i) - pseudo.node_r);
    ys.push_back(energy(i, j0));
  }
  if (xs.size() < 5) throw Unstable("radial curvature window too small");
  const double c_s = quadratic_curvature(xs, ys);

  xs.clear();
  ys.clear();
  for (int j = j0 - k; j <= j0 + k; ++j) {
    if (j < 0 || j >= g.n_z || !pseudo.valid[g.idx(i0, j)]) continue;
    xs.push_back(g.z(j));
    ys.push_back(energy(i0, j));
  }
  if (xs.size() < 5) throw Unstable("axial curvature window too small");
  const double c_z = quadratic_curvature(xs, ys);

  if (!(c_s > 0)) throw Unstable("non-positive radial curvature: not trapped");
  if (!(c_z > 0)) throw Unstable("non-positive axial curvature: not trapped");

  SecularFrequencies out;
  const double m_kg = species.mass_kg();
  out.omega_s = std::sqrt(2.0 * c_s / m_kg);
  out.omega_z = std::sqrt(2.0 * c_z / m_kg);
  out.alpha = (out.omega_z * out.omega_z) / (out.omega_s * out.omega_s);
  return out;
}

}  // namespace halo
