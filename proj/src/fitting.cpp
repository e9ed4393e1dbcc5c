#include "halo/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "detail.hpp"
#include "halo/errors.hpp"

namespace halo {

double locate_trap_center(const ScalarField& rf_field) {
  const GridSpec& g = rf_field.grid;
  const int j0 = g.mid_j();
  if (j0 < 1 || j0 > g.n_z - 2)
    throw NoNodeFound("midplane row lies on the grid edge");
  std::vector<double> val(g.n_r, 0.0);
  std::vector<char> ok(g.n_r, 0);
  std::vector<double> x(g.n_r, 0.0);
  for (int i = 1; i < g.n_r - 1; ++i) {
    x[i] = g.r(i);
    if (!detail::stencil_vacuum(rf_field, i, j0)) continue;
    val[i] = detail::grad2_at(rf_field, i, j0);
    ok[i] = 1;
  }
  const detail::RowMinimum m = detail::primary_minimum(val, ok, x);
  if (m.index < 0)
    throw NoNodeFound("no interior |grad V|^2 minimum along the midplane");
  return m.refined_x;
}

double node_quality(const ScalarField& rf_field, double R, double probe_offset) {
  auto mag = [&](double r) {
    const GradientRZ gr = gradient(rf_field, r, 0.0);
    return std::hypot(gr.d_dr, gr.d_dz);
  };
  const double at_node = mag(R);
  const double probe = std::min(mag(R - probe_offset), mag(R + probe_offset));
  return probe > 0 ? at_node / probe : std::numeric_limits<double>::infinity();
}

namespace {

struct DiscCells {
  std::vector<double> s, z, v;  // displacement [m], displacement [m], value [V]
  double h = 0;
};

DiscCells collect(const ScalarField& field, const FitRegion& region) {
  const GridSpec& g = field.grid;
  if (!(region.radius > 0)) throw EmptyRegion("fit disc radius must be positive");
  const double R = region.center_r, rad = region.radius;
  if (R - rad < g.r_min || R + rad > g.r_max || -rad < g.z_min || rad > g.z_max)
    throw OutOfDomain("fit disc leaves the solver grid");
  DiscCells cells;
  cells.h = g.h;
  const int i0 = std::max(0, int(std::ceil((R - rad - g.r_min) / g.h)));
  const int i1 = std::min(g.n_r - 1, int(std::floor((R + rad - g.r_min) / g.h)));
  const int j0 = std::max(0, int(std::ceil((-rad - g.z_min) / g.h)));
  const int j1 = std::min(g.n_z - 1, int(std::floor((rad - g.z_min) / g.h)));
  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j) {
      const double s = g.r(i) - R, zz = g.z(j);
      if (s * s + zz * zz > rad * rad) continue;
      if (!field.is_vacuum(i, j))
        throw OutOfDomain("fit disc touches a conductor cell");
      cells.s.push_back(s);
      cells.z.push_back(zz);
      cells.v.push_back(field.at(i, j));
    }
  if (cells.s.empty()) throw EmptyRegion("no grid cell lies inside the fit disc");
  return cells;
}

}  // namespace

QuadrupoleFit fit_rf(const ScalarField& field, const FitRegion& region,
                     double reference_voltage) {
  if (!(reference_voltage > 0))
    throw ConfigError("fit reference voltage must be positive");
  const DiscCells cells = collect(field, region);
  // Least squares for V = c * (s z): c = sum(phi v) / sum(phi^2).
  double spp = 0, spv = 0;
  for (std::size_t k = 0; k < cells.s.size(); ++k) {
    const double phi = cells.s[k] * cells.z[k];
    spp += phi * phi;
    spv += phi * cells.v[k];
  }
  if (!(spp > 0)) throw DegenerateFit("rf fit basis vanishes on the disc");
  const double c = spv / spp;
  if (c == 0) throw DegenerateFit("disc carries no s*z quadrupole component");
  QuadrupoleFit fit;
  fit.model = "rf";
  fit.coefficient = c;
  fit.orientation = c < 0 ? +1 : -1;  // model as written has c = -2 V0/ell^2
  fit.ell = std::sqrt(2.0 * reference_voltage / std::abs(c));
  fit.center_r = region.center_r;
  fit.radius = region.radius;
  fit.reference_voltage = reference_voltage;
  double acc = 0;
  for (std::size_t k = 0; k < cells.s.size(); ++k) {
    const double res = c * cells.s[k] * cells.z[k] - cells.v[k];
    acc += res * res;
  }
  fit.chi2 = acc * cells.h * cells.h;
  return fit;
}

QuadrupoleFit fit_static(const ScalarField& field, const FitRegion& region,
                         double reference_voltage) {
  if (!(reference_voltage > 0))
    throw ConfigError("fit reference voltage must be positive");
  const DiscCells cells = collect(field, region);
  // Least squares for U = c * (s^2 - z^2) + d; the offset d is free and
  // discarded from the reported quadrupole strength.
  const double n = static_cast<double>(cells.s.size());
  double spp = 0, sp = 0, spv = 0, sv = 0;
  for (std::size_t k = 0; k < cells.s.size(); ++k) {
    const double psi = cells.s[k] * cells.s[k] - cells.z[k] * cells.z[k];
    spp += psi * psi;
    sp += psi;
    spv += psi * cells.v[k];
    sv += cells.v[k];
  }
  const double det = spp * n - sp * sp;
  if (!(det > 1e-12 * spp * n) || !(spp > 0))
    throw DegenerateFit("static fit normal matrix is singular on the disc");
  const double c = (n * spv - sp * sv) / det;
  const double d = (spp * sv - sp * spv) / det;
  if (c == 0) throw DegenerateFit("disc carries no s^2 - z^2 component");
  QuadrupoleFit fit;
  fit.model = "static";
  fit.coefficient = c;
  fit.offset = d;
  fit.orientation = c > 0 ? +1 : -1;  // model as written has c = +U_eff/ell^2
  fit.ell = std::sqrt(reference_voltage / std::abs(c));
  fit.center_r = region.center_r;
  fit.radius = region.radius;
  fit.reference_voltage = reference_voltage;
  double acc = 0;
  for (std::size_t k = 0; k < cells.s.size(); ++k) {
    const double psi = cells.s[k] * cells.s[k] - cells.z[k] * cells.z[k];
    const double res = c * psi + d - cells.v[k];
    acc += res * res;
  }
  fit.chi2 = acc * cells.h * cells.h;
  return fit;
}

double chi2(const ScalarField& field, const FitRegion& region,
            const std::function<double(double, double)>& model) {
  const DiscCells cells = collect(field, region);
  double acc = 0;
  for (std::size_t k = 0; k < cells.s.size(); ++k) {
    const double res = model(cells.s[k], cells.z[k]) - cells.v[k];
    acc += res * res;
  }
  return acc * cells.h * cells.h;
}

}  // namespace halo
