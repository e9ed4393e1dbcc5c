#include "halo/crystal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "halo/constants.hpp"
#include "halo/errors.hpp"

namespace halo {

double r_star(const IonSpecies& species, double omega_r) {
  species.validate();
  if (!(omega_r > 0) || !std::isfinite(omega_r))
    throw ConfigError("radial secular frequency must be positive");
  const double q = species.charge_C();
  const double m = species.mass_kg();
  return std::cbrt(coulomb_constant * q * q * 2.0 / (m * omega_r * omega_r));
}

double e_star(const IonSpecies& species, double omega_r) {
  const double rs = r_star(species, omega_r);
  return 0.5 * species.mass_kg() * omega_r * omega_r * rs * rs;
}

double scaled_hamiltonian(double x, double z, const ScaledTrap& trap) {
  const double d = std::hypot(x, z);
  if (d == 0.0) throw Singularity("two-ion energy diverges at the origin");
  const double ring = std::abs(x) - trap.r0;
  return 0.5 / d + 2.0 * trap.alpha * z * z + 2.0 * ring * ring;
}

std::array<double, 2> hamiltonian_gradient(double x, double z,
                                           const ScaledTrap& trap) {
  const double d = std::hypot(x, z);
  if (d == 0.0) throw Singularity("two-ion energy diverges at the origin");
  const double d3 = d * d * d;
  const double sx = x < 0 ? -1.0 : 1.0;
  return {-x / (2.0 * d3) + 4.0 * (std::abs(x) - trap.r0) * sx,
          -z / (2.0 * d3) + 4.0 * trap.alpha * z};
}

namespace {

void check_trap(const ScaledTrap& t) {
  if (!std::isfinite(t.alpha) || !std::isfinite(t.r0) || t.alpha <= 0 ||
      t.r0 < 0)
    throw InvalidTrap("scaled trap requires alpha > 0 and r0 >= 0");
}

struct Hessian2 {
  double xx = 0, xz = 0, zz = 0;
};

// Second derivatives of H on the x > 0 half plane.
Hessian2 hessian(double x, double z, const ScaledTrap& t) {
  const double d2 = x * x + z * z;
  const double d = std::sqrt(d2);
  const double d3 = d2 * d;
  const double d5 = d3 * d2;
  Hessian2 h;
  h.xx = -0.5 / d3 + 1.5 * x * x / d5 + 4.0;
  h.zz = -0.5 / d3 + 1.5 * z * z / d5 + 4.0 * t.alpha;
  h.xz = 1.5 * x * z / d5;
  return h;
}

double gradient_norm(double x, double z, const ScaledTrap& t) {
  const auto g = hamiltonian_gradient(x, z, t);
  return std::hypot(g[0], g[1]);
}

bool locally_stable(const Hessian2& h) {
  const double tr = h.xx + h.zz;
  const double det = h.xx * h.zz - h.xz * h.xz;
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  const double eig_min = 0.5 * (tr - disc);
  const double scale =
      std::max({std::abs(h.xx), std::abs(h.zz), std::abs(h.xz), 1.0});
  return eig_min >= -1e-8 * scale;
}

// Damped Newton descent on the gradient, folded onto x >= 0, z >= 0.
void polish(double& x, double& z, const ScaledTrap& t) {
  x = std::abs(x);
  z = std::abs(z);
  for (int it = 0; it < 300; ++it) {
    const auto g = hamiltonian_gradient(x, z, t);
    const double gn = std::hypot(g[0], g[1]);
    if (gn <= 1e-12) break;
    const Hessian2 h = hessian(x, z, t);
    const double det = h.xx * h.zz - h.xz * h.xz;
    const bool pd = det > 0 && h.xx > 0;
    double sx, sz;
    if (pd) {
      sx = -(h.zz * g[0] - h.xz * g[1]) / det;
      sz = -(h.xx * g[1] - h.xz * g[0]) / det;
    } else {
      const double scale = std::max({std::abs(h.xx), std::abs(h.zz), 4.0});
      sx = -g[0] / scale;
      sz = -g[1] / scale;
    }
    if (pd && gn < 1e-6) {  // quadratic basin: full Newton step
      x = std::abs(x + sx);
      z = std::abs(z + sz);
      continue;
    }
    const double e0 = scaled_hamiltonian(x, z, t);
    double step = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 50 && !moved; ++bt, step *= 0.5) {
      const double nx = std::abs(x + step * sx);
      const double nz = std::abs(z + step * sz);
      if (nx == 0.0 && nz == 0.0) continue;
      if (scaled_hamiltonian(nx, nz, t) <= e0) {
        x = nx;
        z = nz;
        moved = true;
      }
    }
    if (!moved) break;  // at the numerical floor
  }
}

// Nelder-Mead simplex descent in (x, z); H is even in both coordinates, so
// negative excursions fold back harmlessly.
void simplex_descent(double& x, double& z, const ScaledTrap& t) {
  auto eval = [&](const std::array<double, 2>& p) {
    const double ax = std::abs(p[0]);
    const double az = std::abs(p[1]);
    if (ax * ax + az * az < 1e-24)
      return std::numeric_limits<double>::infinity();
    return scaled_hamiltonian(ax, az, t);
  };
  std::array<std::array<double, 2>, 3> v = {{{x, z},
                                             {x + 0.1 * std::max(x, 0.1), z},
                                             {x, z + 0.1 * std::max(z, 0.1)}}};
  std::array<double, 3> f = {eval(v[0]), eval(v[1]), eval(v[2])};
  for (int it = 0; it < 400; ++it) {
    // order vertices best..worst
    std::array<int, 3> ord = {0, 1, 2};
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return f[a] < f[b]; });
    const auto vb = v[ord[0]];
    const auto vm = v[ord[1]];
    const auto vw = v[ord[2]];
    const double spread = std::max(std::abs(f[ord[2]] - f[ord[0]]),
                                   std::hypot(vw[0] - vb[0], vw[1] - vb[1]));
    if (spread < 1e-13) break;
    const std::array<double, 2> c = {0.5 * (vb[0] + vm[0]),
                                     0.5 * (vb[1] + vm[1])};
    auto blend = [&](double s) {
      return std::array<double, 2>{c[0] + s * (c[0] - vw[0]),
                                   c[1] + s * (c[1] - vw[1])};
    };
    const auto vr = blend(1.0);
    const double fr = eval(vr);
    if (fr < f[ord[0]]) {
      const auto ve = blend(2.0);
      const double fe = eval(ve);
      v[ord[2]] = fe < fr ? ve : vr;
      f[ord[2]] = std::min(fe, fr);
    } else if (fr < f[ord[1]]) {
      v[ord[2]] = vr;
      f[ord[2]] = fr;
    } else {
      const auto vc = blend(-0.5);
      const double fc = eval(vc);
      if (fc < f[ord[2]]) {
        v[ord[2]] = vc;
        f[ord[2]] = fc;
      } else {  // shrink toward the best vertex
        for (int k = 1; k < 3; ++k) {
          v[ord[k]] = {0.5 * (v[ord[k]][0] + vb[0]),
                       0.5 * (v[ord[k]][1] + vb[1])};
          f[ord[k]] = eval(v[ord[k]]);
        }
      }
    }
  }
  int best = 0;
  if (f[1] < f[best]) best = 1;
  if (f[2] < f[best]) best = 2;
  x = std::abs(v[best][0]);
  z = std::abs(v[best][1]);
}

PhaseState make_state(double x, double z, const ScaledTrap& trap,
                      CrystalPhase phase) {
  PhaseState s;
  s.trap = trap;
  s.x = x;
  s.z = z;
  s.phase = phase;
  s.energy = scaled_hamiltonian(x, z, trap);
  return s;
}

}  // namespace

double in_plane_x(double r0) {
  if (!std::isfinite(r0) || r0 < 0)
    throw InvalidTrap("ring radius r0 must be non-negative");
  // Unique real root > r0 of the in-plane stationarity cubic
  //   8x^3 - 8 r0 x^2 - 1 = 0,
  // via a Cardano form rationalized to avoid the cancellation (and the 0/0
  // at r0 = 0) of the textbook conjugate cube-root expression.
  const double disc = std::sqrt(r0 * r0 * r0 / 216.0 + 1.0 / 256.0);
  const double t = std::cbrt(r0 * r0 * r0 / 27.0 + 1.0 / 16.0 + disc);
  double x = r0 / 3.0 + t + r0 * r0 / (9.0 * t);
  auto f = [r0](double v) { return 8.0 * v * v * v - 8.0 * r0 * v * v - 1.0; };
  for (int it = 0; it < 4; ++it) {  // Newton cleanup of the closed form
    const double fp = 24.0 * x * x - 16.0 * r0 * x;
    if (fp <= 0) break;
    const double nx = x - f(x) / fp;
    if (!(nx > 2.0 * r0 / 3.0)) break;  // keep right of the derivative root
    x = nx;
  }
  if (!(x > r0) ||
      !(std::abs(f(x)) <= 1e-9 * std::max(1.0, 8.0 * x * x * x))) {
    // bisection fallback; f(r0) = -1 < 0 and f -> +inf
    double lo = std::max(r0, 0.25);
    while (f(lo) > 0) lo *= 0.5;
    double hi = std::max(2.0 * r0, 1.0);
    while (f(hi) < 0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0 ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
  }
  return x;
}

double phase_boundary(double alpha) {
  if (!std::isfinite(alpha) || alpha <= 0)
    throw InvalidTrap("trap aspect ratio alpha must be positive");
  return std::abs(alpha - 1.0) / (2.0 * std::cbrt(alpha));
}

PhaseState equilibrium(const ScaledTrap& trap) {
  check_trap(trap);
  if (!(trap.r0 > 0))
    throw InvalidTrap("two-ion equilibrium requires r0 > 0");

  double x = in_plane_x(trap.r0);
  double z = 0.0;
  double energy = scaled_hamiltonian(x, z, trap);
  CrystalPhase phase = CrystalPhase::in_plane;

  if (trap.alpha < 1.0) {
    // Tilted branch: stationarity pins the distance from the trap center,
    // x^2 + z^2 = (8 alpha)^(-2/3), and x = r0/(1 - alpha). It exists only
    // below the critical ring radius; select by energy comparison.
    const double xo = trap.r0 / (1.0 - trap.alpha);
    const double d2 = std::pow(8.0 * trap.alpha, -2.0 / 3.0);
    const double z2 = d2 - xo * xo;
    if (z2 > 0.0) {
      const double zo = std::sqrt(z2);
      const double eo = scaled_hamiltonian(xo, zo, trap);
      if (eo < energy) {
        x = xo;
        z = zo;
        energy = eo;
        phase = CrystalPhase::off_plane;
      }
    }
  }

  if (gradient_norm(x, z, trap) > 1e-10) {
    polish(x, z, trap);
    if (gradient_norm(x, z, trap) > 1e-10)
      throw Unstable("equilibrium branch failed the stationarity check");
  }
  if (!locally_stable(hessian(x, z, trap)))
    throw Unstable("selected equilibrium branch is not a local minimum");
  return make_state(x, z, trap, phase);
}

PhaseState brute_force_minimum(const ScaledTrap& trap) {
  check_trap(trap);
  const double x_hi = trap.r0 + 3.0;
  const double z_hi = 3.0;
  const int nx = 181, nz = 121;
  double bx = x_hi, bz = 0.0;
  double be = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= nx; ++i) {
    const double x = x_hi * i / nx;
    for (int j = 0; j < nz; ++j) {
      const double z = z_hi * j / (nz - 1);
      const double e = scaled_hamiltonian(x, z, trap);
      if (e < be) {
        be = e;
        bx = x;
        bz = z;
      }
    }
  }
  simplex_descent(bx, bz, trap);
  polish(bx, bz, trap);
  if (gradient_norm(bx, bz, trap) > 1e-10)
    throw Unstable("brute-force descent failed the stationarity check");
  if (bz <= 1e-8) {  // canonicalize: in-plane states carry z = 0 exactly
    bz = 0.0;
    polish(bx, bz, trap);
  }
  return make_state(bx, bz, trap,
                    bz > 0 ? CrystalPhase::off_plane : CrystalPhase::in_plane);
}

std::vector<PhaseCell> phase_map(double alpha_min, double alpha_max,
                                 double r0_min, double r0_max,
                                 int resolution) {
  if (!(alpha_min > 0) || !(r0_min > 0) || !(alpha_max >= alpha_min) ||
      !(r0_max >= r0_min))
    throw ConfigError("phase map ranges must be positive and ordered");
  if (resolution < 1) throw ConfigError("phase map resolution must be >= 1");

  std::vector<PhaseCell> cells;
  cells.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i) {
    const double a = resolution == 1 ? alpha_min
                                     : alpha_min + (alpha_max - alpha_min) * i /
                                                       (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      const double r = resolution == 1
                           ? r0_min
                           : r0_min + (r0_max - r0_min) * j / (resolution - 1);
      PhaseCell c;
      c.state = equilibrium({a, r});
      // Literal reading of the in-plane validity condition (a conjunction);
      // disagreements with the energy-based label are flagged, not fatal.
      c.boundary_rule_in_plane = r > phase_boundary(a) && a > 1.0;
      c.disagrees =
          c.boundary_rule_in_plane != (c.state.phase == CrystalPhase::in_plane);
      cells.push_back(c);
    }
  }
  return cells;
}

double n_ion_energy(const std::vector<std::array<double, 3>>& positions,
                    const ScaledTrap& trap) {
  check_trap(trap);
  if (positions.empty())
    throw ConfigError("ion ring must contain at least one ion");
  for (const auto& p : positions)
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
      throw ConfigError("ion coordinates must be finite");

  double energy = 0.0;
  const std::size_t n = positions.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = positions[i];
    const double ring = std::hypot(a[0], a[1]) - trap.r0;
    energy += ring * ring + trap.alpha * a[2] * a[2];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = positions[j];
      const double d = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) +
                                 (a[1] - b[1]) * (a[1] - b[1]) +
                                 (a[2] - b[2]) * (a[2] - b[2]));
      if (d == 0.0) throw CoincidentIons("two ions share the same position");
      energy += 1.0 / d;
    }
  }
  return energy;
}

}  // namespace halo
