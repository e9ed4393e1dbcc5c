#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "halo/crystal.hpp"
#include "halo/errors.hpp"

using namespace halo;

namespace {

constexpr double qe = 1.602176634e-19;
constexpr double amu = 1.66053906660e-27;
constexpr double k_e = 8.9875517923e9;  // 1/(4 pi eps0)

double bisect_in_plane(double r0) {
  auto f = [&](double x) { return 8 * x * x * x - 8 * r0 * x * x - 1.0; };
  double lo = r0, hi = std::max(2.0 * r0, 1.0);
  while (f(hi) < 0) hi *= 2.0;
  for (int k = 0; k < 300 && (hi - lo) > 1e-17 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("natural length and energy scales") {
  auto omega = [](double f_hz) { return 2 * M_PI * f_hz; };

  SUBCASE("definition") {
    const IonSpecies mg{"Mg-24", 24.0, 1.0};
    const double w = omega(2000.0);
    const double expect =
        std::cbrt(k_e * qe * qe * 2.0 / (24.0 * amu * w * w));
    CHECK(r_star(mg, w) == doctest::Approx(expect).epsilon(1e-9));
    // identity: Coulomb energy at separation r* equals E*
    CHECK(e_star(mg, w) ==
          doctest::Approx(k_e * qe * qe / r_star(mg, w)).epsilon(1e-12));
  }
  SUBCASE("hundreds-of-micron rings across very different species") {
    CHECK(r_star({"Mg-24", 24, 1}, omega(2000)) ==
          doctest::Approx(418.8e-6).epsilon(5e-3));
    CHECK(r_star({"Ca-40", 40, 1}, omega(1500)) ==
          doctest::Approx(427.7e-6).epsilon(5e-3));
    CHECK(r_star({"Yb-171", 171, 1}, omega(800)) ==
          doctest::Approx(400.7e-6).epsilon(5e-3));
    // 300 nm polystyrene sphere, 1050 kg/m^3, about 1000 elementary charges
    const double mass_kg = 1050.0 * (4.0 / 3.0) * M_PI * std::pow(150e-9, 3);
    const IonSpecies bead{"bead", mass_kg / amu, 1.6e-16 / qe};
    CHECK(r_star(bead, omega(100)) == doctest::Approx(428.3e-6).epsilon(5e-3));
  }
  SUBCASE("rejects nonsense") {
    CHECK_THROWS_AS(r_star({"x", 24, 1}, 0.0), ConfigError);
    CHECK_THROWS_AS(r_star({"x", -1, 1}, omega(100)), ConfigError);
  }
}

TEST_CASE("scaled two-ion energy and its gradient") {
  const ScaledTrap t{0.7, 0.9};

  SUBCASE("value") {
    const double x = 0.8, z = 0.3;
    const double d = std::hypot(x, z);
    const double expect = 0.5 / d + 2 * t.alpha * z * z +
                          2 * (std::abs(x) - t.r0) * (std::abs(x) - t.r0);
    CHECK(scaled_hamiltonian(x, z, t) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(scaled_hamiltonian(-x, z, t) ==
          doctest::Approx(expect).epsilon(1e-14));  // even in x
    CHECK(scaled_hamiltonian(x, -z, t) ==
          doctest::Approx(expect).epsilon(1e-14));  // even in z
  }
  SUBCASE("gradient matches central differences") {
    const double h = 1e-6;
    for (auto [x, z] : {std::pair{0.7, 0.3}, std::pair{1.2, 0.01},
                        std::pair{-0.8, 0.2}, std::pair{0.4, -0.5}}) {
      const auto g = hamiltonian_gradient(x, z, t);
      const double fdx = (scaled_hamiltonian(x + h, z, t) -
                          scaled_hamiltonian(x - h, z, t)) /
                         (2 * h);
      const double fdz = (scaled_hamiltonian(x, z + h, t) -
                          scaled_hamiltonian(x, z - h, t)) /
                         (2 * h);
      CHECK(g[0] == doctest::Approx(fdx).epsilon(1e-6));
      CHECK(g[1] == doctest::Approx(fdz).epsilon(1e-6));
    }
  }
  SUBCASE("coincident ions diverge") {
    CHECK_THROWS_AS(scaled_hamiltonian(0, 0, t), Singularity);
    CHECK_THROWS_AS(hamiltonian_gradient(0, 0, t), Singularity);
  }
}

TEST_CASE("in-plane separation solves the stationarity cubic") {
  CHECK(in_plane_x(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(in_plane_x(1.0) == doctest::Approx(1.10278).epsilon(1e-4));

  for (double r0 : {0.0, 1e-4, 0.05, 0.315, 1.0, 3.7, 12.0, 250.0, 1e4}) {
    const double x = in_plane_x(r0);
    CHECK(x > r0);
    const double res = 8 * x * x * x - 8 * r0 * x * x - 1.0;
    CHECK(std::abs(res) <= 1e-9 * std::max(1.0, 8 * x * x * x));
    CHECK(x == doctest::Approx(bisect_in_plane(r0)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(in_plane_x(-0.1), InvalidTrap);
}

TEST_CASE("phase boundary radius") {
  // |alpha - 1| / (2 alpha^(1/3))
  CHECK(phase_boundary(0.5) == doctest::Approx(0.31498).epsilon(1e-4));
  CHECK(phase_boundary(4.0) == doctest::Approx(0.94494).epsilon(1e-4));
  CHECK(phase_boundary(1.0) == 0.0);
  CHECK_THROWS_AS(phase_boundary(0.0), InvalidTrap);
  CHECK_THROWS_AS(phase_boundary(-2.0), InvalidTrap);
}

TEST_CASE("off-plane branch satisfies its closed-form relations") {
  const double alpha = 0.5, r0 = 0.2;  // well below the critical radius
  const PhaseState s = equilibrium({alpha, r0});
  CHECK(s.phase == CrystalPhase::off_plane);
  CHECK(s.x == doctest::Approx(r0 / (1.0 - alpha)).epsilon(1e-10));
  CHECK(s.x * s.x + s.z * s.z ==
        doctest::Approx(std::pow(8.0 * alpha, -2.0 / 3.0)).epsilon(1e-10));
  CHECK(s.z > 0);
  CHECK(s.energy ==
        doctest::Approx(scaled_hamiltonian(s.x, s.z, s.trap)).epsilon(1e-14));

  SUBCASE("it is a genuine stationary point") {
    const auto g = hamiltonian_gradient(s.x, s.z, s.trap);
    CHECK(std::abs(g[0]) <= 1e-9);
    CHECK(std::abs(g[1]) <= 1e-9);
  }
}

TEST_CASE("in-plane equilibrium is alpha-independent") {
  for (double r0 : {0.5, 1.0, 2.0}) {
    const PhaseState a = equilibrium({1.5, r0});
    const PhaseState b = equilibrium({4.0, r0});
    CHECK(a.phase == CrystalPhase::in_plane);
    CHECK(b.phase == CrystalPhase::in_plane);
    CHECK(a.x == doctest::Approx(in_plane_x(r0)).epsilon(1e-12));
    CHECK(b.x == doctest::Approx(a.x).epsilon(1e-12));
    CHECK(a.z == 0.0);
  }
  // oblate trap below the critical radius still sits in plane: the tilted
  // branch does not exist for alpha > 1 no matter how small the ring is
  const PhaseState s = equilibrium({4.0, 0.3});
  CHECK(s.phase == CrystalPhase::in_plane);
  CHECK(s.z == 0.0);
}

TEST_CASE("energy is continuous and z vanishes at the boundary") {
  const double alpha = 0.5;
  const double rc = phase_boundary(alpha);
  const double delta = 1e-7;
  const PhaseState below = equilibrium({alpha, rc - delta});
  const PhaseState above = equilibrium({alpha, rc + delta});
  CHECK(below.phase == CrystalPhase::off_plane);
  CHECK(above.phase == CrystalPhase::in_plane);
  CHECK(std::abs(below.energy - above.energy) <= 1e-5);
  CHECK(below.z <= 1e-3);
  CHECK(below.z > 0);
}

TEST_CASE("closed-form equilibrium agrees with brute-force descent") {
  for (double alpha : {0.3, 0.5, 0.9, 0.98, 1.5, 4.0})
    for (double r0 : {0.05, 0.2, 0.31, 0.5, 1.0, 2.0}) {
      const PhaseState a = equilibrium({alpha, r0});
      const PhaseState b = brute_force_minimum({alpha, r0});
      CAPTURE(alpha);
      CAPTURE(r0);
      CHECK(a.phase == b.phase);
      CHECK(a.x == doctest::Approx(b.x).epsilon(1e-6));
      CHECK(std::abs(a.z - b.z) <= 1e-6);
      CHECK(a.energy == doctest::Approx(b.energy).epsilon(1e-10));
    }
}

TEST_CASE("equilibria are certified local minima") {
  for (double alpha : {0.4, 0.8, 1.3, 3.0})
    for (double r0 : {0.1, 0.4, 1.1}) {
      const PhaseState s = equilibrium({alpha, r0});
      const auto g = hamiltonian_gradient(s.x, s.z > 0 ? s.z : 0.0, s.trap);
      CHECK(std::hypot(g[0], g[1]) <= 1e-9);
      // finite-difference Hessian must be positive semidefinite
      const double h = 1e-5;
      auto gx = [&](double x, double z) {
        return hamiltonian_gradient(x, z, s.trap);
      };
      const double hxx = (gx(s.x + h, s.z)[0] - gx(s.x - h, s.z)[0]) / (2 * h);
      const double hzz = (gx(s.x, s.z + h)[1] - gx(s.x, s.z - h)[1]) / (2 * h);
      const double hxz = (gx(s.x + h, s.z)[1] - gx(s.x - h, s.z)[1]) / (2 * h);
      const double tr = hxx + hzz;
      const double det = hxx * hzz - hxz * hxz;
      const double eig_min = 0.5 * (tr - std::sqrt(tr * tr - 4 * det));
      CHECK(eig_min >= -1e-5 * std::max(1.0, std::abs(tr)));
    }
}

TEST_CASE("phase map flags the literal-rule mismatch region") {
  const auto cells = phase_map(0.25, 4.0, 0.05, 1.2, 20);
  REQUIRE(cells.size() == 400);
  int flagged = 0;
  for (const PhaseCell& c : cells) {
    const double a = c.state.trap.alpha, r = c.state.trap.r0;
    // energy-based label must match the closed-form branch selection
    const bool off_exists =
        a < 1.0 && r < phase_boundary(a);
    CHECK((c.state.phase == CrystalPhase::off_plane) == off_exists);
    // flag bookkeeping is self-consistent
    CHECK(c.boundary_rule_in_plane == (r > phase_boundary(a) && a > 1.0));
    CHECK(c.disagrees == (c.boundary_rule_in_plane !=
                          (c.state.phase == CrystalPhase::in_plane)));
    if (c.disagrees) ++flagged;
  }
  // the conjunction misses prolate traps on wide rings (alpha < 1,
  // r0 > critical) and oblate traps on narrow rings (alpha > 1,
  // r0 < critical): both regions are present in this window
  CHECK(flagged > 0);

  CHECK_THROWS_AS(phase_map(0.5, 4.0, 0.1, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(phase_map(-1.0, 4.0, 0.1, 1.0, 5), ConfigError);
  CHECK_THROWS_AS(phase_map(0.5, 0.4, 0.1, 1.0, 5), ConfigError);
}

TEST_CASE("n-ion ring energy") {
  const ScaledTrap t{2.3, 1.0};

  SUBCASE("two diametric ions reduce to the two-ion Hamiltonian") {
    for (auto [x, z] : {std::pair{0.8, 0.3}, std::pair{1.1, 0.0},
                        std::pair{0.3, 0.9}}) {
      const double direct = scaled_hamiltonian(x, z, t);
      const double n2 = n_ion_energy({{x, 0, z}, {-x, 0, -z}}, t);
      CHECK(n2 == doctest::Approx(direct).epsilon(1e-14));
      // rotating the pair around the trap axis changes nothing
      const double c = std::cos(0.77), s = std::sin(0.77);
      const double rot = n_ion_energy(
          {{x * c, x * s, z}, {-x * c, -x * s, -z}}, t);
      CHECK(rot == doctest::Approx(direct).epsilon(1e-13));
    }
  }
  SUBCASE("square of four ions on the unit ring") {
    const double e = n_ion_energy(
        {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}}, t);
    CHECK(e == doctest::Approx(1.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(n_ion_energy({{1, 0, 0}, {1, 0, 0}}, t), CoincidentIons);
    CHECK_THROWS_AS(n_ion_energy({}, t), ConfigError);
    CHECK_THROWS_AS(n_ion_energy({{1, 0, 0}}, ScaledTrap{-1.0, 1.0}),
                    InvalidTrap);
  }
}

TEST_CASE("trap parameter validation") {
  CHECK_THROWS_AS(equilibrium({0.5, 0.0}), InvalidTrap);
  CHECK_THROWS_AS(equilibrium({0.5, -1.0}), InvalidTrap);
  CHECK_THROWS_AS(equilibrium({-0.5, 1.0}), InvalidTrap);
  CHECK_THROWS_AS(brute_force_minimum({0.0, 1.0}), InvalidTrap);
}
