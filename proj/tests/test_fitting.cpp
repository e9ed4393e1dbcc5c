#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "halo/errors.hpp"
#include "halo/fitting.hpp"

using namespace halo;

namespace {

constexpr double um = 1e-6;

GridSpec test_grid() {
  // h = 5 um, node line exactly on z = 0
  return GridSpec::regular(0.0, 1e-3, -0.5e-3, 0.5e-3, 200);
}

ScalarField synthetic(const GridSpec& g,
                      const std::function<double(double, double)>& f) {
  ScalarField field{g, std::vector<double>(g.size(), 0.0), {}, {}};
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_z; ++j) field.at(i, j) = f(g.r(i), g.z(j));
  return field;
}

}  // namespace

TEST_CASE("rf fit recovers a planted saddle length scale") {
  const GridSpec g = test_grid();
  const double R = 500 * um, L = 400 * um, V0 = 1.0;
  const ScalarField f = synthetic(g, [&](double r, double z) {
    return -2.0 * V0 * (r - R) * z / (L * L);
  });
  const QuadrupoleFit fit = fit_rf(f, {R, 50 * um}, V0);
  CHECK(fit.model == "rf");
  CHECK(fit.ell == doctest::Approx(L).epsilon(1e-9));
  CHECK(fit.orientation == 1);
  CHECK(fit.chi2 <= 1e-18);
  CHECK(fit.center_r == R);
  CHECK(fit.radius == 50 * um);
  CHECK(fit.reference_voltage == V0);

  SUBCASE("sign flip is reported as orientation, not a different length") {
    ScalarField flipped = f;
    for (double& v : flipped.values) v = -v;
    const QuadrupoleFit ffit = fit_rf(flipped, {R, 50 * um}, V0);
    CHECK(ffit.ell == doctest::Approx(L).epsilon(1e-9));
    CHECK(ffit.orientation == -1);
  }

  SUBCASE("length is independent of the disc radius on an exact quadrupole") {
    const QuadrupoleFit small = fit_rf(f, {R, 25 * um}, V0);
    CHECK(small.ell == doctest::Approx(L).epsilon(1e-9));
  }

  SUBCASE("doubling field and reference voltage together preserves ell") {
    ScalarField twice = f;
    for (double& v : twice.values) v *= 2.0;
    const QuadrupoleFit tfit = fit_rf(twice, {R, 50 * um}, 2.0);
    CHECK(tfit.ell == doctest::Approx(L).epsilon(1e-9));
  }
}

TEST_CASE("static fit recovers curvature and offset") {
  const GridSpec g = test_grid();
  const double R = 450 * um, L = 300 * um, d = 0.25;
  const ScalarField f = synthetic(g, [&](double r, double z) {
    const double s = r - R;
    return (s * s - z * z) / (L * L) + d;
  });
  const QuadrupoleFit fit = fit_static(f, {R, 50 * um}, 1.0);
  CHECK(fit.model == "static");
  CHECK(fit.ell == doctest::Approx(L).epsilon(1e-9));
  CHECK(fit.orientation == 1);
  CHECK(fit.offset == doctest::Approx(d).epsilon(1e-9));
  CHECK(fit.chi2 <= 1e-18);

  SUBCASE("flipped curvature") {
    ScalarField flipped = synthetic(g, [&](double r, double z) {
      const double s = r - R;
      return -(s * s - z * z) / (L * L) + d;
    });
    const QuadrupoleFit ffit = fit_static(flipped, {R, 50 * um}, 1.0);
    CHECK(ffit.ell == doctest::Approx(L).epsilon(1e-9));
    CHECK(ffit.orientation == -1);
    CHECK(ffit.offset == doctest::Approx(d).epsilon(1e-9));
  }

  SUBCASE("offset does not leak into the curvature") {
    ScalarField shifted = f;
    for (double& v : shifted.values) v += 3.0;
    const QuadrupoleFit sfit = fit_static(shifted, {R, 50 * um}, 1.0);
    CHECK(sfit.ell == doctest::Approx(L).epsilon(1e-9));
    CHECK(sfit.offset == doctest::Approx(d + 3.0).epsilon(1e-9));
  }
}

TEST_CASE("chi2 of the fitted model equals the reported chi2") {
  const GridSpec g = test_grid();
  const double R = 500 * um, L = 400 * um;
  // exact quadrupole plus a cubic contamination the model cannot express
  const ScalarField f = synthetic(g, [&](double r, double z) {
    const double s = r - R;
    return -2.0 * s * z / (L * L) + 5e6 * s * s * z;
  });
  const FitRegion region{R, 50 * um};
  const QuadrupoleFit fit = fit_rf(f, region, 1.0);
  CHECK(fit.chi2 > 0);
  const double recomputed = chi2(f, region, [&](double s, double z) {
    return fit.orientation * -2.0 * fit.reference_voltage * s * z /
           (fit.ell * fit.ell);
  });
  CHECK(recomputed == doctest::Approx(fit.chi2).epsilon(1e-9));
  // the fit minimizes chi2: any other curvature must do worse
  const double worse = chi2(f, region, [&](double s, double z) {
    return -2.0 * 1.1 * s * z / (L * L);
  });
  CHECK(worse > fit.chi2);
  // chi2 against an exact model is numerically zero
  const ScalarField pure = synthetic(g, [&](double r, double z) {
    return -2.0 * (r - R) * z / (L * L);
  });
  CHECK(chi2(pure, region, [&](double s, double z) {
          return -2.0 * s * z / (L * L);
        }) <= 1e-18);
}

TEST_CASE("trap center location on a planted node") {
  const GridSpec g = test_grid();
  const double R = 473.3 * um, L = 400 * um;  // deliberately between nodes
  const ScalarField f = synthetic(g, [&](double r, double z) {
    return -2.0 * (r - R) * z / (L * L);
  });
  const double found = locate_trap_center(f);
  CHECK(found == doctest::Approx(R).epsilon(1e-6));

  SUBCASE("location is invariant under drive amplitude") {
    ScalarField scaled = f;
    for (double& v : scaled.values) v *= 7.5;
    CHECK(locate_trap_center(scaled) == doctest::Approx(found).epsilon(1e-12));
  }

  SUBCASE("node quality is tiny on an exact node") {
    CHECK(node_quality(f, found, 100 * um) <= 1e-6);
  }
}

TEST_CASE("monotone field has no interior node") {
  // |grad V| grows strictly with r, so no interior minimum exists (a field
  // with *constant* slope would expose rounding noise as spurious minima)
  const GridSpec g = test_grid();
  const ScalarField f =
      synthetic(g, [&](double r, double) { return 100.0 * r * r; });
  CHECK_THROWS_AS(locate_trap_center(f), NoNodeFound);
}

TEST_CASE("fit region error handling") {
  const GridSpec g = test_grid();
  const ScalarField f =
      synthetic(g, [&](double r, double z) { return r * z; });

  SUBCASE("disc leaving the grid") {
    CHECK_THROWS_AS(fit_rf(f, {0.99e-3, 50 * um}, 1.0), OutOfDomain);
    CHECK_THROWS_AS(fit_rf(f, {20 * um, 50 * um}, 1.0), OutOfDomain);
  }
  SUBCASE("disc touching a conductor") {
    ScalarField with_metal = f;
    with_metal.conductor.assign(g.size(), int8_t(-1));
    with_metal.conductor[g.idx(100, 100)] = 0;  // one metal cell at ~(500, 0)
    CHECK_THROWS_AS(fit_rf(with_metal, {500 * um, 50 * um}, 1.0), OutOfDomain);
  }
  SUBCASE("disc containing no node") {
    // radius much smaller than the spacing, centered between node lines
    CHECK_THROWS_AS(fit_rf(f, {502.5 * um, 1e-9}, 1.0), EmptyRegion);
  }
  SUBCASE("single on-axis-of-symmetry sample cannot fix the rf curvature") {
    // only the center node is inside: s z = 0 identically
    CHECK_THROWS_AS(fit_rf(f, {500 * um, 4 * um}, 1.0), DegenerateFit);
  }
  SUBCASE("zero field has no length scale") {
    const ScalarField zero = synthetic(g, [](double, double) { return 0.0; });
    CHECK_THROWS_AS(fit_rf(zero, {500 * um, 50 * um}, 1.0), DegenerateFit);
  }
}

TEST_CASE("gradient and interpolation are exact on low-order fields") {
  const GridSpec g = test_grid();

  SUBCASE("linear field") {
    const ScalarField f = synthetic(
        g, [](double r, double z) { return 3.0 * r + 5.0 * z + 7.0; });
    for (double r : {100 * um, 333 * um, 801 * um})
      for (double z : {-400 * um, -11 * um, 0.0, 250 * um}) {
        const GradientRZ grad = gradient(f, r, z);
        CHECK(grad.d_dr == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(grad.d_dz == doctest::Approx(5.0).epsilon(1e-10));
        CHECK(value_at(f, r, z) ==
              doctest::Approx(3.0 * r + 5.0 * z + 7.0).epsilon(1e-12));
      }
  }
  SUBCASE("quadratic field: central differences stay exact") {
    const ScalarField f =
        synthetic(g, [](double r, double z) { return r * r - z * z; });
    const GradientRZ grad = gradient(f, 400 * um, 120 * um);
    CHECK(grad.d_dr == doctest::Approx(2.0 * 400 * um).epsilon(1e-9));
    CHECK(grad.d_dz == doctest::Approx(-2.0 * 120 * um).epsilon(1e-9));
  }
  SUBCASE("edge handling: low edge throws, high edge clamps the stencil") {
    const ScalarField f = synthetic(g, [](double r, double) { return r; });
    CHECK_THROWS_AS(gradient(f, 2e-6, 0.0), OutOfDomain);   // inside cell 0
    CHECK_THROWS_AS(gradient(f, 2e-3, 0.0), OutOfDomain);   // outside grid
    CHECK(gradient(f, 0.9999e-3, 0.0).d_dr ==
          doctest::Approx(1.0).epsilon(1e-10));  // clamped but exact
  }
}
