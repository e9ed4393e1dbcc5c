#pragma once

#include <algorithm>
#include <vector>

#include "halo/grid.hpp"

// Internal helpers shared by the fitting and pseudopotential row scans.
namespace halo::detail {

// Squared gradient magnitude at a node, central differences.
inline double grad2_at(const ScalarField& f, int i, int j) {
  const double inv2h = 1.0 / (2.0 * f.grid.h);
  const double gr = (f.at(i + 1, j) - f.at(i - 1, j)) * inv2h;
  const double gz = (f.at(i, j + 1) - f.at(i, j - 1)) * inv2h;
  return gr * gr + gz * gz;
}

inline bool stencil_vacuum(const ScalarField& f, int i, int j) {
  return f.is_vacuum(i, j) && f.is_vacuum(i - 1, j) && f.is_vacuum(i + 1, j) &&
         f.is_vacuum(i, j - 1) && f.is_vacuum(i, j + 1);
}

struct RowMinimum {
  int index = -1;
  double refined_x = 0;
  double refined_value = 0;
};

// Vertex of the parabola through three equally spaced samples (a, b, c)
// around index m; dx is the sample spacing.
inline void parabolic_refine(double a, double b, double c, double x_m,
                             double dx, double& x_out, double& v_out) {
  const double denom = a - 2.0 * b + c;
  if (denom > 0 || denom < 0) {
    const double delta = 0.5 * (a - c) / denom;
    x_out = x_m + delta * dx;
    v_out = b - 0.125 * (a - c) * (a - c) / denom;
  } else {
    x_out = x_m;
    v_out = b;
  }
}

// Largest-prominence strict local minimum of a sampled row. Prominence is
// the lower of the two barrier heights separating the minimum from deeper
// terrain (or the end of the valid range), which rejects shallow numerical
// ripples in favor of the physical node.
inline RowMinimum primary_minimum(const std::vector<double>& val,
                                  const std::vector<char>& ok,
                                  const std::vector<double>& x) {
  const int n = static_cast<int>(val.size());
  int best = -1;
  double best_prom = -1.0;
  for (int m = 1; m + 1 < n; ++m) {
    if (!ok[m] || !ok[m - 1] || !ok[m + 1]) continue;
    if (!(val[m] < val[m - 1] && val[m] < val[m + 1])) continue;
    double left = 0;
    for (int i = m - 1; i >= 0 && ok[i]; --i) {
      if (val[i] < val[m]) break;
      left = std::max(left, val[i] - val[m]);
    }
    double right = 0;
    for (int i = m + 1; i < n && ok[i]; ++i) {
      if (val[i] < val[m]) break;
      right = std::max(right, val[i] - val[m]);
    }
    const double prom = std::min(left, right);
    if (prom > best_prom) {
      best_prom = prom;
      best = m;
    }
  }
  RowMinimum out;
  if (best < 0) return out;
  out.index = best;
  parabolic_refine(val[best - 1], val[best], val[best + 1], x[best],
                   x[best + 1] - x[best], out.refined_x, out.refined_value);
  return out;
}

}  // namespace halo::detail
