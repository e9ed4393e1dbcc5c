#pragma once

#include <cstdint>
#include <vector>

#include "halo/field_solver.hpp"
#include "halo/fitting.hpp"
#include "halo/geometry.hpp"

// Geometry evaluation pipeline and the greedy Monte Carlo search over the
// dimensionless design parameters.
namespace halo {

// Applied electrode voltages. Sign convention: the control pair is biased
// at -U0, the needle pair at +U1, the outer tube pair at +U2; the RF field
// is characterized in the alternating configuration, +V0 on the top
// needle / bottom tube diagonal and -V0 on the opposite diagonal.
struct VoltageSet {
  double V0 = 1.0;  // V
  double U0 = 0.0;  // V
  double U1 = 1.09; // V
  double U2 = 1.03; // V
};

std::map<ElectrodeLabel, double> rf_voltages(double V0);
std::map<ElectrodeLabel, double> static_voltages(const VoltageSet& v);

struct PipelineConfig {
  ElectrodeRadii radii{};
  double insulator_setback = 500e-6;  // m
  double box_factor = 5.0;    // far-field box at box_factor * tube_outer
  int radial_cells = 400;     // grid intervals across [0, r_max]
  double tol = 1e-6;          // solver residual tolerance
  long max_sweeps = 0;        // 0: auto
  bool parallel = true;
  double fit_radius = 50e-6;  // m
  double anchor_u1 = 1.09;    // V, held during static tuning
  double anchor_u2 = 1.03;    // V
};

struct Evaluation {
  DesignParams params;
  double trap_center_r = 0;  // m
  double ell_rf = 0;         // m
  double chi2_rf = 0;        // V^2 m^2
  double ell_static = 0;     // m
  double chi2_static = 0;    // V^2 m^2
  VoltageSet voltages;       // V0 = 1 with tuned U0 and the anchor U1, U2
};

// Solve the RF field (alternating +/-1 V configuration), fit the RF
// quadrupole at the located node, solve the static basis fields, tune U0 so
// the static radial field vanishes at the node, and fit the static
// quadrupole of the superposed bias field.
Evaluation evaluate(const DesignParams& params, const PipelineConfig& cfg);

// Same pipeline, optionally handing back the unit RF solution and the tuned
// static superposition (either pointer may be null).
Evaluation evaluate_fields(const DesignParams& params,
                           const PipelineConfig& cfg, ScalarField* rf_out,
                           ScalarField* static_out);

// Choose U0 so that dU/dr = 0 at (R, 0) with U1, U2 held at the anchors.
// By linearity U0 = (U1 g_n + U2 g_t) / g_c with g_* the radial gradients of
// the unit basis fields at (R, 0). Throws NoSolution when |g_c| vanishes.
VoltageSet tune_static_voltages(const BasisFields& basis, double trap_center_r,
                                const VoltageSet& anchor);

struct ParamBounds {
  double a_min = 0.3, a_max = 3.0;
  double k_min = 0.5, k_max = 4.0;
  double v_min = 0.0, v_max = 5.0;
  double theta_min_deg = 5.0, theta_max_deg = 45.0;

  bool contains(const DesignParams& p) const;
};

struct OptimizerConfig {
  PipelineConfig pipeline{};
  ParamBounds bounds{};
  double weight_rf = 0.5;          // weight of the RF term in the objective
  double proposal_scale = 0.05;    // Gaussian sigma as fraction of current value
  int halve_after_rejections = 20; // consecutive rejections per halving
  int max_halvings = 6;
  int stop_rejections = 50;        // at minimum scale
};

struct TraceRow {
  int iteration = 0;  // 0 is the initial evaluation
  DesignParams params;
  double chi2_rf = 0;
  double chi2_static = 0;
  bool accepted = false;
};

struct OptimizationReport {
  Evaluation best;
  Evaluation initial;
  std::vector<TraceRow> trace;  // initial + every evaluated proposal
  std::uint64_t seed = 0;
  int evaluations = 0;          // proposals evaluated (excludes the initial)
  double objective = 0;         // combined objective of the best iterate
};

// Greedy Monte Carlo minimization of
//   w * chi2_rf/chi2_rf,0 + (1 - w) * chi2_static/chi2_static,0
// (normalized by the initial evaluation). Proposals are independent Gaussian
// perturbations of the current best; out-of-bounds proposals are rejected
// without evaluation and do not consume budget. Proposals whose evaluation
// fails numerically count as rejected evaluations. Stops on budget
// exhaustion or stop_rejections consecutive rejections at minimum step
// scale. Deterministic for a fixed seed. Throws InfeasibleStart when the
// initial evaluation fails.
OptimizationReport optimize(const DesignParams& initial, int budget,
                            std::uint64_t seed, const OptimizerConfig& cfg);

}  // namespace halo
