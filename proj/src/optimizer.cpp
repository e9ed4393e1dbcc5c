#include "halo/optimizer.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "halo/errors.hpp"

namespace halo {

std::map<ElectrodeLabel, double> rf_voltages(double V0) {
  // Ideal alternating RF configuration: the cross-section quadrupole carries
  // +V0 on one diagonal (top needle, bottom tube) and -V0 on the other
  // (bottom needle, top tube). This is the field the quadrupole model and
  // the pseudopotential are defined against. A single-feed drive that holds
  // one diagonal at RF ground instead is the same field at half amplitude
  // plus a common-mode term that is even in z and so never contributes to
  // the s*z quadrupole; characterizing the alternating field keeps the node
  // potential at exactly zero and the fit residual free of that offset.
  return {{ElectrodeLabel::needle_top, V0},
          {ElectrodeLabel::needle_bottom, -V0},
          {ElectrodeLabel::tube_top, -V0},
          {ElectrodeLabel::tube_bottom, V0}};
}

std::map<ElectrodeLabel, double> static_voltages(const VoltageSet& v) {
  return {{ElectrodeLabel::needle_top, v.U1},
          {ElectrodeLabel::needle_bottom, v.U1},
          {ElectrodeLabel::control_top, -v.U0},
          {ElectrodeLabel::control_bottom, -v.U0},
          {ElectrodeLabel::tube_top, v.U2},
          {ElectrodeLabel::tube_bottom, v.U2}};
}

VoltageSet tune_static_voltages(const BasisFields& basis, double trap_center_r,
                                const VoltageSet& anchor) {
  const double g_n = gradient(basis.needle, trap_center_r, 0.0).d_dr;
  const double g_c = gradient(basis.control, trap_center_r, 0.0).d_dr;
  const double g_t = gradient(basis.tube, trap_center_r, 0.0).d_dr;
  const double scale = std::max(std::abs(g_n), std::abs(g_t));
  if (scale == 0.0 || std::abs(g_c) < 1e-12 * scale)
    throw NoSolution("control basis field has no radial leverage at the node");
  VoltageSet v = anchor;
  // Radial field balance at (R, 0): U1 g_n + (-U0) g_c + U2 g_t = 0.
  v.U0 = (anchor.U1 * g_n + anchor.U2 * g_t) / g_c;
  return v;
}

Evaluation evaluate(const DesignParams& params, const PipelineConfig& cfg) {
  return evaluate_fields(params, cfg, nullptr, nullptr);
}

Evaluation evaluate_fields(const DesignParams& params,
                           const PipelineConfig& cfg, ScalarField* rf_out,
                           ScalarField* static_out) {
  const TrapGeometry geom =
      build_geometry(params, cfg.radii, cfg.insulator_setback);
  const Domain dom = default_domain(cfg.radii, cfg.box_factor);
  const ElectrodeBoundary boundary = boundary_segments(geom, dom);
  const GridSpec grid = default_grid(dom, cfg.radial_cells);

  SolveOptions so;
  so.tol = cfg.tol;
  so.max_sweeps = cfg.max_sweeps;
  so.parallel = cfg.parallel;

  const CellMask mask = build_mask(boundary, grid);
  const ScalarField rf = solve_masked(mask, rf_voltages(1.0), so);

  Evaluation ev;
  ev.params = params;
  ev.trap_center_r = locate_trap_center(rf);
  const FitRegion region{ev.trap_center_r, cfg.fit_radius};
  const QuadrupoleFit f_rf = fit_rf(rf, region, 1.0);
  ev.ell_rf = f_rf.ell;
  ev.chi2_rf = f_rf.chi2;

  BasisFields basis;
  basis.needle = solve_masked(mask,
                              {{ElectrodeLabel::needle_top, 1.0},
                               {ElectrodeLabel::needle_bottom, 1.0}},
                              so);
  basis.control = solve_masked(mask,
                               {{ElectrodeLabel::control_top, 1.0},
                                {ElectrodeLabel::control_bottom, 1.0}},
                               so);
  basis.tube = solve_masked(mask,
                            {{ElectrodeLabel::tube_top, 1.0},
                             {ElectrodeLabel::tube_bottom, 1.0}},
                            so);

  VoltageSet anchor;
  anchor.V0 = 1.0;
  anchor.U1 = cfg.anchor_u1;
  anchor.U2 = cfg.anchor_u2;
  ev.voltages = tune_static_voltages(basis, ev.trap_center_r, anchor);

  ScalarField u_static = superpose(
      basis, GroupVoltages{ev.voltages.U1, -ev.voltages.U0, ev.voltages.U2});
  const QuadrupoleFit f_st = fit_static(u_static, region, 1.0);
  ev.ell_static = f_st.ell;
  ev.chi2_static = f_st.chi2;
  if (rf_out) *rf_out = rf;
  if (static_out) *static_out = std::move(u_static);
  return ev;
}

bool ParamBounds::contains(const DesignParams& p) const {
  return p.A_h >= a_min && p.A_h <= a_max && p.K_h >= k_min && p.K_h <= k_max &&
         p.V_h >= v_min && p.V_h <= v_max && p.theta_n_deg >= theta_min_deg &&
         p.theta_n_deg <= theta_max_deg;
}

OptimizationReport optimize(const DesignParams& initial, int budget,
                            std::uint64_t seed, const OptimizerConfig& cfg) {
  if (budget < 0) throw ConfigError("optimizer budget must be non-negative");
  if (!(cfg.weight_rf >= 0 && cfg.weight_rf <= 1))
    throw ConfigError("rf objective weight must lie in [0, 1]");
  if (!cfg.bounds.contains(initial))
    throw InfeasibleStart("initial design parameters violate the search bounds");

  OptimizationReport report;
  report.seed = seed;
  try {
    report.initial = evaluate(initial, cfg.pipeline);
  } catch (const Error& err) {
    throw InfeasibleStart(std::string("initial evaluation failed: ") + err.what());
  }

  const double rf0 = std::max(report.initial.chi2_rf, 1e-300);
  const double st0 = std::max(report.initial.chi2_static, 1e-300);
  auto objective = [&](const Evaluation& e) {
    return cfg.weight_rf * (e.chi2_rf / rf0) +
           (1.0 - cfg.weight_rf) * (e.chi2_static / st0);
  };

  Evaluation best = report.initial;
  double best_obj = objective(best);
  report.trace.push_back(
      {0, initial, best.chi2_rf, best.chi2_static, true});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  int consecutive_rejections = 0;
  int halvings = 0;
  int rejections_at_min_scale = 0;
  long attempts = 0;
  const long attempt_cap = 1000 + 50L * budget;

  auto note_rejection = [&]() {
    ++consecutive_rejections;
    if (halvings >= cfg.max_halvings)
      ++rejections_at_min_scale;
    else if (consecutive_rejections % cfg.halve_after_rejections == 0)
      ++halvings;
  };

  while (report.evaluations < budget && attempts < attempt_cap) {
    if (rejections_at_min_scale >= cfg.stop_rejections)
      break;  // converged: stuck at the minimum step scale
    ++attempts;
    const double step = cfg.proposal_scale * std::ldexp(1.0, -halvings);
    DesignParams prop = best.params;
    prop.A_h += gauss(rng) * step * std::abs(best.params.A_h);
    prop.K_h += gauss(rng) * step * std::abs(best.params.K_h);
    prop.V_h += gauss(rng) * step * std::abs(best.params.V_h);
    prop.theta_n_deg += gauss(rng) * step * std::abs(best.params.theta_n_deg);
    if (!cfg.bounds.contains(prop)) {
      note_rejection();  // rejected without evaluation, budget untouched
      continue;
    }
    ++report.evaluations;
    const int iter = report.evaluations;
    Evaluation ev;
    bool evaluated = true;
    try {
      ev = evaluate(prop, cfg.pipeline);
    } catch (const Error&) {
      evaluated = false;  // hopeless geometry: counts as a rejected proposal
    }
    if (evaluated && objective(ev) < best_obj) {
      best = ev;
      best_obj = objective(ev);
      consecutive_rejections = 0;
      rejections_at_min_scale = 0;
      report.trace.push_back({iter, prop, ev.chi2_rf, ev.chi2_static, true});
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      report.trace.push_back({iter, prop, evaluated ? ev.chi2_rf : inf,
                              evaluated ? ev.chi2_static : inf, false});
      note_rejection();
    }
  }

  report.best = best;
  report.objective = best_obj;
  return report;
}

}  // namespace halo
