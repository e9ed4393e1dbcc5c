// Command-line front end. Subcommands:
//   evaluate  solve one geometry, fit the quadrupoles, map the pseudopotential
//   optimize  greedy Monte Carlo search over the design parameters
//   phase     two-ion crystal phase map and boundary curve
//   species   scaled-radius table for a list of species
//   geometry  emit (or validate) geometry JSON
// All outputs are deterministic for a fixed config; stochastic commands
// require an explicit seed. Exit codes: 0 ok, 2 config error, 3 numerical
// failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "halo/constants.hpp"
#include "halo/crystal.hpp"
#include "halo/errors.hpp"
#include "halo/io.hpp"
#include "halo/optimizer.hpp"
#include "nlohmann/json.hpp"

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object())
    throw halo::ConfigError("config block \"" + where + "\" must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw halo::ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw halo::ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json root;
  try {
    root = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw halo::ConfigError(std::string("config is not valid JSON: ") +
                            e.what());
  }
  check_keys(root,
             {"geometry", "grid", "solver", "fit", "statics", "drive", "ion",
              "optimizer", "phase", "species"},
             "config");
  return root;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw halo::ConfigError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

halo::DesignParams parse_params(const json& jp) {
  check_keys(jp, {"A_h", "K_h", "V_h", "theta_n_deg"}, "geometry.params");
  halo::DesignParams p;
  p.A_h = jp.value("A_h", p.A_h);
  p.K_h = jp.value("K_h", p.K_h);
  p.V_h = jp.value("V_h", p.V_h);
  p.theta_n_deg = jp.value("theta_n_deg", p.theta_n_deg);
  return p;
}

halo::DesignParams geometry_params(const json& root) {
  if (!root.contains("geometry"))
    throw halo::ConfigError("config is missing the geometry block");
  const json& g = root["geometry"];
  check_keys(g, {"params", "radii_m", "insulator_setback_m"}, "geometry");
  return parse_params(g.value("params", json::object()));
}

halo::PipelineConfig pipeline_config(const json& root) {
  halo::PipelineConfig cfg;
  if (root.contains("geometry")) {
    const json& g = root["geometry"];
    check_keys(g, {"params", "radii_m", "insulator_setback_m"}, "geometry");
    if (g.contains("radii_m")) {
      const json& r = g["radii_m"];
      check_keys(r,
                 {"needle_outer", "control_inner", "control_outer",
                  "tube_inner", "tube_outer"},
                 "geometry.radii_m");
      cfg.radii.needle_outer = r.value("needle_outer", cfg.radii.needle_outer);
      cfg.radii.control_inner =
          r.value("control_inner", cfg.radii.control_inner);
      cfg.radii.control_outer =
          r.value("control_outer", cfg.radii.control_outer);
      cfg.radii.tube_inner = r.value("tube_inner", cfg.radii.tube_inner);
      cfg.radii.tube_outer = r.value("tube_outer", cfg.radii.tube_outer);
    }
    cfg.insulator_setback =
        g.value("insulator_setback_m", cfg.insulator_setback);
  }
  if (root.contains("grid")) {
    const json& g = root["grid"];
    check_keys(g, {"box_factor", "radial_cells"}, "grid");
    cfg.box_factor = g.value("box_factor", cfg.box_factor);
    cfg.radial_cells = g.value("radial_cells", cfg.radial_cells);
  }
  if (root.contains("solver")) {
    const json& s = root["solver"];
    check_keys(s, {"tol", "max_sweeps", "parallel"}, "solver");
    cfg.tol = s.value("tol", cfg.tol);
    cfg.max_sweeps = s.value("max_sweeps", cfg.max_sweeps);
    cfg.parallel = s.value("parallel", cfg.parallel);
  }
  if (root.contains("fit")) {
    const json& f = root["fit"];
    check_keys(f, {"radius_m"}, "fit");
    cfg.fit_radius = f.value("radius_m", cfg.fit_radius);
  }
  if (root.contains("statics")) {
    const json& s = root["statics"];
    check_keys(s, {"U1_V", "U2_V"}, "statics");
    cfg.anchor_u1 = s.value("U1_V", cfg.anchor_u1);
    cfg.anchor_u2 = s.value("U2_V", cfg.anchor_u2);
  }
  return cfg;
}

halo::IonSpecies parse_ion(const json& root) {
  halo::IonSpecies ion;  // defaults to Mg-24, +1e
  if (!root.contains("ion")) return ion;
  const json& j = root["ion"];
  check_keys(j, {"name", "mass_u", "mass_kg", "charge_e", "charge_C"}, "ion");
  ion.name = j.value("name", ion.name);
  if (j.contains("mass_u") && j.contains("mass_kg"))
    throw halo::ConfigError("ion block: give mass_u or mass_kg, not both");
  if (j.contains("mass_u")) ion.mass_u = j["mass_u"].get<double>();
  if (j.contains("mass_kg"))
    ion.mass_u = j["mass_kg"].get<double>() / halo::atomic_mass_unit;
  if (j.contains("charge_e") && j.contains("charge_C"))
    throw halo::ConfigError("ion block: give charge_e or charge_C, not both");
  if (j.contains("charge_e")) ion.charge_e = j["charge_e"].get<double>();
  if (j.contains("charge_C"))
    ion.charge_e = j["charge_C"].get<double>() / halo::elementary_charge;
  ion.validate();
  return ion;
}

halo::DriveSettings parse_drive(const json& root) {
  // Defaults match the reference operating point: 300 V at 80 MHz.
  double v0 = 300.0;
  double freq = 80e6;
  if (root.contains("drive")) {
    const json& j = root["drive"];
    check_keys(j, {"V0_V", "frequency_Hz"}, "drive");
    v0 = j.value("V0_V", v0);
    freq = j.value("frequency_Hz", freq);
  }
  auto drive = halo::DriveSettings::from_frequency(v0, freq);
  drive.validate();
  return drive;
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw halo::ConfigError("cannot create output directory: " + out_dir);
}

std::string out_path(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

json evaluation_json(const halo::Evaluation& e) {
  return json{{"params",
               {{"A_h", e.params.A_h},
                {"K_h", e.params.K_h},
                {"V_h", e.params.V_h},
                {"theta_n_deg", e.params.theta_n_deg}}},
              {"trap_center_r_m", e.trap_center_r},
              {"ell_rf_m", e.ell_rf},
              {"chi2_rf_V2m2", e.chi2_rf},
              {"ell_static_m", e.ell_static},
              {"chi2_static_V2m2", e.chi2_static},
              {"voltages",
               {{"V0_V", e.voltages.V0},
                {"U0_V", e.voltages.U0},
                {"U1_V", e.voltages.U1},
                {"U2_V", e.voltages.U2}}}};
}

int run_evaluate(const json& root, const std::string& out_dir) {
  const halo::DesignParams params = geometry_params(root);
  const halo::PipelineConfig cfg = pipeline_config(root);
  const halo::IonSpecies ion = parse_ion(root);
  const halo::DriveSettings drive = parse_drive(root);

  halo::ScalarField rf, st;
  const halo::Evaluation ev = halo::evaluate_fields(params, cfg, &rf, &st);
  const halo::FitRegion region{ev.trap_center_r, cfg.fit_radius};
  const halo::QuadrupoleFit f_rf = halo::fit_rf(rf, region, 1.0);
  const halo::QuadrupoleFit f_st = halo::fit_static(st, region, 1.0);
  const halo::PseudoMap pseudo = halo::pseudopotential(rf, ion, drive);

  ensure_out_dir(out_dir);
  halo::write_file_atomic(out_path(out_dir, "rf_field.csv"),
                          halo::field_csv(rf.grid, rf.values));
  halo::write_file_atomic(out_path(out_dir, "rf_field.bin"),
                          halo::field_binary(rf.grid, rf.values));
  halo::write_file_atomic(out_path(out_dir, "static_field.csv"),
                          halo::field_csv(st.grid, st.values));
  halo::write_file_atomic(out_path(out_dir, "static_field.bin"),
                          halo::field_binary(st.grid, st.values));
  halo::write_file_atomic(out_path(out_dir, "fits.json"),
                          halo::fits_json(f_rf, f_st));
  halo::write_file_atomic(out_path(out_dir, "psi_map.csv"),
                          halo::field_csv(pseudo.grid, pseudo.psi, "psi_eV"));
  halo::write_file_atomic(out_path(out_dir, "pseudo_summary.json"),
                          halo::pseudo_summary_json(pseudo));
  halo::write_file_atomic(out_path(out_dir, "evaluation.json"),
                          evaluation_json(ev).dump(2) + "\n");
  std::cout << "evaluate: R = " << ev.trap_center_r
            << " m, ell_rf = " << ev.ell_rf
            << " m, ell_static = " << ev.ell_static
            << " m, U0 = " << ev.voltages.U0 << " V\n";
  return 0;
}

int run_optimize(const json& root, const std::string& out_dir, bool seed_set,
                 std::uint64_t seed) {
  if (!root.contains("optimizer"))
    throw halo::ConfigError("config is missing the optimizer block");
  const json& j = root["optimizer"];
  check_keys(j,
             {"budget", "seed", "weight_rf", "proposal_scale",
              "halve_after_rejections", "max_halvings", "stop_rejections",
              "bounds"},
             "optimizer");

  halo::OptimizerConfig cfg;
  cfg.pipeline = pipeline_config(root);
  const int budget = j.value("budget", 200);
  cfg.weight_rf = j.value("weight_rf", cfg.weight_rf);
  cfg.proposal_scale = j.value("proposal_scale", cfg.proposal_scale);
  cfg.halve_after_rejections =
      j.value("halve_after_rejections", cfg.halve_after_rejections);
  cfg.max_halvings = j.value("max_halvings", cfg.max_halvings);
  cfg.stop_rejections = j.value("stop_rejections", cfg.stop_rejections);
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    check_keys(b,
               {"a_min", "a_max", "k_min", "k_max", "v_min", "v_max",
                "theta_min_deg", "theta_max_deg"},
               "optimizer.bounds");
    cfg.bounds.a_min = b.value("a_min", cfg.bounds.a_min);
    cfg.bounds.a_max = b.value("a_max", cfg.bounds.a_max);
    cfg.bounds.k_min = b.value("k_min", cfg.bounds.k_min);
    cfg.bounds.k_max = b.value("k_max", cfg.bounds.k_max);
    cfg.bounds.v_min = b.value("v_min", cfg.bounds.v_min);
    cfg.bounds.v_max = b.value("v_max", cfg.bounds.v_max);
    cfg.bounds.theta_min_deg =
        b.value("theta_min_deg", cfg.bounds.theta_min_deg);
    cfg.bounds.theta_max_deg =
        b.value("theta_max_deg", cfg.bounds.theta_max_deg);
  }
  if (!seed_set) {
    if (!j.contains("seed"))
      throw halo::ConfigError(
          "optimize is stochastic: set optimizer.seed or pass --seed");
    seed = j["seed"].get<std::uint64_t>();
  }

  halo::DesignParams initial;  // stock starting point unless overridden
  if (root.contains("geometry")) initial = geometry_params(root);

  const halo::OptimizationReport report =
      halo::optimize(initial, budget, seed, cfg);

  ensure_out_dir(out_dir);
  halo::write_file_atomic(out_path(out_dir, "report.json"),
                          halo::report_json(report));
  halo::write_file_atomic(out_path(out_dir, "trace.csv"),
                          halo::trace_csv(report.trace));
  std::cout << "optimize: " << report.evaluations
            << " evaluations, best objective = " << report.objective << "\n";
  return 0;
}

int run_phase(const json& root, const std::string& out_dir) {
  double alpha_min = 0.1, alpha_max = 3.0, r0_min = 0.05, r0_max = 2.0;
  int resolution = 20;
  if (root.contains("phase")) {
    const json& j = root["phase"];
    check_keys(j, {"alpha_min", "alpha_max", "r0_min", "r0_max", "resolution"},
               "phase");
    alpha_min = j.value("alpha_min", alpha_min);
    alpha_max = j.value("alpha_max", alpha_max);
    r0_min = j.value("r0_min", r0_min);
    r0_max = j.value("r0_max", r0_max);
    resolution = j.value("resolution", resolution);
  }
  const auto cells =
      halo::phase_map(alpha_min, alpha_max, r0_min, r0_max, resolution);
  std::vector<double> alphas;
  alphas.reserve(resolution);
  for (int i = 0; i < resolution; ++i)
    alphas.push_back(resolution == 1 ? alpha_min
                                     : alpha_min + (alpha_max - alpha_min) *
                                                       i / (resolution - 1));
  ensure_out_dir(out_dir);
  halo::write_file_atomic(out_path(out_dir, "phase_map.csv"),
                          halo::phase_map_csv(cells));
  halo::write_file_atomic(out_path(out_dir, "phase_boundary.csv"),
                          halo::phase_boundary_csv(alphas));
  std::cout << "phase: " << cells.size() << " grid points\n";
  return 0;
}

int run_species(const json& root, const std::string& out_dir) {
  std::vector<halo::SpeciesRow> rows;
  bool use_default = true;
  if (root.contains("species")) {
    const json& j = root["species"];
    check_keys(j, {"rows"}, "species");
    if (j.contains("rows")) {
      use_default = false;
      if (!j["rows"].is_array())
        throw halo::ConfigError("species.rows must be an array");
      for (const json& r : j["rows"]) {
        check_keys(
            r, {"name", "mass_u", "mass_kg", "charge_e", "charge_C",
                "frequency_Hz"},
            "species.rows[]");
        halo::IonSpecies ion;
        ion.name = r.value("name", std::string("ion"));
        if (r.contains("mass_u") && r.contains("mass_kg"))
          throw halo::ConfigError(
              "species row: give mass_u or mass_kg, not both");
        if (r.contains("mass_kg"))
          ion.mass_u = r["mass_kg"].get<double>() / halo::atomic_mass_unit;
        else
          ion.mass_u = r.value("mass_u", ion.mass_u);
        if (r.contains("charge_e") && r.contains("charge_C"))
          throw halo::ConfigError(
              "species row: give charge_e or charge_C, not both");
        if (r.contains("charge_C"))
          ion.charge_e = r["charge_C"].get<double>() / halo::elementary_charge;
        else
          ion.charge_e = r.value("charge_e", ion.charge_e);
        if (!r.contains("frequency_Hz"))
          throw halo::ConfigError("species row: frequency_Hz is required");
        const double freq = r["frequency_Hz"].get<double>();
        if (!(freq > 0))
          throw halo::ConfigError("species row: frequency_Hz must be positive");
        const double omega = 2.0 * halo::pi * freq;
        rows.push_back({ion, omega, halo::r_star(ion, omega)});
      }
    }
  }
  if (use_default) {
    // Stock demonstration set: three common trapped ions plus a 300 nm
    // charged polystyrene sphere (density 1050 kg/m^3, q = 1.6e-16 C).
    const double sphere_mass_kg =
        1050.0 * (4.0 / 3.0) * halo::pi * 150e-9 * 150e-9 * 150e-9;
    const std::vector<std::pair<halo::IonSpecies, double>> defaults = {
        {{"Mg-24", 24.0, 1.0}, 2000.0},
        {{"Ca-40", 40.0, 1.0}, 1500.0},
        {{"Yb-171", 171.0, 1.0}, 800.0},
        {{"polystyrene-300nm", sphere_mass_kg / halo::atomic_mass_unit,
          1.6e-16 / halo::elementary_charge},
         100.0},
    };
    for (const auto& [ion, freq] : defaults) {
      const double omega = 2.0 * halo::pi * freq;
      rows.push_back({ion, omega, halo::r_star(ion, omega)});
    }
  }
  ensure_out_dir(out_dir);
  halo::write_file_atomic(out_path(out_dir, "species.csv"),
                          halo::species_csv(rows));
  std::cout << "species: " << rows.size() << " rows\n";
  return 0;
}

int run_geometry(const json& root, const std::string& out_dir,
                 const std::string& validate_path) {
  if (!validate_path.empty()) {
    const halo::TrapGeometry g =
        halo::geometry_from_json(read_file(validate_path));
    g.validate();
    std::cout << "geometry OK: " << validate_path << "\n";
    return 0;
  }
  const halo::DesignParams params = geometry_params(root);
  const halo::PipelineConfig cfg = pipeline_config(root);
  const halo::TrapGeometry g =
      halo::build_geometry(params, cfg.radii, cfg.insulator_setback);
  ensure_out_dir(out_dir);
  halo::write_file_atomic(out_path(out_dir, "geometry.json"),
                          halo::geometry_to_json(g));
  std::cout << "geometry: wrote geometry.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halo trap field solver, optimizer and crystal-phase tools"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out-dir", out_dir, "output directory (created if absent)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "RNG seed (overrides config)");

  CLI::App* cmd_evaluate = app.add_subcommand(
      "evaluate", "solve fields for one geometry and fit the quadrupoles");
  CLI::App* cmd_optimize = app.add_subcommand(
      "optimize", "Monte Carlo search over the design parameters");
  CLI::App* cmd_phase =
      app.add_subcommand("phase", "two-ion crystal phase map");
  CLI::App* cmd_species =
      app.add_subcommand("species", "scaled-radius table");
  CLI::App* cmd_geometry =
      app.add_subcommand("geometry", "emit or validate geometry JSON");
  std::string validate_path;
  cmd_geometry->add_option("--validate", validate_path,
                           "validate an existing geometry JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json root = load_config(config_path);
    if (*cmd_evaluate) return run_evaluate(root, out_dir);
    if (*cmd_optimize)
      return run_optimize(root, out_dir, seed_opt->count() > 0, seed);
    if (*cmd_phase) return run_phase(root, out_dir);
    if (*cmd_species) return run_species(root, out_dir);
    if (*cmd_geometry) return run_geometry(root, out_dir, validate_path);
  } catch (const halo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const halo::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
