#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/crystal.hpp"
#include "halo/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path scratch = fs::temp_directory_path() / "halo_cli_test";

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(HALO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const json& j) {
  fs::create_directories(scratch);
  const fs::path p = scratch / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// coarse grid keeps a full field solve around a second
json coarse_eval_config() {
  return json{{"geometry", {{"params", json::object()}}},
              {"grid", {{"radial_cells", 120}}}};
}

}  // namespace

TEST_CASE("argument errors exit with the config code") {
  CHECK(run_cli("") == 2);              // a subcommand is required
  CHECK(run_cli("frobnicate") == 2);    // unknown subcommand
  CHECK(run_cli("species --no-such-flag") == 2);
}

TEST_CASE("config file errors exit with the config code") {
  fs::create_directories(scratch);
  const fs::path bad_json = scratch / "bad.json";
  std::ofstream(bad_json) << "{ this is not json";
  CHECK(run_cli("--config " + bad_json.string() + " species") == 2);

  const fs::path unknown = write_config("unknown_key.json", json{{"bogus", 1}});
  CHECK(run_cli("--config " + unknown.string() + " species") == 2);

  // nested blocks are checked by the subcommands that consume them
  const fs::path bad_nested = write_config(
      "bad_nested.json", json{{"grid", {{"cells", 10}}}});  // wrong key name
  CHECK(run_cli("--config " + bad_nested.string() + " evaluate") == 2);

  CHECK(run_cli("--config /nonexistent/nowhere.json species") == 2);

  // optimize is stochastic: refusing to run without an explicit seed
  const fs::path no_seed =
      write_config("no_seed.json", json{{"optimizer", {{"budget", 0}}}});
  CHECK(run_cli("--config " + no_seed.string() + " optimize") == 2);
}

TEST_CASE("numerical failures exit with the numeric code") {
  json cfg = coarse_eval_config();
  cfg["solver"] = {{"max_sweeps", 1}};  // cannot possibly converge
  const fs::path p = write_config("no_converge.json", cfg);
  const fs::path out = scratch / "nc_out";
  CHECK(run_cli("--config " + p.string() + " --out-dir " + out.string() +
                " evaluate") == 3);
}

TEST_CASE("species table matches library values") {
  const fs::path out = scratch / "species_default";
  REQUIRE(run_cli("--out-dir " + out.string() + " species") == 0);
  const auto rows = csv_rows(slurp(out / "species.csv"));
  REQUIRE(rows.size() == 5);  // header + stock table
  CHECK(rows[0] == std::vector<std::string>{"ion", "omega_r_Hz", "r_star_um"});

  // the stock table spans atomic ions to a charged nanosphere, yet every
  // scaled radius lands at hundreds of microns
  struct Expect {
    const char* name;
    double freq, r_um;
  };
  const Expect expect[] = {{"Mg-24", 2000, 418.8},
                           {"Ca-40", 1500, 427.7},
                           {"Yb-171", 800, 400.7},
                           {"polystyrene-300nm", 100, 428.3}};
  for (int k = 0; k < 4; ++k) {
    CHECK(rows[k + 1][0] == expect[k].name);
    CHECK(std::stod(rows[k + 1][1]) ==
          doctest::Approx(expect[k].freq).epsilon(1e-9));
    CHECK(std::stod(rows[k + 1][2]) ==
          doctest::Approx(expect[k].r_um).epsilon(0.01));
  }

  SUBCASE("custom rows go through the same formula") {
    const fs::path p = write_config(
        "species_rows.json",
        json{{"species",
              {{"rows",
                {{{"name", "Be-9"},
                  {"mass_u", 9.0},
                  {"charge_e", 1.0},
                  {"frequency_Hz", 3000.0}}}}}}});
    const fs::path out2 = scratch / "species_custom";
    REQUIRE(run_cli("--config " + p.string() + " --out-dir " + out2.string() +
                    " species") == 0);
    const auto rows2 = csv_rows(slurp(out2 / "species.csv"));
    REQUIRE(rows2.size() == 2);
    const double expect_m =
        halo::r_star({"Be-9", 9.0, 1.0}, 2 * M_PI * 3000.0);
    CHECK(std::stod(rows2[1][2]) ==
          doctest::Approx(expect_m * 1e6).epsilon(1e-9));
  }
  SUBCASE("species rows missing the frequency are rejected") {
    const fs::path p = write_config(
        "species_nofreq.json",
        json{{"species", {{"rows", {{{"name", "Be-9"}, {"mass_u", 9.0}}}}}}});
    CHECK(run_cli("--config " + p.string() + " species") == 2);
  }
}

TEST_CASE("geometry emit and validate round-trip") {
  const fs::path out = scratch / "geom";
  // emitting requires an explicit geometry block (empty params = stock set)
  CHECK(run_cli("--out-dir " + out.string() + " geometry") == 2);
  const fs::path cfg =
      write_config("geom.json", json{{"geometry", {{"params", json::object()}}}});
  REQUIRE(run_cli("--config " + cfg.string() + " --out-dir " + out.string() +
                  " geometry") == 0);
  const fs::path gpath = out / "geometry.json";
  REQUIRE(fs::exists(gpath));

  // emitted JSON reloads into the same geometry the library builds
  const halo::TrapGeometry g = halo::geometry_from_json(slurp(gpath));
  const halo::TrapGeometry ref = halo::build_geometry(halo::DesignParams{});
  CHECK(g.half_gap_needle ==
        doctest::Approx(ref.half_gap_needle).epsilon(1e-12));
  CHECK(g.half_gap_control ==
        doctest::Approx(ref.half_gap_control).epsilon(1e-12));
  CHECK(g.half_gap_tube == doctest::Approx(ref.half_gap_tube).epsilon(1e-12));

  CHECK(run_cli("geometry --validate " + gpath.string()) == 0);

  const fs::path broken = scratch / "broken_geometry.json";
  std::ofstream(broken) << "{}";
  CHECK(run_cli("geometry --validate " + broken.string()) == 2);
}

TEST_CASE("phase subcommand tabulates map and boundary") {
  const fs::path p = write_config("phase.json",
                                  json{{"phase",
                                        {{"alpha_min", 0.3},
                                         {"alpha_max", 2.0},
                                         {"r0_min", 0.1},
                                         {"r0_max", 1.0},
                                         {"resolution", 5}}}});
  const fs::path out = scratch / "phase_out";
  REQUIRE(run_cli("--config " + p.string() + " --out-dir " + out.string() +
                  " phase") == 0);

  const auto map = csv_rows(slurp(out / "phase_map.csv"));
  REQUIRE(map.size() == 1 + 25);
  CHECK(map[0][0] == "alpha");
  for (std::size_t n = 1; n < map.size(); ++n) {
    REQUIRE(map[n].size() == 6);
    CHECK((map[n][4] == "in_plane" || map[n][4] == "off_plane"));
  }

  const auto bnd = csv_rows(slurp(out / "phase_boundary.csv"));
  REQUIRE(bnd.size() == 1 + 5);
  for (std::size_t n = 1; n < bnd.size(); ++n) {
    const double a = std::stod(bnd[n][0]);
    const double rc = std::stod(bnd[n][1]);
    CHECK(rc == doctest::Approx(std::abs(a - 1.0) / (2 * std::cbrt(a)))
                    .epsilon(1e-9));
  }
}

TEST_CASE("evaluate writes the full artifact set deterministically") {
  const fs::path p = write_config("eval.json", coarse_eval_config());
  const fs::path out1 = scratch / "eval1";
  const fs::path out2 = scratch / "eval2";
  REQUIRE(run_cli("--config " + p.string() + " --out-dir " + out1.string() +
                  " evaluate") == 0);
  REQUIRE(run_cli("--config " + p.string() + " --out-dir " + out2.string() +
                  " evaluate") == 0);

  for (const char* name :
       {"rf_field.csv", "rf_field.bin", "static_field.csv", "static_field.bin",
        "fits.json", "psi_map.csv", "pseudo_summary.json", "evaluation.json"})
    CHECK(fs::exists(out1 / name));

  // byte-identical across runs and output directories
  for (const char* name : {"rf_field.bin", "evaluation.json", "fits.json"})
    CHECK(slurp(out1 / name) == slurp(out2 / name));

  const json ev = json::parse(slurp(out1 / "evaluation.json"));
  const double R = ev.at("trap_center_r_m").get<double>();
  CHECK(R == doctest::Approx(427e-6).epsilon(0.02));
  CHECK(ev.at("ell_rf_m").get<double>() == doctest::Approx(437e-6).epsilon(0.03));
  CHECK(std::abs(ev.at("voltages").at("U0_V").get<double>()) > 5.0);

  const json fits = json::parse(slurp(out1 / "fits.json"));
  CHECK(fits.at("rf").at("ell_m").get<double>() ==
        doctest::Approx(ev.at("ell_rf_m").get<double>()).epsilon(1e-12));
  CHECK(fits.at("static").at("ell_m").get<double>() ==
        doctest::Approx(ev.at("ell_static_m").get<double>()).epsilon(1e-12));

  const json ps = json::parse(slurp(out1 / "pseudo_summary.json"));
  CHECK(ps.at("depth_eV").get<double>() > 0.0);
  CHECK(ps.at("node_r_m").get<double>() == doctest::Approx(R).epsilon(0.05));
  CHECK(ps.at("saddle_r_m").get<double>() > ps.at("node_r_m").get<double>());

  // the binary dump reloads onto the solve grid and shows the RF node
  halo::GridSpec grid;
  std::vector<double> values;
  halo::read_field_binary(slurp(out1 / "rf_field.bin"), grid, values);
  CHECK(grid.n_r == 121);
  halo::ScalarField rf{grid, values, {}, {}};
  CHECK(std::abs(halo::value_at(rf, R, 0.0)) <= 1e-6);
}

TEST_CASE("optimize subcommand honors seed and budget") {
  json cfg = coarse_eval_config();
  cfg["optimizer"] = {{"budget", 0}};
  const fs::path p = write_config("opt.json", cfg);
  const fs::path out = scratch / "opt_out";
  REQUIRE(run_cli("--config " + p.string() + " --out-dir " + out.string() +
                  " --seed 5 optimize") == 0);

  const json report = json::parse(slurp(out / "report.json"));
  CHECK(report.at("seed").get<std::uint64_t>() == 5);
  CHECK(report.at("evaluations").get<int>() == 0);
  CHECK(report.at("trace_rows").get<int>() == 1);
  CHECK(report.at("objective").get<double>() == doctest::Approx(1.0));

  const auto trace = csv_rows(slurp(out / "trace.csv"));
  REQUIRE(trace.size() == 2);
  CHECK(trace[0][0] == "iter");
  CHECK(trace[1][0] == "0");
  CHECK(trace[1][7] == "1");

  // cleanup for repeated local runs
  std::error_code ec;
  fs::remove_all(scratch, ec);
}
