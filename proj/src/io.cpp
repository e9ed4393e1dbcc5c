#include "halo/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "halo/constants.hpp"
#include "halo/errors.hpp"
#include "nlohmann/json.hpp"

namespace halo {

namespace {

using nlohmann::json;

// Fixed-width round-trip formatting keeps every writer byte-deterministic.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_doubles(std::string& out, const double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(p), 8 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &p[i], 8);
      for (int b = 0; b < 8; ++b)
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
}

double read_double(const char* p) {
  std::uint64_t bits = 0;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&bits, p, 8);
  } else {
    for (int b = 7; b >= 0; --b)
      bits = (bits << 8) | static_cast<unsigned char>(p[b]);
  }
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

json evaluation_json(const Evaluation& e) {
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

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp);
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw Error("write failed: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move " + tmp + " into place");
  }
}

std::string field_csv(const GridSpec& grid, const std::vector<double>& values,
                      const std::string& value_column) {
  if (values.size() != grid.size())
    throw GridMismatch("value array does not match the grid");
  std::string out = "r_m,z_m," + value_column + "\n";
  out.reserve(out.size() + values.size() * 48);
  for (int i = 0; i < grid.n_r; ++i) {
    const std::string r = fmt(grid.r(i));
    for (int j = 0; j < grid.n_z; ++j) {
      out += r;
      out += ',';
      out += fmt(grid.z(j));
      out += ',';
      out += fmt(values[grid.idx(i, j)]);
      out += '\n';
    }
  }
  return out;
}

std::string field_binary(const GridSpec& grid,
                         const std::vector<double>& values) {
  if (values.size() != grid.size())
    throw GridMismatch("value array does not match the grid");
  std::string out;
  out.reserve(6 + 8 * (6 + values.size()));
  out.append("HALOF1", 6);
  const double desc[6] = {grid.r_min,
                          grid.r_max,
                          grid.z_min,
                          grid.z_max,
                          static_cast<double>(grid.n_r),
                          static_cast<double>(grid.n_z)};
  append_doubles(out, desc, 6);
  append_doubles(out, values.data(), values.size());
  return out;
}

void read_field_binary(const std::string& bytes, GridSpec& grid,
                       std::vector<double>& values) {
  if (bytes.size() < 6 + 8 * 6 || bytes.compare(0, 6, "HALOF1") != 0)
    throw ConfigError("not a field dump (bad magic or truncated header)");
  double desc[6];
  for (int k = 0; k < 6; ++k) desc[k] = read_double(bytes.data() + 6 + 8 * k);
  const double nrd = desc[4], nzd = desc[5];
  if (!(nrd >= 2 && nzd >= 2) || nrd != static_cast<int>(nrd) ||
      nzd != static_cast<int>(nzd))
    throw ConfigError("field dump carries invalid grid dimensions");
  GridSpec g;
  g.r_min = desc[0];
  g.r_max = desc[1];
  g.z_min = desc[2];
  g.z_max = desc[3];
  g.n_r = static_cast<int>(nrd);
  g.n_z = static_cast<int>(nzd);
  g.h = (g.r_max - g.r_min) / (g.n_r - 1);
  const double hz = (g.z_max - g.z_min) / (g.n_z - 1);
  if (!(g.h > 0) || std::abs(hz - g.h) > 1e-9 * g.h)
    throw ConfigError("field dump grid is not square");
  g.validate();
  const std::size_t n = g.size();
  if (bytes.size() != 6 + 8 * (6 + n))
    throw ConfigError("field dump length does not match its descriptor");
  values.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    values[k] = read_double(bytes.data() + 6 + 8 * (6 + k));
  grid = g;
}

std::string fit_json(const QuadrupoleFit& fit) {
  const json j{{"model", fit.model},
               {"ell_m", fit.ell},
               {"chi2_V2m2", fit.chi2},
               {"center_r_m", fit.center_r},
               {"region_radius_m", fit.radius}};
  return j.dump(2) + "\n";
}

std::string fits_json(const QuadrupoleFit& rf, const QuadrupoleFit& st) {
  const json j{{"rf",
                {{"model", rf.model},
                 {"ell_m", rf.ell},
                 {"chi2_V2m2", rf.chi2},
                 {"center_r_m", rf.center_r},
                 {"region_radius_m", rf.radius}}},
               {"static",
                {{"model", st.model},
                 {"ell_m", st.ell},
                 {"chi2_V2m2", st.chi2},
                 {"center_r_m", st.center_r},
                 {"region_radius_m", st.radius}}}};
  return j.dump(2) + "\n";
}

std::string pseudo_summary_json(const PseudoMap& map) {
  const json j{{"node_r_m", map.node_r},
               {"saddle_r_m", map.saddle_r},
               {"depth_eV", map.depth}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iter,A_h,K_h,V_h,theta_deg,chi2_rf,chi2_static,accepted\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iteration);
    out += ',';
    out += fmt(row.params.A_h);
    out += ',';
    out += fmt(row.params.K_h);
    out += ',';
    out += fmt(row.params.V_h);
    out += ',';
    out += fmt(row.params.theta_n_deg);
    out += ',';
    out += fmt(row.chi2_rf);
    out += ',';
    out += fmt(row.chi2_static);
    out += ',';
    out += row.accepted ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string report_json(const OptimizationReport& report) {
  const json j{{"seed", report.seed},
               {"evaluations", report.evaluations},
               {"objective", report.objective},
               {"trace_rows", report.trace.size()},
               {"initial", evaluation_json(report.initial)},
               {"best", evaluation_json(report.best)}};
  return j.dump(2) + "\n";
}

std::string phase_map_csv(const std::vector<PhaseCell>& cells) {
  std::string out = "alpha,r0,x,z,phase,energy\n";
  for (const auto& c : cells) {
    out += fmt(c.state.trap.alpha);
    out += ',';
    out += fmt(c.state.trap.r0);
    out += ',';
    out += fmt(c.state.x);
    out += ',';
    out += fmt(c.state.z);
    out += ',';
    out += c.state.phase == CrystalPhase::in_plane ? "in_plane" : "off_plane";
    out += ',';
    out += fmt(c.state.energy);
    out += '\n';
  }
  return out;
}

std::string phase_boundary_csv(const std::vector<double>& alphas) {
  std::string out = "alpha,r0_critical\n";
  for (double a : alphas) {
    out += fmt(a);
    out += ',';
    out += fmt(phase_boundary(a));
    out += '\n';
  }
  return out;
}

std::string species_csv(const std::vector<SpeciesRow>& rows) {
  std::string out = "ion,omega_r_Hz,r_star_um\n";
  for (const auto& row : rows) {
    out += row.species.name;
    out += ',';
    out += fmt(row.omega_r / (2.0 * pi));
    out += ',';
    out += fmt(row.r_star_m * 1e6);
    out += '\n';
  }
  return out;
}

}  // namespace halo
