#pragma once

#include <string>
#include <vector>

#include "halo/crystal.hpp"
#include "halo/grid.hpp"
#include "halo/optimizer.hpp"
#include "halo/pseudo.hpp"

// Serialization. All writers are deterministic (fixed float formatting, no
// timestamps) and atomic: content goes to "<path>.tmp" and is renamed into
// place, so failures leave no partial output.
namespace halo {

// Write text (or bytes) atomically.
void write_file_atomic(const std::string& path, const std::string& content);

// Grid CSV: header "r_m,z_m,<value_column>", rows in index order (z fastest).
std::string field_csv(const GridSpec& grid, const std::vector<double>& values,
                      const std::string& value_column = "potential_V");

// Binary grid dump, magic "HALOF1", then little-endian float64:
// r_min, r_max, z_min, z_max, n_r, n_z followed by n_r*n_z values.
std::string field_binary(const GridSpec& grid, const std::vector<double>& values);
void read_field_binary(const std::string& bytes, GridSpec& grid,
                       std::vector<double>& values);

std::string fit_json(const QuadrupoleFit& fit);
std::string fits_json(const QuadrupoleFit& rf, const QuadrupoleFit& st);
std::string pseudo_summary_json(const PseudoMap& map);

std::string trace_csv(const std::vector<TraceRow>& trace);
std::string report_json(const OptimizationReport& report);

std::string phase_map_csv(const std::vector<PhaseCell>& cells);
std::string phase_boundary_csv(const std::vector<double>& alphas);

struct SpeciesRow {
  IonSpecies species;
  double omega_r = 0;   // rad/s
  double r_star_m = 0;  // m
};
std::string species_csv(const std::vector<SpeciesRow>& rows);

}  // namespace halo
