#include "halo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "halo/constants.hpp"
#include "halo/errors.hpp"
#include "nlohmann/json.hpp"

namespace halo {

void ElectrodeRadii::validate() const {
  const double rs[5] = {needle_outer, control_inner, control_outer, tube_inner,
                        tube_outer};
  for (double r : rs)
    if (!(r > 0) || !std::isfinite(r))
      throw InvalidGeometry("electrode radii must be positive and finite");
  if (!(needle_outer < control_inner && control_inner < control_outer &&
        control_outer < tube_inner && tube_inner < tube_outer))
    throw InvalidGeometry(
        "electrode radii must be strictly ordered needle < control bore < "
        "control OD < tube bore < tube OD");
}

void DesignParams::validate() const {
  if (!std::isfinite(A_h) || !std::isfinite(K_h) || !std::isfinite(V_h) ||
      !std::isfinite(theta_n_deg))
    throw InvalidGeometry("design parameters must be finite");
  if (!(A_h > 0)) throw InvalidGeometry("A_h must be positive");
  if (!(K_h > 0)) throw InvalidGeometry("K_h must be positive");
  if (V_h < 0) throw InvalidGeometry("V_h must be non-negative");
  if (!(theta_n_deg > 0.0 && theta_n_deg < 90.0))
    throw InvalidGeometry("needle angle must lie in (0, 90) degrees");
}

void TrapGeometry::validate() const {
  radii.validate();
  if (!(half_gap_needle > 0) || !(half_gap_control > 0) || !(half_gap_tube > 0))
    throw InvalidGeometry("electrode half-gaps must be positive");
  if (half_gap_control < half_gap_tube)
    throw InvalidGeometry("control electrode may not protrude past the tube gap");
  if (!(needle_angle_deg >= 0.0 && needle_angle_deg < 90.0))
    throw InvalidGeometry("needle angle must lie in [0, 90) degrees");
  if (insulator_setback < 0)
    throw InvalidGeometry("insulator setback must be non-negative");
}

DesignParams design_params(const TrapGeometry& g) {
  g.validate();
  DesignParams p;
  const double rt = g.radii.tube_mid();
  p.A_h = (g.half_gap_needle + g.half_gap_tube) / rt;
  p.K_h = g.half_gap_tube / g.half_gap_needle;
  p.V_h = (g.half_gap_control - g.half_gap_tube) / g.half_gap_needle;
  p.theta_n_deg = g.needle_angle_deg;
  return p;
}

TrapGeometry build_geometry(const DesignParams& p, const ElectrodeRadii& radii,
                            double insulator_setback) {
  p.validate();
  radii.validate();
  TrapGeometry g;
  g.radii = radii;
  const double rt = radii.tube_mid();
  g.half_gap_needle = p.A_h * rt / (1.0 + p.K_h);
  g.half_gap_tube = p.K_h * g.half_gap_needle;
  g.half_gap_control = g.half_gap_tube + p.V_h * g.half_gap_needle;
  g.needle_angle_deg = p.theta_n_deg;
  g.insulator_setback = insulator_setback;
  g.validate();
  return g;
}

const char* label_name(ElectrodeLabel label) {
  switch (label) {
    case ElectrodeLabel::needle_top: return "needle_top";
    case ElectrodeLabel::needle_bottom: return "needle_bottom";
    case ElectrodeLabel::control_top: return "control_top";
    case ElectrodeLabel::control_bottom: return "control_bottom";
    case ElectrodeLabel::tube_top: return "tube_top";
    case ElectrodeLabel::tube_bottom: return "tube_bottom";
    case ElectrodeLabel::far_field: return "far_field";
  }
  return "?";
}

ElectrodeLabel label_from_name(const std::string& name) {
  for (int k = 0; k < n_electrode_labels; ++k) {
    auto label = static_cast<ElectrodeLabel>(k);
    if (name == label_name(label)) return label;
  }
  throw ConfigError("unknown electrode label: " + name);
}

bool is_conductor_label(ElectrodeLabel label) {
  return label != ElectrodeLabel::far_field;
}

Domain default_domain(const ElectrodeRadii& radii, double box_factor) {
  if (!(box_factor > 1.0))
    throw DomainTooSmall("far-field box factor must exceed 1");
  Domain d;
  d.r_min = 0.0;
  d.r_max = box_factor * radii.tube_outer;
  d.z_max = box_factor * radii.tube_outer;
  d.z_min = -d.z_max;
  return d;
}

namespace {

std::vector<std::array<double, 2>> mirror_polygon(
    const std::vector<std::array<double, 2>>& poly) {
  std::vector<std::array<double, 2>> out;
  out.reserve(poly.size());
  // Reverse order keeps a consistent winding after the z flip.
  for (auto it = poly.rbegin(); it != poly.rend(); ++it)
    out.push_back({(*it)[0], -(*it)[1]});
  return out;
}

Segment seg(double r0, double z0, double r1, double z1, ElectrodeLabel label) {
  return Segment{r0, z0, r1, z1, label};
}

Segment mirror_segment(const Segment& s, ElectrodeLabel label) {
  return Segment{s.r0, -s.z0, s.r1, -s.z1, label};
}

}  // namespace

ElectrodeBoundary boundary_segments(const TrapGeometry& g, const Domain& domain) {
  g.validate();
  const ElectrodeRadii& rr = g.radii;
  const double margin = 2.0 * rr.tube_outer;
  if (domain.r_min != 0.0)
    throw DomainTooSmall("trap domain must include the symmetry axis");
  if (domain.r_max < rr.tube_outer + margin)
    throw DomainTooSmall("radial domain must clear the tube OD by 2x tube OD");
  const double z_need =
      std::max({g.half_gap_control, g.half_gap_tube, g.half_gap_needle}) + margin;
  if (domain.z_max < z_need || -domain.z_min < z_need)
    throw DomainTooSmall("axial domain must clear the electrode gaps by 2x tube OD");

  ElectrodeBoundary b;
  b.domain = domain;

  const double zn = g.half_gap_needle;
  const double zc = g.half_gap_control;
  const double zt = g.half_gap_tube;
  const double tan_tip = std::tan(g.needle_angle_deg * deg_to_rad);
  const double tip_h = rr.needle_outer * tan_tip;  // cone height
  const double z_top = domain.z_max;

  // Conductor cross-sections (top half). Stems run to the domain edge; the
  // inter-electrode insulators are vacuum and add no conductor material.
  std::vector<std::array<double, 2>> needle_top = {
      {0.0, zn},
      {rr.needle_outer, zn + tip_h},
      {rr.needle_outer, z_top},
      {0.0, z_top}};
  std::vector<std::array<double, 2>> control_top = {
      {rr.control_inner, zc},
      {rr.control_outer, zc},
      {rr.control_outer, z_top},
      {rr.control_inner, z_top}};
  std::vector<std::array<double, 2>> tube_top = {
      {rr.tube_inner, zt},
      {rr.tube_outer, zt},
      {rr.tube_outer, z_top},
      {rr.tube_inner, z_top}};

  b.conductors.push_back({ElectrodeLabel::needle_top, needle_top});
  b.conductors.push_back({ElectrodeLabel::needle_bottom, mirror_polygon(needle_top)});
  b.conductors.push_back({ElectrodeLabel::control_top, control_top});
  b.conductors.push_back({ElectrodeLabel::control_bottom, mirror_polygon(control_top)});
  b.conductors.push_back({ElectrodeLabel::tube_top, tube_top});
  b.conductors.push_back({ElectrodeLabel::tube_bottom, mirror_polygon(tube_top)});

  // Exposed surfaces facing the trapping region. Side walls are listed up to
  // insulator_setback past the gap (beyond that they sit behind insulator
  // stock), capped at the domain edge.
  const double sb = g.insulator_setback;
  auto cap = [&](double z) { return std::min(z, z_top); };

  std::vector<Segment> top;
  top.push_back(seg(0.0, zn, rr.needle_outer, zn + tip_h, ElectrodeLabel::needle_top));
  top.push_back(seg(rr.needle_outer, zn + tip_h, rr.needle_outer,
                    cap(zn + tip_h + sb), ElectrodeLabel::needle_top));
  top.push_back(seg(rr.control_inner, zc, rr.control_outer, zc,
                    ElectrodeLabel::control_top));
  top.push_back(seg(rr.control_inner, zc, rr.control_inner, cap(zc + sb),
                    ElectrodeLabel::control_top));
  top.push_back(seg(rr.control_outer, zc, rr.control_outer, cap(zc + sb),
                    ElectrodeLabel::control_top));
  top.push_back(seg(rr.tube_inner, zt, rr.tube_outer, zt, ElectrodeLabel::tube_top));
  top.push_back(seg(rr.tube_inner, zt, rr.tube_inner, cap(zt + sb),
                    ElectrodeLabel::tube_top));
  top.push_back(seg(rr.tube_outer, zt, rr.tube_outer, cap(zt + sb),
                    ElectrodeLabel::tube_top));

  for (const Segment& s : top) {
    b.segments.push_back(s);
    // bottom part label follows the top part immediately in the enum
    b.segments.push_back(
        mirror_segment(s, static_cast<ElectrodeLabel>(static_cast<int>(s.label) + 1)));
  }

  // Grounded far-field box: outer radial wall and both axial walls.
  b.segments.push_back(seg(domain.r_max, domain.z_min, domain.r_max,
                           domain.z_max, ElectrodeLabel::far_field));
  b.segments.push_back(seg(domain.r_min, domain.z_max, domain.r_max,
                           domain.z_max, ElectrodeLabel::far_field));
  b.segments.push_back(seg(domain.r_min, domain.z_min, domain.r_max,
                           domain.z_min, ElectrodeLabel::far_field));
  return b;
}

bool conductor_contains(const Conductor& c, double r, double z) {
  const auto& poly = c.polygon;
  const std::size_t n = poly.size();
  // Even-odd ray crossing with an explicit on-edge test so surface nodes
  // (which lie exactly on the conductor face) count as conductor.
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = poly[i][0], yi = poly[i][1];
    const double xj = poly[j][0], yj = poly[j][1];
    const double dx = xj - xi, dy = yj - yi;
    const double len2 = dx * dx + dy * dy;
    if (len2 > 0) {
      double t = ((r - xi) * dx + (z - yi) * dy) / len2;
      t = std::clamp(t, 0.0, 1.0);
      const double pr = xi + t * dx - r, pz = yi + t * dy - z;
      if (pr * pr + pz * pz <= 1e-24)  // within 1 pm of the surface
        return true;
    }
    if ((yi > z) != (yj > z)) {
      const double x_cross = xi + (z - yi) / (yj - yi) * (xj - xi);
      if (r < x_cross) inside = !inside;
    }
  }
  return inside;
}

std::string geometry_to_json(const TrapGeometry& g) {
  nlohmann::ordered_json j;
  j["radii_m"] = {{"needle_outer", g.radii.needle_outer},
                  {"control_inner", g.radii.control_inner},
                  {"control_outer", g.radii.control_outer},
                  {"tube_inner", g.radii.tube_inner},
                  {"tube_outer", g.radii.tube_outer}};
  j["half_gap_needle_m"] = g.half_gap_needle;
  j["half_gap_control_m"] = g.half_gap_control;
  j["half_gap_tube_m"] = g.half_gap_tube;
  j["needle_angle_deg"] = g.needle_angle_deg;
  j["insulator_setback_m"] = g.insulator_setback;
  return j.dump(2) + "\n";
}

TrapGeometry geometry_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("geometry JSON parse failure: ") + e.what());
  }
  TrapGeometry g;
  try {
    const auto& r = j.at("radii_m");
    g.radii.needle_outer = r.at("needle_outer").get<double>();
    g.radii.control_inner = r.at("control_inner").get<double>();
    g.radii.control_outer = r.at("control_outer").get<double>();
    g.radii.tube_inner = r.at("tube_inner").get<double>();
    g.radii.tube_outer = r.at("tube_outer").get<double>();
    g.half_gap_needle = j.at("half_gap_needle_m").get<double>();
    g.half_gap_control = j.at("half_gap_control_m").get<double>();
    g.half_gap_tube = j.at("half_gap_tube_m").get<double>();
    g.needle_angle_deg = j.at("needle_angle_deg").get<double>();
    g.insulator_setback = j.value("insulator_setback_m", 500e-6);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("geometry JSON missing field: ") + e.what());
  }
  g.validate();
  return g;
}

}  // namespace halo
