#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdg1d.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "problem.hpp"
#include "scenarios.hpp"
#include "timestepping.hpp"

namespace cmcg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Formulation { SecondOrder, Hdg };

struct DomainConfig {
  std::string type = "interval";  // interval | rectangle | file
  int cells = 32;
  // rectangle, in wavelengths for plane_wave, absolute otherwise
  double size = 5.0;
  std::array<double, 4> box{0.0, 0.0, 1.0, 1.0};
  double h = 0.1;
  ObstacleKind obstacle = ObstacleKind::None;
  std::optional<Point> obstacle_center;
  double obstacle_size = 0.0;
  double wall = 0.2;
  double gap = 0.5;
  Side opening = Side::Right;
  std::array<BoundaryTag, 4> outer{BoundaryTag::Sommerfeld, BoundaryTag::Sommerfeld, BoundaryTag::Sommerfeld,
                                   BoundaryTag::Sommerfeld};
  std::string file;
};

struct PhysicsConfig {
  std::string problem = "sound_soft";  // sound_soft | outgoing | neumann_polynomial | sound_hard | plane_wave | point_source
  std::optional<double> k;
  double angle_deg = 135.0;
  Point source_center{0.5, 0.5};
  double source_width = 0.1;
  double source_amplitude = 1.0;
  double wave_speed = 1.0;
  std::string velocity_raster;
};

struct DiscretizationConfig {
  Formulation formulation = Formulation::SecondOrder;
  int order = 2;
  Scheme scheme = Scheme::Leapfrog;
  int steps_per_period = 0;
  double step_refinement = 1.0;  // multiplies the CFL step count
  HdgMassCoefficient mass_coeff = HdgMassCoefficient::InvC2;
};

struct SolverConfig {
  double tol = 1e-8;
  double misfit_tol = 0.0;
  int max_iter = 1000;
  int runup_periods = 0;
  bool filter = true;
  bool correct_shift = true;
  bool helmholtz_residual = false;
  bool lumped_reference = true;
  int do_nothing_periods = 0;  // 0: match the CMCG work
  std::vector<int> runup_values{0, 2, 5, 10, 20};
};

struct SweepConfig {
  std::string kind = "mesh";  // mesh | dt
  std::vector<int> cells{8, 16, 32, 64};
  std::vector<double> h;
  std::vector<int> orders;
  std::vector<double> refinements{1, 2, 4, 8};
};

struct OutputConfig {
  std::string dir = "out";
  bool solution = true;
  bool history = true;
  bool vtk = false;
};

struct RunConfig {
  DomainConfig domain;
  PhysicsConfig physics;
  DiscretizationConfig discretization;
  SolverConfig solver;
  SweepConfig sweep;
  OutputConfig output;
  std::filesystem::path base_dir;  // for relative file references
};

namespace detail {

inline std::string where(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return "";
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ": ";
}

inline void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where(node) + "section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where(kv.first) + "unknown key '" + key + "' in section '" + section + "'");
  }
}

template <class T>
T read(const YAML::Node& node, const std::string& key, const T& fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(v) + "invalid value for '" + key + "'");
  }
}

template <class T>
std::vector<T> read_list(const YAML::Node& node, const std::string& key, const std::vector<T>& fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  if (!v.IsSequence()) throw ConfigError(where(v) + "'" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& e : v) {
    try {
      out.push_back(e.as<T>());
    } catch (const YAML::Exception&) {
      throw ConfigError(where(e) + "invalid list entry in '" + key + "'");
    }
  }
  return out;
}

inline BoundaryTag parse_tag(const YAML::Node& v) {
  const std::string s = v.as<std::string>();
  if (s == "dirichlet") return BoundaryTag::Dirichlet;
  if (s == "neumann") return BoundaryTag::Neumann;
  if (s == "sommerfeld") return BoundaryTag::Sommerfeld;
  throw ConfigError(where(v) + "unknown boundary tag '" + s + "'");
}

template <class F>
auto parse_with(const YAML::Node& v, F&& f) {
  try {
    return f(v.as<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(v) + e.what());
  }
}

inline void require(bool ok, const YAML::Node& n, const std::string& msg) {
  if (!ok) throw ConfigError(where(n) + msg);
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root) {
  using namespace detail;
  RunConfig c;
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  check_keys(root, "<root>", {"domain", "physics", "discretization", "solver", "sweep", "output"});

  if (const YAML::Node d = root["domain"]) {
    check_keys(d, "domain", {"type", "cells", "size", "box", "h", "obstacle", "boundary", "file"});
    auto& o = c.domain;
    o.type = read<std::string>(d, "type", o.type);
    require(o.type == "interval" || o.type == "rectangle" || o.type == "file", d["type"] ? d["type"] : d,
            "domain type must be interval, rectangle or file");
    o.cells = read<int>(d, "cells", o.cells);
    require(o.cells >= 1, d, "domain cells must be at least 1");
    o.size = read<double>(d, "size", o.size);
    if (d["box"]) {
      const auto b = read_list<double>(d, "box", {});
      require(b.size() == 4, d["box"], "box must be [x0, y0, x1, y1]");
      o.box = {b[0], b[1], b[2], b[3]};
    }
    o.h = read<double>(d, "h", o.h);
    require(o.h > 0.0, d, "mesh size h must be positive");
    o.file = read<std::string>(d, "file", o.file);
    if (const YAML::Node ob = d["obstacle"]) {
      check_keys(ob, "domain.obstacle", {"type", "center", "size", "wall", "gap", "opening"});
      const std::string t = read<std::string>(ob, "type", "none");
      if (t == "none") o.obstacle = ObstacleKind::None;
      else if (t == "square") o.obstacle = ObstacleKind::Square;
      else if (t == "cavity") o.obstacle = ObstacleKind::Cavity;
      else throw ConfigError(where(ob["type"]) + "obstacle type must be none, square or cavity");
      if (ob["center"]) {
        const auto p = read_list<double>(ob, "center", {});
        require(p.size() == 2, ob["center"], "obstacle center must be [x, y]");
        o.obstacle_center = Point{p[0], p[1]};
      }
      o.obstacle_size = read<double>(ob, "size", o.obstacle_size);
      o.wall = read<double>(ob, "wall", o.wall);
      o.gap = read<double>(ob, "gap", o.gap);
      if (ob["opening"]) o.opening = parse_with(ob["opening"], side_from_string);
    }
    if (const YAML::Node bd = d["boundary"]) {
      check_keys(bd, "domain.boundary", {"left", "right", "bottom", "top"});
      const char* names[4] = {"left", "right", "bottom", "top"};
      for (int k = 0; k < 4; ++k)
        if (bd[names[k]]) o.outer[k] = parse_tag(bd[names[k]]);
    }
  }

  if (const YAML::Node p = root["physics"]) {
    check_keys(p, "physics", {"problem", "k", "angle_deg", "source", "wave_speed", "velocity_raster"});
    auto& o = c.physics;
    o.problem = read<std::string>(p, "problem", o.problem);
    static const std::set<std::string> known{"sound_soft", "outgoing", "neumann_polynomial", "sound_hard", "plane_wave",
                                             "point_source"};
    require(known.count(o.problem) > 0, p["problem"] ? p["problem"] : p, "unknown problem '" + o.problem + "'");
    if (p["k"]) {
      o.k = read<double>(p, "k", 1.0);
      require(*o.k > 0.0, p["k"], "k must be positive");
    }
    o.angle_deg = read<double>(p, "angle_deg", o.angle_deg);
    if (const YAML::Node s = p["source"]) {
      check_keys(s, "physics.source", {"center", "width", "amplitude"});
      const auto ctr = read_list<double>(s, "center", {o.source_center[0], o.source_center[1]});
      require(ctr.size() == 2, s["center"], "source center must be [x, y]");
      o.source_center = {ctr[0], ctr[1]};
      o.source_width = read<double>(s, "width", o.source_width);
      require(o.source_width > 0.0, s, "source width must be positive");
      o.source_amplitude = read<double>(s, "amplitude", o.source_amplitude);
    }
    o.wave_speed = read<double>(p, "wave_speed", o.wave_speed);
    require(o.wave_speed > 0.0, p, "wave speed must be positive");
    o.velocity_raster = read<std::string>(p, "velocity_raster", o.velocity_raster);
  }

  if (const YAML::Node d = root["discretization"]) {
    check_keys(d, "discretization", {"formulation", "order", "scheme", "steps_per_period", "step_refinement", "mass_coeff"});
    auto& o = c.discretization;
    const std::string f = read<std::string>(d, "formulation", "second_order");
    if (f == "second_order") o.formulation = Formulation::SecondOrder;
    else if (f == "hdg") o.formulation = Formulation::Hdg;
    else throw ConfigError(where(d["formulation"]) + "formulation must be second_order or hdg");
    o.order = read<int>(d, "order", o.order);
    if (d["scheme"]) o.scheme = parse_with(d["scheme"], scheme_from_string);
    o.steps_per_period = read<int>(d, "steps_per_period", o.steps_per_period);
    require(o.steps_per_period >= 0, d, "steps_per_period must be nonnegative");
    o.step_refinement = read<double>(d, "step_refinement", o.step_refinement);
    require(o.step_refinement >= 1.0, d, "step_refinement must be at least 1");
    const std::string mc = read<std::string>(d, "mass_coeff", "inv_c2");
    if (mc == "inv_c2") o.mass_coeff = HdgMassCoefficient::InvC2;
    else if (mc == "inv_c") o.mass_coeff = HdgMassCoefficient::InvC;
    else throw ConfigError(where(d["mass_coeff"]) + "mass_coeff must be inv_c2 or inv_c");
  }

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver", {"tol", "misfit_tol", "max_iter", "runup_periods", "filter", "correct_shift",
                             "helmholtz_residual", "lumped_reference", "do_nothing_periods", "runup_values"});
    auto& o = c.solver;
    o.tol = read<double>(s, "tol", o.tol);
    require(o.tol > 0.0 && o.tol < 1.0, s, "tol must lie in (0, 1)");
    o.misfit_tol = read<double>(s, "misfit_tol", o.misfit_tol);
    o.max_iter = read<int>(s, "max_iter", o.max_iter);
    require(o.max_iter >= 0, s, "max_iter must be nonnegative");
    o.runup_periods = read<int>(s, "runup_periods", o.runup_periods);
    require(o.runup_periods >= 0, s, "runup_periods must be nonnegative");
    o.filter = read<bool>(s, "filter", o.filter);
    o.correct_shift = read<bool>(s, "correct_shift", o.correct_shift);
    o.helmholtz_residual = read<bool>(s, "helmholtz_residual", o.helmholtz_residual);
    o.lumped_reference = read<bool>(s, "lumped_reference", o.lumped_reference);
    o.do_nothing_periods = read<int>(s, "do_nothing_periods", o.do_nothing_periods);
    o.runup_values = read_list<int>(s, "runup_values", o.runup_values);
  }

  if (const YAML::Node s = root["sweep"]) {
    check_keys(s, "sweep", {"kind", "cells", "h", "orders", "refinements"});
    auto& o = c.sweep;
    o.kind = read<std::string>(s, "kind", o.kind);
    require(o.kind == "mesh" || o.kind == "dt", s, "sweep kind must be mesh or dt");
    o.cells = read_list<int>(s, "cells", o.cells);
    o.h = read_list<double>(s, "h", o.h);
    o.orders = read_list<int>(s, "orders", o.orders);
    o.refinements = read_list<double>(s, "refinements", o.refinements);
  }

  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir", "solution", "history", "vtk"});
    c.output.dir = read<std::string>(o, "dir", c.output.dir);
    c.output.solution = read<bool>(o, "solution", c.output.solution);
    c.output.history = read<bool>(o, "history", c.output.history);
    c.output.vtk = read<bool>(o, "vtk", c.output.vtk);
  }

  const bool one_d = c.domain.type == "interval";
  const bool needs_interval = c.physics.problem != "plane_wave" && c.physics.problem != "point_source";
  if (needs_interval != one_d)
    throw ConfigError("problem '" + c.physics.problem + "' requires domain type " + (needs_interval ? "interval" : "rectangle or file"));
  if (c.discretization.formulation == Formulation::Hdg && !one_d)
    throw ConfigError("the hdg formulation is available in 1D only");
  const int max_order = c.discretization.formulation == Formulation::Hdg || one_d ? 3 : 2;
  if (c.discretization.order < 1 || c.discretization.order > max_order)
    throw ConfigError("discretization order must lie in 1.." + std::to_string(max_order));
  return c;
}

inline RunConfig load_config_string(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ", column " + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  try {
    RunConfig c = parse_config(YAML::LoadFile(path.string()));
    c.base_dir = path.parent_path();
    return c;
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read configuration '" + path.string() + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
}

/// Builds the problem for a run; `cells` and `h` override the domain resolution for sweeps.
inline Scenario build_scenario(const RunConfig& c, std::optional<int> cells = {}, std::optional<double> h = {}) {
  const auto& P = c.physics;
  const auto& D = c.domain;
  const int n = cells.value_or(D.cells);
  Scenario s;
  if (P.problem == "sound_soft") s = P.k ? sound_soft_1d(n, *P.k) : sound_soft_1d(n);
  else if (P.problem == "outgoing") s = P.k ? outgoing_1d(n, *P.k) : outgoing_1d(n);
  else if (P.problem == "neumann_polynomial") s = P.k ? neumann_1d(n, *P.k) : neumann_1d(n);
  else if (P.problem == "sound_hard") s = P.k ? sound_hard_1d(n, *P.k) : sound_hard_1d(n);
  else if (P.problem == "plane_wave") {
    if (D.type != "rectangle") throw ConfigError("plane_wave requires a rectangle domain");
    ScatteringOptions so;
    so.box = D.size;
    so.h = h.value_or(D.h);
    so.obstacle = D.obstacle;
    so.obstacle_size = D.obstacle_size;
    so.wall = D.wall;
    so.gap = D.gap;
    so.opening = D.opening;
    so.angle_deg = P.angle_deg;
    if (P.k) so.k = *P.k;
    try {
      s = plane_wave_scattering(so);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("domain: ") + e.what());
    }
  } else {
    // point_source
    auto mesh = std::make_shared<Mesh>();
    try {
      if (D.type == "file") {
        std::filesystem::path f = D.file;
        if (f.is_relative()) f = c.base_dir / f;
        *mesh = read_mesh_file(f.string());
      } else {
        RectMeshOptions mo;
        mo.box = {D.box[0], D.box[1], D.box[2], D.box[3]};
        mo.h = h.value_or(D.h);
        mo.outer_tags = D.outer;
        mo.obstacle.kind = D.obstacle;
        if (D.obstacle != ObstacleKind::None) {
          mo.obstacle.center = D.obstacle_center.value_or(Point{0.5 * (D.box[0] + D.box[2]), 0.5 * (D.box[1] + D.box[3])});
          mo.obstacle.size = D.obstacle_size;
          mo.obstacle.wall = D.wall;
          mo.obstacle.gap = D.gap;
          mo.obstacle.opening = D.opening;
        }
        *mesh = generate_rectangle(mo);
      }
      validate_mesh(*mesh);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("domain: ") + e.what());
    }
    s.name = "point_source";
    s.problem.mesh = mesh;
    s.problem.omega = P.k.value_or(2.0 * std::numbers::pi);
    const Point x0 = P.source_center;
    const double w = P.source_width, a = P.source_amplitude;
    s.problem.f = [=](const Point& x) {
      const double r2 = (x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]);
      return Complex(a * std::exp(-r2 / (w * w)), 0.0);
    };
    if (mesh->has_tag(BoundaryTag::Dirichlet)) s.problem.g_dirichlet = [](const Point&) { return Complex{}; };
  }
  if (!P.velocity_raster.empty()) {
    std::filesystem::path f = P.velocity_raster;
    if (f.is_relative()) f = c.base_dir / f;
    const VelocityRaster r = read_velocity_raster_file(f);
    s.problem.wave_speed = sample_wave_speed(*s.problem.mesh, [&](const Point& x) { return r.at(x); });
    s.exact = nullptr;
  } else if (P.wave_speed != 1.0) {
    s.problem.wave_speed.assign(s.problem.mesh->num_cells(), P.wave_speed);
    s.exact = nullptr;
  }
  return s;
}

}  // namespace cmcg
