#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "controllability.hpp"
#include "fem.hpp"
#include "hdg1d.hpp"
#include "mesh.hpp"

namespace cmcg {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

inline constexpr const char* kHistoryHeader = "# cmcg-history v1";
inline constexpr const char* kSolutionHeader = "# cmcg-solution v1";
inline constexpr const char* kOrdersHeader = "# cmcg-orders v1";

inline void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history) {
  auto out = detail::open_output(path);
  out << kHistoryHeader << "\n";
  out << "iter,residual_cg,misfit_J,residual_H,cumulative_wave_periods,wall_time_s\n";
  for (const auto& r : history)
    out << r.iter << ',' << format_double(r.residual_cg) << ',' << format_double(r.misfit_J) << ','
        << format_double(r.residual_H) << ',' << r.cumulative_periods << ',' << format_double(r.wall_time) << '\n';
}

/// Nodal values at the DOF coordinates.
inline void write_solution_csv(const std::filesystem::path& path, const FESpace& space, const ComplexField& u) {
  auto out = detail::open_output(path);
  const bool two_d = space.mesh->dim == 2;
  out << kSolutionHeader << "\n" << (two_d ? "x,y,re_u,im_u\n" : "x,re_u,im_u\n");
  for (int i = 0; i < space.n_dofs; ++i) {
    out << format_double(space.dof_coords[i][0]) << ',';
    if (two_d) out << format_double(space.dof_coords[i][1]) << ',';
    out << format_double(u.re[i]) << ',' << format_double(u.im[i]) << '\n';
  }
}

/// Element polynomial sampled at `per_cell` equispaced points per cell, both end points included.
inline void write_dg_solution_csv(const std::filesystem::path& path, const HdgOperator& op, const DgField& u,
                                  int per_cell = 5) {
  auto out = detail::open_output(path);
  out << kSolutionHeader << "\nx,re_u,im_u\n";
  const Mesh& m = op.mesh();
  for (int c = 0; c < op.num_cells(); ++c) {
    const double h = op.cell_size(c), x0 = m.vertices[m.cells[c][0]][0];
    for (int q = 0; q < per_cell; ++q) {
      const double s = static_cast<double>(q) / (per_cell - 1);
      const auto psi = legendre_orthonormal(u.degree, 2.0 * s - 1.0, h);
      Complex val{};
      for (int i = 0; i < u.block(); ++i) val += psi[i] * u.coef[c * u.block() + i];
      out << format_double(x0 + s * h) << ',' << format_double(val.real()) << ',' << format_double(val.imag()) << '\n';
    }
  }
}

struct OrderRow {
  std::string series;
  double h = 0.0;
  double error = 0.0;
  double slope = std::nan("");  // local slope against the previous row of the series
};

inline void write_orders_csv(const std::filesystem::path& path, const std::vector<OrderRow>& rows,
                             const std::vector<std::pair<std::string, double>>& fitted) {
  auto out = detail::open_output(path);
  out << kOrdersHeader << "\nseries,h,error,slope\n";
  for (const auto& r : rows)
    out << r.series << ',' << format_double(r.h) << ',' << format_double(r.error) << ',' << format_double(r.slope) << '\n';
  for (const auto& [name, slope] : fitted) out << name << ",fit,," << format_double(slope) << '\n';
}

/// Least-squares slope of log(error) against log(h).
inline double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("fitted_order: need at least two points");
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// ASCII legacy VTK with the P1 part of the field as point data (vertex DOFs come first).
inline void write_vtk(const std::filesystem::path& path, const FESpace& space, const ComplexField& u,
                      const std::string& name = "u") {
  const Mesh& m = *space.mesh;
  auto out = detail::open_output(path);
  out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  for (const auto& p : m.vertices) out << format_double(p[0]) << ' ' << format_double(p[1]) << " 0\n";
  const int vpc = m.vertices_per_cell();
  out << "CELLS " << m.num_cells() << ' ' << m.num_cells() * (vpc + 1) << '\n';
  for (const auto& c : m.cells) {
    out << vpc;
    for (int k = 0; k < vpc; ++k) out << ' ' << c[k];
    out << '\n';
  }
  out << "CELL_TYPES " << m.num_cells() << '\n';
  for (int c = 0; c < m.num_cells(); ++c) out << (m.dim == 1 ? 3 : 5) << '\n';
  out << "POINT_DATA " << m.num_vertices() << '\n';
  for (const char* part : {"re", "im"}) {
    out << "SCALARS " << name << '_' << part << " double 1\nLOOKUP_TABLE default\n";
    const Vector& v = part[0] == 'r' ? u.re : u.im;
    for (int i = 0; i < m.num_vertices(); ++i) out << format_double(v[i]) << '\n';
  }
}

/// Velocity raster: header `nx ny x0 y0 dx dy`, then nx*ny values with x running fastest.
struct VelocityRaster {
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, dx = 1, dy = 1;
  std::vector<double> values;

  double at(const Point& p) const {
    const int i = std::clamp(static_cast<int>(std::floor((p[0] - x0) / dx)), 0, nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p[1] - y0) / dy)), 0, ny - 1);
    return values[static_cast<std::size_t>(j) * nx + i];
  }
};

inline VelocityRaster read_velocity_raster(std::istream& in) {
  VelocityRaster r;
  if (!(in >> r.nx >> r.ny >> r.x0 >> r.y0 >> r.dx >> r.dy)) throw std::runtime_error("velocity raster: bad header");
  if (r.nx < 1 || r.ny < 1 || !(r.dx > 0) || !(r.dy > 0)) throw std::runtime_error("velocity raster: invalid header values");
  r.values.resize(static_cast<std::size_t>(r.nx) * r.ny);
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    if (!(in >> r.values[k])) throw std::runtime_error("velocity raster: expected " + std::to_string(r.values.size()) +
                                                       " values, got " + std::to_string(k));
    if (!(r.values[k] > 0.0)) throw std::runtime_error("velocity raster: nonpositive velocity at index " + std::to_string(k));
  }
  return r;
}

inline VelocityRaster read_velocity_raster_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open velocity raster '" + path.string() + "'");
  return read_velocity_raster(in);
}

}  // namespace cmcg
