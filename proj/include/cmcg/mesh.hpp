#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cmcg {

using Point = std::array<double, 2>;

enum class BoundaryTag : std::uint8_t { Dirichlet, Neumann, Sommerfeld };

inline char tag_letter(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Dirichlet: return 'D';
    case BoundaryTag::Neumann: return 'N';
    case BoundaryTag::Sommerfeld: return 'S';
  }
  return '?';
}

inline BoundaryTag tag_from_letter(char c) {
  switch (c) {
    case 'D': return BoundaryTag::Dirichlet;
    case 'N': return BoundaryTag::Neumann;
    case 'S': return BoundaryTag::Sommerfeld;
    default: throw std::invalid_argument(std::string("unknown boundary tag '") + c + "'");
  }
}

/// Boundary facet: a vertex in 1D (second index -1), an edge in 2D.
struct BoundaryFacet {
  std::array<int, 2> vertices{-1, -1};
  BoundaryTag tag = BoundaryTag::Dirichlet;
};

/// Unstructured simplicial mesh in 1D (segments) or 2D (triangles).
/// In 1D, points use only the x coordinate and cells have third index -1.
struct Mesh {
  int dim = 1;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<BoundaryFacet> boundary;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int vertices_per_cell() const { return dim + 1; }

  double cell_measure(int c) const {
    const auto& v = cells[c];
    if (dim == 1) return vertices[v[1]][0] - vertices[v[0]][0];
    const Point& a = vertices[v[0]];
    const Point& b = vertices[v[1]];
    const Point& d = vertices[v[2]];
    return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
  }

  Point centroid(int c) const {
    Point p{0.0, 0.0};
    const int nv = vertices_per_cell();
    for (int k = 0; k < nv; ++k) {
      p[0] += vertices[cells[c][k]][0];
      p[1] += vertices[cells[c][k]][1];
    }
    p[0] /= nv;
    p[1] /= nv;
    return p;
  }

  double facet_measure(const BoundaryFacet& f) const {
    if (dim == 1) return 1.0;
    const Point& a = vertices[f.vertices[0]];
    const Point& b = vertices[f.vertices[1]];
    return std::hypot(b[0] - a[0], b[1] - a[1]);
  }

  double boundary_measure(BoundaryTag tag) const {
    double s = 0.0;
    for (const auto& f : boundary)
      if (f.tag == tag) s += facet_measure(f);
    return s;
  }

  bool has_tag(BoundaryTag tag) const {
    return std::any_of(boundary.begin(), boundary.end(), [&](const BoundaryFacet& f) { return f.tag == tag; });
  }

  double total_measure() const {
    double s = 0.0;
    for (int c = 0; c < num_cells(); ++c) s += cell_measure(c);
    return s;
  }
};

namespace detail {

inline std::int64_t edge_key(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return static_cast<std::int64_t>(a) * n + b;
}

}  // namespace detail

/// Unique edges of a triangle mesh in first-encounter order, with the
/// cell-to-edge map using local edge order (0,1), (1,2), (2,0).
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> cell_edges;
  std::vector<int> edge_cell_count;
};

inline EdgeTable build_edges(const Mesh& mesh) {
  if (mesh.dim != 2) throw std::invalid_argument("build_edges: mesh must be 2D");
  EdgeTable t;
  std::unordered_map<std::int64_t, int> index;
  index.reserve(mesh.cells.size() * 2);
  const int n = mesh.num_vertices();
  t.cell_edges.resize(mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.cells[c][e];
      const int b = mesh.cells[c][(e + 1) % 3];
      auto [it, inserted] = index.try_emplace(detail::edge_key(a, b, n), static_cast<int>(t.edges.size()));
      if (inserted) {
        t.edges.push_back({std::min(a, b), std::max(a, b)});
        t.edge_cell_count.push_back(0);
      }
      t.cell_edges[c][e] = it->second;
      ++t.edge_cell_count[it->second];
    }
  }
  return t;
}

/// For each boundary facet, the unique cell containing it.
inline std::vector<int> boundary_facet_cells(const Mesh& mesh) {
  std::vector<int> out(mesh.boundary.size(), -1);
  if (mesh.dim == 1) {
    std::vector<int> owner(mesh.vertices.size(), -1);
    for (int c = 0; c < mesh.num_cells(); ++c)
      for (int k = 0; k < 2; ++k) owner[mesh.cells[c][k]] = c;
    for (std::size_t f = 0; f < mesh.boundary.size(); ++f) out[f] = owner[mesh.boundary[f].vertices[0]];
    return out;
  }
  std::unordered_map<std::int64_t, int> owner;
  const int n = mesh.num_vertices();
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int e = 0; e < 3; ++e) owner[detail::edge_key(mesh.cells[c][e], mesh.cells[c][(e + 1) % 3], n)] = c;
  for (std::size_t f = 0; f < mesh.boundary.size(); ++f) {
    auto it = owner.find(detail::edge_key(mesh.boundary[f].vertices[0], mesh.boundary[f].vertices[1], n));
    if (it == owner.end()) throw std::invalid_argument("boundary facet is not an edge of any cell");
    out[f] = it->second;
  }
  return out;
}

/// Outward unit normal of a boundary facet.
inline Point facet_normal(const Mesh& mesh, const BoundaryFacet& f, int cell) {
  if (mesh.dim == 1) {
    const double xv = mesh.vertices[f.vertices[0]][0];
    const double xc = mesh.centroid(cell)[0];
    return {xv > xc ? 1.0 : -1.0, 0.0};
  }
  const Point& a = mesh.vertices[f.vertices[0]];
  const Point& b = mesh.vertices[f.vertices[1]];
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  Point n{(b[1] - a[1]) / len, -(b[0] - a[0]) / len};
  const Point c = mesh.centroid(cell);
  if ((a[0] - c[0]) * n[0] + (a[1] - c[1]) * n[1] < 0.0) {
    n[0] = -n[0];
    n[1] = -n[1];
  }
  return n;
}

/// Characteristic size: longest segment in 1D, longest triangle leg in 2D.
inline double mesh_size(const Mesh& mesh) {
  double h = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.dim == 1) {
      h = std::max(h, mesh.cell_measure(c));
      continue;
    }
    std::array<double, 3> len{};
    for (int e = 0; e < 3; ++e) {
      const Point& a = mesh.vertices[mesh.cells[c][e]];
      const Point& b = mesh.vertices[mesh.cells[c][(e + 1) % 3]];
      len[e] = std::hypot(b[0] - a[0], b[1] - a[1]);
    }
    std::sort(len.begin(), len.end());
    h = std::max(h, len[1]);
  }
  return h;
}

/// Checks orientation, duplicate vertices and conformity; throws std::invalid_argument.
inline void validate_mesh(const Mesh& mesh) {
  if (mesh.dim != 1 && mesh.dim != 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
  if (mesh.cells.empty()) throw std::invalid_argument("mesh has no cells");
  const int nv = mesh.num_vertices();
  const int vpc = mesh.vertices_per_cell();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k < vpc; ++k)
      if (mesh.cells[c][k] < 0 || mesh.cells[c][k] >= nv)
        throw std::invalid_argument("cell " + std::to_string(c) + " references a missing vertex");
    if (!(mesh.cell_measure(c) > 0.0))
      throw std::invalid_argument("cell " + std::to_string(c) + " is degenerate or inverted");
  }
  {
    std::map<std::pair<double, double>, int> seen;
    for (int v = 0; v < nv; ++v) {
      if (!seen.emplace(std::make_pair(mesh.vertices[v][0], mesh.vertices[v][1]), v).second)
        throw std::invalid_argument("duplicate vertex " + std::to_string(v));
    }
  }
  std::vector<char> used(nv, 0);
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int k = 0; k < vpc; ++k) used[mesh.cells[c][k]] = 1;
  for (int v = 0; v < nv; ++v)
    if (!used[v]) throw std::invalid_argument("vertex " + std::to_string(v) + " is not used by any cell");

  if (mesh.dim == 1) {
    std::vector<int> count(nv, 0);
    for (const auto& cell : mesh.cells) {
      ++count[cell[0]];
      ++count[cell[1]];
    }
    std::vector<int> bcount(nv, 0);
    for (const auto& f : mesh.boundary) {
      if (f.vertices[0] < 0 || f.vertices[0] >= nv) throw std::invalid_argument("boundary facet references a missing vertex");
      ++bcount[f.vertices[0]];
    }
    for (int v = 0; v < nv; ++v) {
      if (count[v] > 2) throw std::invalid_argument("non-conforming 1D mesh at vertex " + std::to_string(v));
      if ((count[v] == 1) != (bcount[v] == 1) || bcount[v] > 1)
        throw std::invalid_argument("boundary list does not match mesh boundary at vertex " + std::to_string(v));
    }
    return;
  }

  const EdgeTable edges = build_edges(mesh);
  std::unordered_map<std::int64_t, int> bset;
  for (const auto& f : mesh.boundary) {
    if (f.vertices[0] < 0 || f.vertices[0] >= nv || f.vertices[1] < 0 || f.vertices[1] >= nv)
      throw std::invalid_argument("boundary facet references a missing vertex");
    if (!bset.emplace(detail::edge_key(f.vertices[0], f.vertices[1], nv), 1).second)
      throw std::invalid_argument("duplicate boundary facet");
  }
  std::size_t n_boundary_edges = 0;
  for (std::size_t e = 0; e < edges.edges.size(); ++e) {
    const int cnt = edges.edge_cell_count[e];
    if (cnt > 2) throw std::invalid_argument("non-conforming mesh: edge shared by more than two cells");
    const bool listed = bset.count(detail::edge_key(edges.edges[e][0], edges.edges[e][1], nv)) > 0;
    if ((cnt == 1) != listed) throw std::invalid_argument("boundary list does not match mesh boundary");
    if (cnt == 1) ++n_boundary_edges;
  }
  if (n_boundary_edges != mesh.boundary.size()) throw std::invalid_argument("boundary facet is not a mesh edge");
  // Interior vertices on a boundary edge (hanging nodes) leave unmatched edges, caught above.
}

/// Uniform mesh of [a, b] with n segments.
inline Mesh generate_interval(double a, double b, int n, BoundaryTag left, BoundaryTag right) {
  if (!(b > a)) throw std::invalid_argument("interval requires a < b");
  if (n < 1) throw std::invalid_argument("interval requires at least one element");
  Mesh m;
  m.dim = 1;
  m.vertices.resize(n + 1);
  for (int i = 0; i <= n; ++i) m.vertices[i] = {i == n ? b : a + (b - a) * i / n, 0.0};
  m.cells.resize(n);
  for (int i = 0; i < n; ++i) m.cells[i] = {i, i + 1, -1};
  m.boundary = {{{0, -1}, left}, {{n, -1}, right}};
  return m;
}

enum class Side : std::uint8_t { Left, Right, Bottom, Top };

inline Side side_from_string(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "bottom") return Side::Bottom;
  if (s == "top") return Side::Top;
  throw std::invalid_argument("unknown side '" + s + "'");
}

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

enum class ObstacleKind : std::uint8_t { None, Square, Cavity };

/// Square (solid) or square cavity obstacle. For a cavity, `size` is the
/// outer side, `wall` the wall thickness and `gap` the opening width
/// centred on the `opening` side.
struct Obstacle {
  ObstacleKind kind = ObstacleKind::None;
  Point center{0.0, 0.0};
  double size = 0.0;
  double wall = 0.0;
  double gap = 0.0;
  Side opening = Side::Right;
};

struct RectMeshOptions {
  Box box;
  double h = 0.1;
  Obstacle obstacle;
  std::array<BoundaryTag, 4> outer_tags{BoundaryTag::Sommerfeld, BoundaryTag::Sommerfeld, BoundaryTag::Sommerfeld,
                                        BoundaryTag::Sommerfeld};  // left, right, bottom, top
  BoundaryTag obstacle_tag = BoundaryTag::Dirichlet;
};

namespace detail {

inline std::vector<double> subdivide(std::vector<double> breaks, double h) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> out{breaks.front()};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double len = breaks[i + 1] - breaks[i];
    const int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    for (int k = 1; k < n; ++k) out.push_back(breaks[i] + len * k / n);
    out.push_back(breaks[i + 1]);
  }
  return out;
}

inline bool inside(double v, double lo, double hi) { return v > lo && v < hi; }

}  // namespace detail

/// Structured triangulation of a box with an optional obstacle removed.
/// Obstacle edges are grid lines, so the obstacle is resolved exactly.
inline Mesh generate_rectangle(const RectMeshOptions& opt) {
  const Box& b = opt.box;
  if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) throw std::invalid_argument("rectangle requires x0 < x1 and y0 < y1");
  if (!(opt.h > 0.0)) throw std::invalid_argument("mesh size h must be positive");
  const Obstacle& ob = opt.obstacle;
  std::vector<double> bx{b.x0, b.x1}, by{b.y0, b.y1};
  double ox0 = 0, ox1 = 0, oy0 = 0, oy1 = 0;
  if (ob.kind != ObstacleKind::None) {
    if (!(ob.size > 0.0)) throw std::invalid_argument("obstacle size must be positive");
    ox0 = ob.center[0] - ob.size / 2;
    ox1 = ob.center[0] + ob.size / 2;
    oy0 = ob.center[1] - ob.size / 2;
    oy1 = ob.center[1] + ob.size / 2;
    if (!(ox0 > b.x0 && ox1 < b.x1 && oy0 > b.y0 && oy1 < b.y1))
      throw std::invalid_argument("obstacle must lie strictly inside the box");
    bx.insert(bx.end(), {ox0, ox1});
    by.insert(by.end(), {oy0, oy1});
  }
  if (ob.kind == ObstacleKind::Cavity) {
    if (!(ob.wall > 0.0) || !(2 * ob.wall < ob.size)) throw std::invalid_argument("cavity wall must satisfy 0 < 2*wall < size");
    if (!(ob.gap > 0.0) || !(ob.gap < ob.size - 2 * ob.wall))
      throw std::invalid_argument("cavity gap must satisfy 0 < gap < size - 2*wall");
    bx.insert(bx.end(), {ox0 + ob.wall, ox1 - ob.wall});
    by.insert(by.end(), {oy0 + ob.wall, oy1 - ob.wall});
    if (ob.opening == Side::Left || ob.opening == Side::Right)
      by.insert(by.end(), {ob.center[1] - ob.gap / 2, ob.center[1] + ob.gap / 2});
    else
      bx.insert(bx.end(), {ob.center[0] - ob.gap / 2, ob.center[0] + ob.gap / 2});
  }
  const std::vector<double> xs = detail::subdivide(bx, opt.h);
  const std::vector<double> ys = detail::subdivide(by, opt.h);
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;

  auto solid = [&](double x, double y) {
    if (ob.kind == ObstacleKind::None) return false;
    if (!(detail::inside(x, ox0, ox1) && detail::inside(y, oy0, oy1))) return false;
    if (ob.kind == ObstacleKind::Square) return true;
    const double w = ob.wall;
    if (detail::inside(x, ox0 + w, ox1 - w) && detail::inside(y, oy0 + w, oy1 - w)) return false;
    const double g = ob.gap / 2;
    switch (ob.opening) {
      case Side::Right: return !(x > ox1 - w && std::abs(y - ob.center[1]) < g);
      case Side::Left: return !(x < ox0 + w && std::abs(y - ob.center[1]) < g);
      case Side::Top: return !(y > oy1 - w && std::abs(x - ob.center[0]) < g);
      case Side::Bottom: return !(y < oy0 + w && std::abs(x - ob.center[0]) < g);
    }
    return true;
  };

  Mesh m;
  m.dim = 2;
  std::vector<int> vid((nx + 1) * (ny + 1), -1);
  auto gid = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> raw_cells;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (solid(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))) continue;
      const int v00 = gid(i, j), v10 = gid(i + 1, j), v11 = gid(i + 1, j + 1), v01 = gid(i, j + 1);
      raw_cells.push_back({v00, v10, v11});
      raw_cells.push_back({v00, v11, v01});
    }
  }
  for (auto& cell : raw_cells) {
    for (int& v : cell) {
      if (vid[v] < 0) {
        vid[v] = static_cast<int>(m.vertices.size());
        m.vertices.push_back({xs[v % (nx + 1)], ys[v / (nx + 1)]});
      }
      v = vid[v];
    }
  }
  m.cells = std::move(raw_cells);

  const EdgeTable et = build_edges(m);
  const double tol = 1e-12 * std::max(b.x1 - b.x0, b.y1 - b.y0);
  for (std::size_t e = 0; e < et.edges.size(); ++e) {
    if (et.edge_cell_count[e] != 1) continue;
    const Point& p = m.vertices[et.edges[e][0]];
    const Point& q = m.vertices[et.edges[e][1]];
    BoundaryTag tag = opt.obstacle_tag;
    if (std::abs(p[0] - b.x0) < tol && std::abs(q[0] - b.x0) < tol) tag = opt.outer_tags[0];
    else if (std::abs(p[0] - b.x1) < tol && std::abs(q[0] - b.x1) < tol) tag = opt.outer_tags[1];
    else if (std::abs(p[1] - b.y0) < tol && std::abs(q[1] - b.y0) < tol) tag = opt.outer_tags[2];
    else if (std::abs(p[1] - b.y1) < tol && std::abs(q[1] - b.y1) < tol) tag = opt.outer_tags[3];
    m.boundary.push_back({{et.edges[e][0], et.edges[e][1]}, tag});
  }
  return m;
}

/// Number of edges, for the Euler characteristic V - E + F.
inline int count_edges(const Mesh& mesh) {
  if (mesh.dim == 1) return mesh.num_cells();
  return static_cast<int>(build_edges(mesh).edges.size());
}

// Plain-text format:
//   dim nv ncells nfacets
//   nv lines of coordinates (dim values)
//   ncells lines of vertex indices (dim+1 values)
//   nfacets lines of vertex indices (dim values) followed by D, N or S
inline void write_mesh(const Mesh& mesh, std::ostream& os) {
  os.precision(17);
  os << mesh.dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << ' ' << mesh.boundary.size() << '\n';
  for (const auto& v : mesh.vertices) {
    os << v[0];
    if (mesh.dim == 2) os << ' ' << v[1];
    os << '\n';
  }
  for (const auto& c : mesh.cells) {
    for (int k = 0; k <= mesh.dim; ++k) os << (k ? " " : "") << c[k];
    os << '\n';
  }
  for (const auto& f : mesh.boundary) {
    for (int k = 0; k < mesh.dim; ++k) os << f.vertices[k] << ' ';
    os << tag_letter(f.tag) << '\n';
  }
}

inline Mesh read_mesh(std::istream& is) {
  Mesh m;
  long nv = 0, nc = 0, nf = 0;
  if (!(is >> m.dim >> nv >> nc >> nf)) throw std::invalid_argument("mesh file: malformed header");
  if ((m.dim != 1 && m.dim != 2) || nv <= 0 || nc <= 0 || nf < 0) throw std::invalid_argument("mesh file: invalid header values");
  m.vertices.resize(nv, Point{0.0, 0.0});
  for (long i = 0; i < nv; ++i)
    for (int k = 0; k < m.dim; ++k)
      if (!(is >> m.vertices[i][k])) throw std::invalid_argument("mesh file: truncated vertex list");
  m.cells.resize(nc, {-1, -1, -1});
  for (long i = 0; i < nc; ++i)
    for (int k = 0; k <= m.dim; ++k)
      if (!(is >> m.cells[i][k])) throw std::invalid_argument("mesh file: truncated cell list");
  m.boundary.resize(nf);
  for (long i = 0; i < nf; ++i) {
    for (int k = 0; k < m.dim; ++k)
      if (!(is >> m.boundary[i].vertices[k])) throw std::invalid_argument("mesh file: truncated facet list");
    std::string tag;
    if (!(is >> tag) || tag.size() != 1) throw std::invalid_argument("mesh file: missing facet tag");
    m.boundary[i].tag = tag_from_letter(tag[0]);
  }
  validate_mesh(m);
  return m;
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mesh file " + path);
  return read_mesh(in);
}

}  // namespace cmcg
