#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "linalg.hpp"
#include "mesh.hpp"
#include "problem.hpp"
#include "quadrature.hpp"

namespace cmcg {

/// Continuous Lagrange space: P1-P3 on intervals (GLL nodes), P1-P2 on triangles.
/// Global numbering: vertices first, then element-interior (1D) or edge (2D) nodes.
struct FESpace {
  std::shared_ptr<const Mesh> mesh;
  int order = 1;
  int n_dofs = 0;
  int dofs_per_cell = 0;
  int dofs_per_facet = 0;
  std::vector<int> cell_dofs;
  std::vector<int> facet_dofs;
  std::vector<int> facet_cells;
  std::vector<Point> facet_normals;
  std::vector<Point> dof_coords;
  std::vector<std::uint8_t> constrained;  // 1 on Dirichlet DOFs

  std::span<const int> dofs(int cell) const {
    return {cell_dofs.data() + static_cast<std::size_t>(cell) * dofs_per_cell, static_cast<std::size_t>(dofs_per_cell)};
  }
  std::span<const int> facet(int f) const {
    return {facet_dofs.data() + static_cast<std::size_t>(f) * dofs_per_facet, static_cast<std::size_t>(dofs_per_facet)};
  }
  bool has_dirichlet() const {
    for (auto c : constrained)
      if (c) return true;
    return false;
  }
};

namespace detail {

/// Reference nodes of the 1D element in local order: x=0, x=1, interior GLL nodes.
inline std::vector<double> local_nodes_1d(int order) {
  const Rule1D g = gauss_lobatto(order + 1);
  std::vector<double> n{0.0, 1.0};
  for (int k = 1; k < order; ++k) n.push_back(g.x[k]);
  return n;
}

inline std::vector<double> local_lobatto_weights(int order) {
  const Rule1D g = gauss_lobatto(order + 1);
  std::vector<double> w{g.w.front(), g.w.back()};
  for (int k = 1; k < order; ++k) w.push_back(g.w[k]);
  return w;
}

/// Lagrange basis on arbitrary nodes: values and derivatives at x.
inline void lagrange_1d(const std::vector<double>& nodes, double x, std::vector<double>& val, std::vector<double>& der) {
  const std::size_t n = nodes.size();
  val.assign(n, 1.0);
  der.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t m = 0; m < n; ++m)
      if (m != j) val[j] *= (x - nodes[m]) / (nodes[j] - nodes[m]);
    for (std::size_t l = 0; l < n; ++l) {
      if (l == j) continue;
      double t = 1.0 / (nodes[j] - nodes[l]);
      for (std::size_t m = 0; m < n; ++m)
        if (m != j && m != l) t *= (x - nodes[m]) / (nodes[j] - nodes[m]);
      der[j] += t;
    }
  }
}

/// P1/P2 triangle basis from barycentrics and their (constant) gradients.
inline void triangle_basis(int order, const std::array<double, 3>& L, const std::array<Point, 3>& gL,
                           std::vector<double>& val, std::vector<Point>& grad) {
  if (order == 1) {
    val = {L[0], L[1], L[2]};
    grad = {gL[0], gL[1], gL[2]};
    return;
  }
  val.resize(6);
  grad.resize(6);
  for (int i = 0; i < 3; ++i) {
    val[i] = L[i] * (2.0 * L[i] - 1.0);
    const double s = 4.0 * L[i] - 1.0;
    grad[i] = {s * gL[i][0], s * gL[i][1]};
  }
  for (int e = 0; e < 3; ++e) {
    const int a = e, b = (e + 1) % 3;
    val[3 + e] = 4.0 * L[a] * L[b];
    grad[3 + e] = {4.0 * (L[a] * gL[b][0] + L[b] * gL[a][0]), 4.0 * (L[a] * gL[b][1] + L[b] * gL[a][1])};
  }
}

inline std::array<Point, 3> barycentric_gradients(const Mesh& m, int c) {
  const Point& a = m.vertices[m.cells[c][0]];
  const Point& b = m.vertices[m.cells[c][1]];
  const Point& d = m.vertices[m.cells[c][2]];
  const double j11 = b[0] - a[0], j12 = d[0] - a[0], j21 = b[1] - a[1], j22 = d[1] - a[1];
  const double det = j11 * j22 - j12 * j21;
  const Point g1{j22 / det, -j12 / det};
  const Point g2{-j21 / det, j11 / det};
  return {Point{-g1[0] - g2[0], -g1[1] - g2[1]}, g1, g2};
}

}  // namespace detail

inline FESpace make_space(std::shared_ptr<const Mesh> mesh, int order) {
  if (!mesh) throw std::invalid_argument("make_space: null mesh");
  if (mesh->dim == 1 && (order < 1 || order > 3)) throw std::invalid_argument("1D spaces support orders 1 to 3");
  if (mesh->dim == 2 && (order < 1 || order > 2)) throw std::invalid_argument("2D spaces support orders 1 and 2");
  FESpace s;
  s.mesh = mesh;
  s.order = order;
  const Mesh& m = *mesh;
  const int nv = m.num_vertices();
  s.facet_cells = boundary_facet_cells(m);
  for (std::size_t f = 0; f < m.boundary.size(); ++f) s.facet_normals.push_back(facet_normal(m, m.boundary[f], s.facet_cells[f]));
  s.dof_coords.assign(m.vertices.begin(), m.vertices.end());
  if (m.dim == 1) {
    const auto nodes = detail::local_nodes_1d(order);
    s.dofs_per_cell = order + 1;
    s.dofs_per_facet = 1;
    s.n_dofs = nv + m.num_cells() * (order - 1);
    for (int c = 0; c < m.num_cells(); ++c) {
      const double x0 = m.vertices[m.cells[c][0]][0], h = m.cell_measure(c);
      s.cell_dofs.push_back(m.cells[c][0]);
      s.cell_dofs.push_back(m.cells[c][1]);
      for (int k = 0; k < order - 1; ++k) {
        s.cell_dofs.push_back(nv + c * (order - 1) + k);
        s.dof_coords.push_back({x0 + h * nodes[2 + k], 0.0});
      }
    }
    for (const auto& f : m.boundary) s.facet_dofs.push_back(f.vertices[0]);
  } else {
    s.dofs_per_cell = order == 1 ? 3 : 6;
    s.dofs_per_facet = order + 1;
    if (order == 1) {
      s.n_dofs = nv;
      for (const auto& c : m.cells) s.cell_dofs.insert(s.cell_dofs.end(), c.begin(), c.end());
      for (const auto& f : m.boundary) s.facet_dofs.insert(s.facet_dofs.end(), f.vertices.begin(), f.vertices.end());
    } else {
      const EdgeTable et = build_edges(m);
      s.n_dofs = nv + static_cast<int>(et.edges.size());
      for (const auto& e : et.edges)
        s.dof_coords.push_back({0.5 * (m.vertices[e[0]][0] + m.vertices[e[1]][0]), 0.5 * (m.vertices[e[0]][1] + m.vertices[e[1]][1])});
      std::unordered_map<std::int64_t, int> eid;
      for (std::size_t e = 0; e < et.edges.size(); ++e) eid[detail::edge_key(et.edges[e][0], et.edges[e][1], nv)] = static_cast<int>(e);
      for (int c = 0; c < m.num_cells(); ++c) {
        s.cell_dofs.insert(s.cell_dofs.end(), m.cells[c].begin(), m.cells[c].end());
        for (int e = 0; e < 3; ++e) s.cell_dofs.push_back(nv + et.cell_edges[c][e]);
      }
      for (const auto& f : m.boundary) {
        s.facet_dofs.push_back(f.vertices[0]);
        s.facet_dofs.push_back(f.vertices[1]);
        s.facet_dofs.push_back(nv + eid.at(detail::edge_key(f.vertices[0], f.vertices[1], nv)));
      }
    }
  }
  s.constrained.assign(s.n_dofs, 0);
  for (std::size_t f = 0; f < m.boundary.size(); ++f)
    if (m.boundary[f].tag == BoundaryTag::Dirichlet)
      for (int d : s.facet(static_cast<int>(f))) s.constrained[d] = 1;
  return s;
}

/// Basis data at one quadrature point of a cell.
struct QuadPoint {
  Point x;
  double w;  // includes the Jacobian
  std::vector<double> phi;
  std::vector<Point> grad;
};

/// Quadrature on cell c exact for polynomials of the given degree.
inline std::vector<QuadPoint> cell_quadrature(const FESpace& s, int c, int degree) {
  const Mesh& m = *s.mesh;
  std::vector<QuadPoint> out;
  if (m.dim == 1) {
    const auto nodes = detail::local_nodes_1d(s.order);
    const Rule1D g = gauss_legendre(std::max(1, (degree + 2) / 2));
    const double x0 = m.vertices[m.cells[c][0]][0], h = m.cell_measure(c);
    std::vector<double> val, der;
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      detail::lagrange_1d(nodes, g.x[q], val, der);
      QuadPoint qp{{x0 + h * g.x[q], 0.0}, g.w[q] * h, val, {}};
      for (double d : der) qp.grad.push_back({d / h, 0.0});
      out.push_back(std::move(qp));
    }
    return out;
  }
  const TriangleRule r = degree <= 6 ? dunavant(degree) : collapsed_gauss((degree + 2) / 2);
  const auto gL = detail::barycentric_gradients(m, c);
  const double area = m.cell_measure(c);
  const Point& a = m.vertices[m.cells[c][0]];
  const Point& b = m.vertices[m.cells[c][1]];
  const Point& d = m.vertices[m.cells[c][2]];
  for (std::size_t q = 0; q < r.w.size(); ++q) {
    const auto& L = r.bary[q];
    QuadPoint qp;
    qp.x = {L[0] * a[0] + L[1] * b[0] + L[2] * d[0], L[0] * a[1] + L[1] * b[1] + L[2] * d[1]};
    qp.w = r.w[q] * area;
    detail::triangle_basis(s.order, L, gL, qp.phi, qp.grad);
    out.push_back(std::move(qp));
  }
  return out;
}

/// Gauss points on a boundary facet with trace basis values (facet DOF order).
struct FacetPoint {
  Point x;
  double w;
  std::vector<double> phi;
};

inline std::vector<FacetPoint> facet_quadrature(const FESpace& s, int f, int npts) {
  const Mesh& m = *s.mesh;
  const BoundaryFacet& bf = m.boundary[f];
  if (m.dim == 1) return {FacetPoint{m.vertices[bf.vertices[0]], 1.0, {1.0}}};
  const auto nodes = detail::local_nodes_1d(s.order);
  const Rule1D g = gauss_legendre(npts);
  const Point& a = m.vertices[bf.vertices[0]];
  const Point& b = m.vertices[bf.vertices[1]];
  const double len = m.facet_measure(bf);
  std::vector<FacetPoint> out;
  std::vector<double> val, der;
  for (std::size_t q = 0; q < g.x.size(); ++q) {
    detail::lagrange_1d(nodes, g.x[q], val, der);
    out.push_back({{a[0] + g.x[q] * (b[0] - a[0]), a[1] + g.x[q] * (b[1] - a[1])}, g.w[q] * len, val});
  }
  return out;
}

/// Semi-discrete wave system  M y'' + B y' + K y = F(t)  plus the Helmholtz
/// data it is built from. Loads are split as F(t) = F_re cos(wt) + F_im sin(wt).
struct WaveSystem {
  std::shared_ptr<const FESpace> space;
  double omega = 1.0;
  SparseMatrix K, M, B;     // consistent M and B
  Vector m_lumped, b_lumped;  // diagonal M and B used by the time steppers
  Vector F_re, F_im;    // volume load of f
  Vector G_re, G_im;    // boundary load of g_N and g_S
  Vector gD_re, gD_im;  // Dirichlet values on constrained DOFs, zero elsewhere
  std::vector<std::uint8_t> constrained;
  double source_norm = 0.0;  // ||f||_L2 + ||g_S||_L2(Sommerfeld boundary)
  bool has_sommerfeld = false;
  bool has_dirichlet = false;

  int size() const { return space->n_dofs; }
  bool singular_stiffness() const { return !has_dirichlet; }
  double period() const { return 2.0 * std::numbers::pi / omega; }
};

namespace detail {

inline void push_local(std::vector<Triplet>& t, std::span<const int> dofs, const std::vector<double>& A) {
  const std::size_t n = dofs.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) t.push_back({dofs[a], dofs[b], A[a * n + b]});
}

/// Lumped mass weights (fractions of |K|) in local DOF order.
inline std::vector<double> lumped_fractions(int dim, int order) {
  if (dim == 1) return local_lobatto_weights(order);
  if (order == 1) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return {3.0 / 60, 3.0 / 60, 3.0 / 60, 17.0 / 60, 17.0 / 60, 17.0 / 60};
}

}  // namespace detail

inline WaveSystem assemble_wave_system(std::shared_ptr<const FESpace> space, const HelmholtzProblem& prob) {
  prob.validate();
  const FESpace& s = *space;
  const Mesh& m = *s.mesh;
  if (prob.mesh.get() != s.mesh.get()) throw std::invalid_argument("problem and space use different meshes");
  WaveSystem sys;
  sys.space = space;
  sys.omega = prob.omega;
  sys.constrained = s.constrained;
  const int n = s.n_dofs;
  const int nd = s.dofs_per_cell;
  sys.m_lumped.assign(n, 0.0);
  sys.F_re.assign(n, 0.0);
  sys.F_im.assign(n, 0.0);
  sys.G_re.assign(n, 0.0);
  sys.G_im.assign(n, 0.0);
  sys.gD_re.assign(n, 0.0);
  sys.gD_im.assign(n, 0.0);

  std::vector<Triplet> tk, tm;
  const auto frac = detail::lumped_fractions(m.dim, s.order);
  double f_norm2 = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const double inv_c2 = 1.0 / (prob.speed(c) * prob.speed(c));
    const auto dofs = s.dofs(c);
    std::vector<double> Kl(nd * nd, 0.0), Ml(nd * nd, 0.0);
    for (const auto& q : cell_quadrature(s, c, 2 * s.order)) {
      for (int a = 0; a < nd; ++a)
        for (int b = a; b < nd; ++b) {
          Kl[a * nd + b] += q.w * (q.grad[a][0] * q.grad[b][0] + q.grad[a][1] * q.grad[b][1]);
          Ml[a * nd + b] += q.w * inv_c2 * q.phi[a] * q.phi[b];
        }
    }
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < a; ++b) {
        Kl[a * nd + b] = Kl[b * nd + a];
        Ml[a * nd + b] = Ml[b * nd + a];
      }
    detail::push_local(tk, dofs, Kl);
    detail::push_local(tm, dofs, Ml);
    const double vol = m.cell_measure(c);
    for (int a = 0; a < nd; ++a) sys.m_lumped[dofs[a]] += frac[a] * vol * inv_c2;
    if (prob.f) {
      for (const auto& q : cell_quadrature(s, c, 2 * s.order + 2)) {
        const Complex fv = prob.f(q.x);
        f_norm2 += q.w * std::norm(fv);
        for (int a = 0; a < nd; ++a) {
          sys.F_re[dofs[a]] += q.w * fv.real() * q.phi[a];
          sys.F_im[dofs[a]] += q.w * fv.imag() * q.phi[a];
        }
      }
    }
  }
  sys.K = SparseMatrix::from_triplets(n, std::move(tk));
  sys.M = SparseMatrix::from_triplets(n, std::move(tm));
  for (int i = 0; i < n; ++i)
    if (!(sys.m_lumped[i] > 0.0)) throw std::runtime_error("nonpositive lumped mass entry at DOF " + std::to_string(i));

  // Boundary terms.
  std::vector<Triplet> tb;
  sys.b_lumped.assign(n, 0.0);
  const int nf = s.dofs_per_facet;
  const auto trace_w = m.dim == 1 ? std::vector<double>{1.0} : detail::local_lobatto_weights(s.order);
  double gs_norm2 = 0.0;
  for (int f = 0; f < static_cast<int>(m.boundary.size()); ++f) {
    const BoundaryFacet& bf = m.boundary[f];
    const auto fd = s.facet(f);
    const Point& nrm = s.facet_normals[f];
    if (bf.tag == BoundaryTag::Sommerfeld) {
      sys.has_sommerfeld = true;
      const double inv_c = 1.0 / prob.speed(s.facet_cells[f]);
      const double len = m.facet_measure(bf);
      for (int a = 0; a < nf; ++a) sys.b_lumped[fd[a]] += trace_w[a] * len * inv_c;
      std::vector<double> Bl(nf * nf, 0.0);
      for (const auto& q : facet_quadrature(s, f, s.order + 1))
        for (int a = 0; a < nf; ++a)
          for (int b = a; b < nf; ++b) Bl[a * nf + b] += q.w * inv_c * q.phi[a] * q.phi[b];
      for (int a = 0; a < nf; ++a)
        for (int b = 0; b < a; ++b) Bl[a * nf + b] = Bl[b * nf + a];
      detail::push_local(tb, fd, Bl);
    }
    const BoundaryField* g = nullptr;
    if (bf.tag == BoundaryTag::Sommerfeld && prob.g_sommerfeld) g = &prob.g_sommerfeld;
    if (bf.tag == BoundaryTag::Neumann && prob.g_neumann) g = &prob.g_neumann;
    if (g) {
      for (const auto& q : facet_quadrature(s, f, s.order + 3)) {
        const Complex gv = (*g)(q.x, nrm);
        if (bf.tag == BoundaryTag::Sommerfeld) gs_norm2 += q.w * std::norm(gv);
        for (int a = 0; a < nf; ++a) {
          sys.G_re[fd[a]] += q.w * gv.real() * q.phi[a];
          sys.G_im[fd[a]] += q.w * gv.imag() * q.phi[a];
        }
      }
    }
  }
  sys.B = SparseMatrix::from_triplets(n, std::move(tb));

  sys.has_dirichlet = s.has_dirichlet();
  for (int i = 0; i < n; ++i) {
    if (!s.constrained[i]) continue;
    const Complex v = prob.g_dirichlet ? prob.g_dirichlet(s.dof_coords[i]) : Complex{};
    sys.gD_re[i] = v.real();
    sys.gD_im[i] = v.imag();
  }
  sys.source_norm = std::sqrt(f_norm2) + std::sqrt(gs_norm2);
  return sys;
}

/// Nodal interpolant of a complex function.
inline ComplexField interpolate(const FESpace& s, const ScalarField& u) {
  ComplexField out(s.n_dofs);
  for (int i = 0; i < s.n_dofs; ++i) {
    const Complex v = u(s.dof_coords[i]);
    out.re[i] = v.real();
    out.im[i] = v.imag();
  }
  return out;
}

/// ||u_h - u||_L2 with a quadrature exact for degree 2r+4.
inline double l2_error(const FESpace& s, const ComplexField& uh, const ScalarField& exact) {
  double e2 = 0.0;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    const auto dofs = s.dofs(c);
    for (const auto& q : cell_quadrature(s, c, 2 * s.order + 4)) {
      Complex v{};
      for (std::size_t a = 0; a < dofs.size(); ++a) v += q.phi[a] * uh[dofs[a]];
      e2 += q.w * std::norm(v - (exact ? exact(q.x) : Complex{}));
    }
  }
  return std::sqrt(e2);
}

inline double l2_norm(const FESpace& s, const ComplexField& uh) { return l2_error(s, uh, nullptr); }

}  // namespace cmcg
