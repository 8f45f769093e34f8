#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "mesh.hpp"
#include "problem.hpp"

namespace cmcg {

/// A problem together with its closed-form solution, if one is known.
struct Scenario {
  std::string name;
  HelmholtzProblem problem;
  ScalarField exact;
};

/// u = -exp(ikx) on (0, 1): u(0) = -1, Sommerfeld at 1, no sources.
inline Scenario sound_soft_1d(int n, double k = 5.0 * std::numbers::pi / 4.0) {
  Scenario s;
  s.name = "sound_soft_1d";
  s.problem.mesh = std::make_shared<Mesh>(generate_interval(0.0, 1.0, n, BoundaryTag::Dirichlet, BoundaryTag::Sommerfeld));
  s.problem.omega = k;
  s.problem.g_dirichlet = [](const Point&) { return Complex(-1.0, 0.0); };
  s.exact = [k](const Point& x) { return -std::exp(Complex(0.0, k * x[0])); };
  return s;
}

/// u = exp(ikx) on (0, 1): u(0) = 1, Sommerfeld at 1.
inline Scenario outgoing_1d(int n, double k = 6.0 * std::numbers::pi) {
  Scenario s;
  s.name = "outgoing_1d";
  s.problem.mesh = std::make_shared<Mesh>(generate_interval(0.0, 1.0, n, BoundaryTag::Dirichlet, BoundaryTag::Sommerfeld));
  s.problem.omega = k;
  s.problem.g_dirichlet = [](const Point&) { return Complex(1.0, 0.0); };
  s.exact = [k](const Point& x) { return std::exp(Complex(0.0, k * x[0])); };
  return s;
}

/// u = 16 x^2 (x - 1)^2 with homogeneous Neumann data at both ends.
inline Scenario neumann_1d(int n, double k = std::numbers::pi / 4.0) {
  Scenario s;
  s.name = "neumann_1d";
  s.problem.mesh = std::make_shared<Mesh>(generate_interval(0.0, 1.0, n, BoundaryTag::Neumann, BoundaryTag::Neumann));
  s.problem.omega = k;
  s.problem.f = [k](const Point& p) {
    const double x = p[0];
    const double u = 16.0 * x * x * (x - 1.0) * (x - 1.0);
    const double upp = 16.0 * (12.0 * x * x - 12.0 * x + 2.0);
    return Complex(-upp - k * k * u, 0.0);
  };
  s.exact = [](const Point& p) {
    const double x = p[0];
    return Complex(16.0 * x * x * (x - 1.0) * (x - 1.0), 0.0);
  };
  return s;
}

/// u = exp(ikx) + 0.5 cos(kx) + x^2 with Neumann data at 0 and Sommerfeld at 1.
inline Scenario sound_hard_1d(int n, double k = 5.0 * std::numbers::pi / 4.0) {
  Scenario s;
  s.name = "sound_hard_1d";
  s.problem.mesh = std::make_shared<Mesh>(generate_interval(0.0, 1.0, n, BoundaryTag::Neumann, BoundaryTag::Sommerfeld));
  s.problem.omega = k;
  const Complex I(0.0, 1.0);
  auto u = [=](double x) { return std::exp(I * k * x) + 0.5 * std::cos(k * x) + x * x; };
  auto du = [=](double x) { return I * k * std::exp(I * k * x) - 0.5 * k * std::sin(k * x) + 2.0 * x; };
  auto d2u = [=](double x) { return -k * k * std::exp(I * k * x) - 0.5 * k * k * std::cos(k * x) + 2.0; };
  s.problem.f = [=](const Point& p) { return -d2u(p[0]) - k * k * u(p[0]); };
  s.problem.g_neumann = [=](const Point& p, const Point& nrm) { return du(p[0]) * nrm[0]; };
  s.problem.g_sommerfeld = [=](const Point& p, const Point& nrm) { return du(p[0]) * nrm[0] - I * k * u(p[0]); };
  s.exact = [=](const Point& p) { return u(p[0]); };
  return s;
}

struct ScatteringOptions {
  double box = 5.0;        // side length in wavelengths
  double h = 0.1;
  ObstacleKind obstacle = ObstacleKind::Square;
  double obstacle_size = 0.0;  // 0 selects 1 (square) or 2 (cavity) wavelengths
  double wall = 0.2;
  double gap = 0.5;
  Side opening = Side::Right;
  double angle_deg = 135.0;
  double k = 2.0 * std::numbers::pi;
};

/// Plane wave scattering from a sound-soft obstacle in the total-field form:
/// u = 0 on the obstacle and g_S = -(d/dn - ik) u_in on the outer boundary.
inline Scenario plane_wave_scattering(const ScatteringOptions& o) {
  const double lambda = 2.0 * std::numbers::pi / o.k;
  RectMeshOptions mo;
  mo.box = {0.0, 0.0, o.box * lambda, o.box * lambda};
  mo.h = o.h;
  mo.obstacle.kind = o.obstacle;
  mo.obstacle.center = {0.5 * o.box * lambda, 0.5 * o.box * lambda};
  mo.obstacle.size = (o.obstacle_size > 0.0 ? o.obstacle_size : (o.obstacle == ObstacleKind::Cavity ? 2.0 : 1.0)) * lambda;
  mo.obstacle.wall = o.wall * lambda;
  mo.obstacle.gap = o.gap * lambda;
  mo.obstacle.opening = o.opening;
  Scenario s;
  s.name = o.obstacle == ObstacleKind::Cavity ? "cavity" : (o.obstacle == ObstacleKind::Square ? "square" : "free");
  s.problem.mesh = std::make_shared<Mesh>(generate_rectangle(mo));
  s.problem.omega = o.k;
  const double th = o.angle_deg * std::numbers::pi / 180.0;
  const Point d{std::cos(th), std::sin(th)};
  const double k = o.k;
  s.problem.g_sommerfeld = [=](const Point& x, const Point& n) {
    const Complex uin = std::exp(Complex(0.0, k * (d[0] * x[0] + d[1] * x[1])));
    return Complex(0.0, k) * (1.0 - (d[0] * n[0] + d[1] * n[1])) * uin;
  };
  if (o.obstacle != ObstacleKind::None) s.problem.g_dirichlet = [](const Point&) { return Complex{}; };
  return s;
}

}  // namespace cmcg
