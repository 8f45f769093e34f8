#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "mesh.hpp"

namespace cmcg {

using ScalarField = std::function<Complex(const Point&)>;
/// Boundary data g(x, n) with n the outward unit normal.
using BoundaryField = std::function<Complex(const Point&, const Point&)>;

/// Time-harmonic problem  -div(grad u) - (omega/c)^2 u = f  with
/// u = g_D on the Dirichlet part, du/dn = g_N on the Neumann part and
/// du/dn - i(omega/c) u = g_S on the Sommerfeld part. Unset fields are zero.
struct HelmholtzProblem {
  std::shared_ptr<const Mesh> mesh;
  double omega = 1.0;
  std::vector<double> wave_speed;  // one value per cell; empty means c = 1
  ScalarField f;
  ScalarField g_dirichlet;
  BoundaryField g_neumann;
  BoundaryField g_sommerfeld;

  double period() const { return 2.0 * std::numbers::pi / omega; }
  double speed(int cell) const { return wave_speed.empty() ? 1.0 : wave_speed[cell]; }

  void validate() const {
    if (!mesh) throw std::invalid_argument("problem has no mesh");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("omega must be positive and finite");
    if (!wave_speed.empty()) {
      if (static_cast<int>(wave_speed.size()) != mesh->num_cells())
        throw std::invalid_argument("wave speed must have one value per cell");
      for (double c : wave_speed)
        if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("wave speed must be positive and finite");
    }
  }
};

/// Per-cell wave speed from a pointwise function evaluated at centroids.
inline std::vector<double> sample_wave_speed(const Mesh& mesh, const std::function<double(const Point&)>& c) {
  std::vector<double> out(mesh.num_cells());
  for (int k = 0; k < mesh.num_cells(); ++k) out[k] = c(mesh.centroid(k));
  return out;
}

}  // namespace cmcg
