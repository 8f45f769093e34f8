#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "complex_lu.hpp"
#include "fem.hpp"
#include "linalg.hpp"

namespace cmcg {

/// Discrete Helmholtz system A u = b with A = K - omega^2 M - i omega B.
/// Dirichlet rows and columns are replaced by identity and the lifting is
/// folded into b, so constrained entries of the solution equal g_D.
struct HelmholtzSystem {
  SparseMatrix A_re, A_im;
  Vector b_re, b_im;
  std::vector<std::uint8_t> constrained;
};

inline HelmholtzSystem assemble_helmholtz(const WaveSystem& sys, bool lumped) {
  const int n = sys.size();
  const double w = sys.omega;
  const auto& P = sys.constrained;
  SparseMatrix Mw = lumped ? SparseMatrix::diagonal(sys.m_lumped) : sys.M;
  SparseMatrix Bw = lumped ? SparseMatrix::diagonal(sys.b_lumped) : sys.B;
  SparseMatrix Are = SparseMatrix::combine(1.0, sys.K, -w * w, Mw);
  SparseMatrix Aim = Bw.scaled(-w);

  HelmholtzSystem h;
  h.constrained = P;
  h.b_re.resize(n);
  h.b_im.resize(n);
  for (int i = 0; i < n; ++i) {
    h.b_re[i] = sys.F_re[i] + sys.G_re[i];
    h.b_im[i] = sys.F_im[i] + sys.G_im[i];
  }
  if (!sys.has_dirichlet) {
    h.A_re = std::move(Are);
    h.A_im = std::move(Aim);
    return h;
  }
  // b_free -= A_fd g_D, then identity on constrained rows/columns.
  const ComplexField lift = complex_multiply(Are, Aim, ComplexField{sys.gD_re, sys.gD_im});
  auto strip = [&](const SparseMatrix& A, bool diag_one) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
      if (P[i]) {
        if (diag_one) t.push_back({i, i, 1.0});
        continue;
      }
      for (int k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k)
        if (!P[A.col_index()[k]]) t.push_back({i, A.col_index()[k], A.values()[k]});
    }
    return SparseMatrix::from_triplets(n, std::move(t));
  };
  for (int i = 0; i < n; ++i) {
    if (P[i]) {
      h.b_re[i] = sys.gD_re[i];
      h.b_im[i] = sys.gD_im[i];
    } else {
      h.b_re[i] -= lift.re[i];
      h.b_im[i] -= lift.im[i];
    }
  }
  h.A_re = strip(Are, true);
  h.A_im = strip(Aim, false);
  return h;
}

inline ComplexField direct_solve(const HelmholtzSystem& h) {
  try {
    return complex_lu_solve(h.A_re, h.A_im, h.b_re, h.b_im);
  } catch (const FactorizationError& e) {
    throw FactorizationError(std::string(e.what()) + " (omega^2 may coincide with a discrete eigenvalue)");
  }
}

/// ||A u - b|| / ||b|| over the free rows.
inline double helmholtz_residual(const HelmholtzSystem& h, const ComplexField& u) {
  const ComplexField Au = complex_multiply(h.A_re, h.A_im, u);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!h.constrained.empty() && h.constrained[i]) continue;
    const double rr = Au.re[i] - h.b_re[i], ri = Au.im[i] - h.b_im[i];
    num += rr * rr + ri * ri;
    den += h.b_re[i] * h.b_re[i] + h.b_im[i] * h.b_im[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

/// Eigenvalue estimates of m^{-1}K (free DOFs) from Lanczos on m^{-1/2} K m^{-1/2}.
inline std::vector<double> stiffness_ritz_values(const WaveSystem& sys, int steps = 60) {
  const int n = sys.size();
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (!sys.constrained[i]) free.push_back(i);
  Vector s(n, 0.0);
  for (int i : free) s[i] = 1.0 / std::sqrt(sys.m_lumped[i]);
  Vector x(n), y(n);
  auto op = [&](std::span<const double> in, std::span<double> out) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t k = 0; k < free.size(); ++k) x[free[k]] = s[free[k]] * in[k];
    sys.K.multiply(x, y);
    for (std::size_t k = 0; k < free.size(); ++k) out[k] = s[free[k]] * y[free[k]];
  };
  return lanczos_ritz_values(op, free.size(), steps);
}

/// Closest Ritz value to omega^2 within a relative distance of `rel`, if any.
inline std::optional<double> resonance_warning(const WaveSystem& sys, double rel = 0.01, int steps = 60) {
  const double w2 = sys.omega * sys.omega;
  std::optional<double> hit;
  for (double mu : stiffness_ritz_values(sys, steps))
    if (std::abs(mu - w2) <= rel * w2 && (!hit || std::abs(mu - w2) < std::abs(*hit - w2))) hit = mu;
  return hit;
}

}  // namespace cmcg
