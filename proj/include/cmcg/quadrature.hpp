#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cmcg {

struct Rule1D {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;  // sums to 1
};

namespace detail {

/// Returns {P_n(z), P_{n-1}(z)}.
inline std::array<double, 2> legendre_pair(int n, double z) {
  double p0 = 1.0, p1 = z;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [0, 1], exact for degree 2n-1.
inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pm] = detail::legendre_pair(n, z);
      const double dz = pn / (n * (z * pn - pm) / (z * z - 1.0));
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const auto [pn, pm] = detail::legendre_pair(n, z);
    const double dp = n * (z * pn - pm) / (z * z - 1.0);
    r.x[n - 1 - i] = 0.5 * (1.0 + z);
    r.w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

/// Gauss-Lobatto-Legendre nodes on [0, 1] for n = 2, 3, 4 points.
inline Rule1D gauss_lobatto(int n) {
  switch (n) {
    case 2: return {{0.0, 1.0}, {0.5, 0.5}};
    case 3: return {{0.0, 0.5, 1.0}, {1.0 / 6, 4.0 / 6, 1.0 / 6}};
    case 4: {
      const double s = 1.0 / std::sqrt(5.0);
      return {{0.0, 0.5 * (1 - s), 0.5 * (1 + s), 1.0}, {1.0 / 12, 5.0 / 12, 5.0 / 12, 1.0 / 12}};
    }
    default: throw std::invalid_argument("gauss_lobatto: only 2 to 4 points are supported");
  }
}

/// Triangle rule in barycentric coordinates; weights sum to 1 (multiply by area).
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;
};

namespace detail {

inline void add_orbit3(TriangleRule& r, double a, double b, double w) {
  r.bary.push_back({a, b, b});
  r.bary.push_back({b, a, b});
  r.bary.push_back({b, b, a});
  for (int k = 0; k < 3; ++k) r.w.push_back(w);
}

inline void add_orbit6(TriangleRule& r, double a, double b, double c, double w) {
  const std::array<std::array<double, 3>, 6> p{{{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
  for (const auto& q : p) {
    r.bary.push_back(q);
    r.w.push_back(w);
  }
}

}  // namespace detail

/// Symmetric Dunavant rule exact for polynomials up to `degree` (<= 6).
inline TriangleRule dunavant(int degree) {
  TriangleRule r;
  if (degree <= 1) {
    r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.w.push_back(1.0);
  } else if (degree == 2) {
    detail::add_orbit3(r, 2.0 / 3, 1.0 / 6, 1.0 / 3);
  } else if (degree <= 4) {
    detail::add_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
    detail::add_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
  } else if (degree <= 6) {
    detail::add_orbit3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
    detail::add_orbit3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
    detail::add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374);
  } else {
    throw std::invalid_argument("dunavant: degree > 6 not supported");
  }
  return r;
}

/// Collapsed (Duffy) tensor Gauss rule on the triangle, exact for degree 2n-2.
inline TriangleRule collapsed_gauss(int n) {
  const Rule1D g = gauss_legendre(n);
  TriangleRule r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.x[i], v = g.x[j];
      const double x = u, y = v * (1.0 - u);
      r.bary.push_back({1.0 - x - y, x, y});
      r.w.push_back(2.0 * g.w[i] * g.w[j] * (1.0 - u));
    }
  }
  return r;
}

}  // namespace cmcg
