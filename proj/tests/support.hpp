#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cmcg/linalg.hpp"

namespace cmcg::fixture {

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }

  Vector vector(std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  /// Random symmetric diagonally dominant matrix with positive diagonal.
  SparseMatrix spd(int n, double density = 0.1) {
    std::vector<Triplet> t;
    std::vector<double> rowsum(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uniform(0.0, 1.0) < density) {
          const double v = uniform(-1.0, 1.0);
          t.push_back({i, j, v});
          t.push_back({j, i, v});
          rowsum[i] += std::abs(v);
          rowsum[j] += std::abs(v);
        }
    for (int i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + uniform(0.5, 2.0)});
    return SparseMatrix::from_triplets(n, std::move(t));
  }

 private:
  std::mt19937_64 rng_;
};

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_diff(const Vector& a, const Vector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline ComplexField difference(const ComplexField& a, const ComplexField& b) {
  ComplexField d = a;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.re[i] -= b.re[i];
    d.im[i] -= b.im[i];
  }
  return d;
}

}  // namespace cmcg::fixture
