#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmcg {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

/// Complex field stored as separate real and imaginary parts.
struct ComplexField {
  Vector re, im;
  ComplexField() = default;
  explicit ComplexField(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
  ComplexField(Vector r, Vector i) : re(std::move(r)), im(std::move(i)) {}
  std::size_t size() const { return re.size(); }
  Complex operator[](std::size_t i) const { return {re[i], im[i]}; }
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- dense vector kernels (sequential, so reductions are deterministic) ----

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// y = x + beta * y
inline void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

/// Diagonal-weighted inner product sum_i w_i a_i b_i.
inline double weighted_dot(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

inline void apply_mask(std::span<const std::uint8_t> constrained, std::span<double> x) {
  if (constrained.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (constrained[i]) x[i] = 0.0;
}

struct Triplet {
  int row, col;
  double value;
};

/// Square CSR matrix. Built from triplets with duplicates summed in
/// insertion order, so mirrored contributions give bitwise symmetry.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int n, std::vector<Triplet> t) {
    for (const auto& e : t)
      if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n)
        throw std::invalid_argument("triplet index out of range");
    std::stable_sort(t.begin(), t.end(),
                     [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    SparseMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    std::size_t k = 0;
    while (k < t.size()) {
      const int r = t[k].row, c = t[k].col;
      double v = 0.0;
      while (k < t.size() && t[k].row == r && t[k].col == c) v += t[k++].value;
      if (v == 0.0) continue;
      m.cols_.push_back(c);
      m.vals_.push_back(v);
      ++m.row_ptr_[r + 1];
    }
    for (int i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  static SparseMatrix diagonal(std::span<const double> d) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.size(); ++i) t.push_back({static_cast<int>(i), static_cast<int>(i), d[i]});
    return from_triplets(static_cast<int>(d.size()), std::move(t));
  }

  int rows() const { return n_; }
  std::size_t nnz() const { return vals_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_index() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }

  double at(int i, int j) const {
    const auto b = cols_.begin() + row_ptr_[i];
    const auto e = cols_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? vals_[it - cols_.begin()] : 0.0;
  }

  /// y = A x. Rows are split across threads for large systems; each row
  /// is summed in a fixed order, so the result does not depend on threads.
  void multiply(std::span<const double> x, std::span<double> y) const {
    const int n = n_;
#pragma omp parallel for schedule(static) if (n > 20000)
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] = s;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(n_);
    multiply(x, y);
    return y;
  }

  /// y += alpha A x
  void multiply_add(double alpha, std::span<const double> x, std::span<double> y) const {
    const int n = n_;
#pragma omp parallel for schedule(static) if (n > 20000)
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] += alpha * s;
    }
  }

  Vector diagonal_entries() const {
    Vector d(n_, 0.0);
    for (int i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
  }

  Vector row_sums() const {
    Vector s(n_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s[i] += vals_[k];
    return s;
  }

  bool same_pattern(const SparseMatrix& o) const { return n_ == o.n_ && row_ptr_ == o.row_ptr_ && cols_ == o.cols_; }

  bool is_bitwise_symmetric() const {
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (at(cols_[k], i) != vals_[k]) return false;
    return true;
  }

  SparseMatrix scaled(double alpha) const {
    SparseMatrix m = *this;
    for (double& v : m.vals_) v *= alpha;
    return m;
  }

  /// alpha*A + beta*B on the union pattern.
  static SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
    std::vector<Triplet> t;
    t.reserve(a.nnz() + b.nnz());
    for (int i = 0; i < a.n_; ++i)
      for (int k = a.row_ptr_[i]; k < a.row_ptr_[i + 1]; ++k) t.push_back({i, a.cols_[k], alpha * a.vals_[k]});
    for (int i = 0; i < b.n_; ++i)
      for (int k = b.row_ptr_[i]; k < b.row_ptr_[i + 1]; ++k) t.push_back({i, b.cols_[k], beta * b.vals_[k]});
    return from_triplets(a.n_, std::move(t));
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<double> vals_;
};

/// Symmetric positive (semi)definite operator: x -> y.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

inline void project_zero_mean(std::span<double> x) {
  if (x.empty()) return;
  const double m = sum(x) / static_cast<double>(x.size());
  for (double& v : x) v -= m;
}

struct PcgOptions {
  double rtol = 1e-12;
  int max_iter = 10000;
  /// Solve on the complement of constants (singular Neumann operators).
  bool project_constants = false;
};

struct PcgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  /// Energy functional 0.5 x'Ax - b'x after each iteration; non-increasing in exact arithmetic.
  std::vector<double> energy;
};

/// Jacobi-preconditioned CG. `inv_diag` may be empty (no preconditioner).
template <class Op>
PcgResult pcg(const Op& apply, std::span<const double> b, std::span<const double> inv_diag, const PcgOptions& opt = {},
              std::span<const double> x0 = {}) {
  const std::size_t n = b.size();
  PcgResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  Vector r(b.begin(), b.end());
  if (opt.project_constants) {
    project_zero_mean(r);
    project_zero_mean(res.x);
  }
  Vector bproj = r;
  Vector Ap(n), z(n), p(n);
  if (!x0.empty()) {
    apply(std::span<const double>(res.x), std::span<double>(Ap));
    axpy(-1.0, Ap, r);
  }
  const double bnorm = norm2(bproj);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    res.converged = true;
    return res;
  }
  auto precondition = [&](const Vector& in, Vector& out) {
    if (inv_diag.empty()) out = in;
    else
      for (std::size_t i = 0; i < n; ++i) out[i] = inv_diag[i] * in[i];
    if (opt.project_constants) project_zero_mean(out);
  };
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  double energy = 0.0;
  if (!x0.empty()) {
    apply(std::span<const double>(res.x), std::span<double>(Ap));
    energy = 0.5 * dot(res.x, Ap) - dot(bproj, res.x);
  }
  for (int it = 0; it < opt.max_iter; ++it) {
    const double rn = norm2(r);
    res.relative_residual = rn / bnorm;
    if (res.relative_residual <= opt.rtol) {
      res.converged = true;
      return res;
    }
    apply(std::span<const double>(p), std::span<double>(Ap));
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      throw NotPositiveDefinite("pcg: operator not positive definite (p'Ap = " + std::to_string(pAp) + " at iteration " +
                                std::to_string(it) + ")");
    }
    const double alpha = rz / pAp;
    axpy(alpha, p, res.x);
    axpy(-alpha, Ap, r);
    energy -= 0.5 * alpha * rz;
    res.energy.push_back(energy);
    precondition(r, z);
    const double rz_new = dot(r, z);
    xpby(z, rz_new / rz, p);
    rz = rz_new;
    res.iterations = it + 1;
  }
  res.relative_residual = norm2(r) / bnorm;
  res.converged = res.relative_residual <= opt.rtol;
  return res;
}

inline PcgResult pcg(const SparseMatrix& A, std::span<const double> b, std::span<const double> inv_diag,
                     const PcgOptions& opt = {}) {
  return pcg([&](std::span<const double> x, std::span<double> y) { A.multiply(x, y); }, b, inv_diag, opt);
}

/// Largest eigenvalue of the generalized problem K x = lambda W x (W diagonal,
/// positive) by power iteration on W^{-1}K with a fixed random start.
template <class Op>
double max_generalized_eigenvalue(const Op& apply_K, std::span<const double> w, int iterations = 30,
                                  std::span<const std::uint8_t> constrained = {}, std::uint64_t seed = 12345) {
  const std::size_t n = w.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vector x(n), y(n);
  for (auto& v : x) v = U(rng);
  apply_mask(constrained, x);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = std::sqrt(weighted_dot(w, x, x));
    if (nx == 0.0) return 0.0;
    scale(1.0 / nx, x);
    apply_K(std::span<const double>(x), std::span<double>(y));
    apply_mask(constrained, y);
    lambda = dot(x, y);  // Rayleigh quotient x'Kx / x'Wx with x'Wx = 1
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / w[i];
  }
  return lambda;
}

/// Ritz values of a symmetric operator after `steps` Lanczos iterations
/// with full reorthogonalization.
template <class Op>
std::vector<double> lanczos_ritz_values(const Op& apply, std::size_t n, int steps, std::uint64_t seed = 2024) {
  steps = static_cast<int>(std::min<std::size_t>(steps, n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Vector> Q;
  Vector q(n), w(n);
  for (auto& v : q) v = U(rng);
  scale(1.0 / norm2(q), q);
  std::vector<double> alpha, beta;
  for (int j = 0; j < steps; ++j) {
    Q.push_back(q);
    apply(std::span<const double>(q), std::span<double>(w));
    const double a = dot(q, w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qq : Q) axpy(-dot(qq, w), qq, w);
    const double bnorm = norm2(w);
    if (bnorm < 1e-14 || j + 1 == steps) break;
    beta.push_back(bnorm);
    for (std::size_t i = 0; i < n; ++i) q[i] = w[i] / bnorm;
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + m);
  return out;
}

}  // namespace cmcg
