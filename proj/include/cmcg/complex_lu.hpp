#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "linalg.hpp"

namespace cmcg {

/// Sparse LU for A = A_re + i A_im, factored as the real block system
/// [[A_re, -A_im], [A_im, A_re]].
class ComplexSparseLU {
 public:
  ComplexSparseLU(const SparseMatrix& a_re, const SparseMatrix& a_im) : n_(a_re.rows()) {
    if (a_im.rows() != n_) throw std::invalid_argument("complex LU: real and imaginary parts differ in size");
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * (a_re.nnz() + a_im.nnz()));
    auto push = [&](const SparseMatrix& m, int r0, int c0, double s) {
      for (int i = 0; i < n_; ++i)
        for (int k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
          t.emplace_back(r0 + i, c0 + m.col_index()[k], s * m.values()[k]);
    };
    push(a_re, 0, 0, 1.0);
    push(a_im, 0, n_, -1.0);
    push(a_im, n_, 0, 1.0);
    push(a_re, n_, n_, 1.0);
    Eigen::SparseMatrix<double> A(2 * n_, 2 * n_);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    lu_.analyzePattern(A);
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) throw FactorizationError("complex LU factorization failed: " + lu_.lastErrorMessage());
  }

  ComplexField solve(std::span<const double> b_re, std::span<const double> b_im) const {
    Eigen::VectorXd rhs(2 * n_);
    for (int i = 0; i < n_; ++i) {
      rhs[i] = b_re[i];
      rhs[n_ + i] = b_im[i];
    }
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw FactorizationError("complex LU solve failed");
    ComplexField u(n_);
    for (int i = 0; i < n_; ++i) {
      u.re[i] = x[i];
      u.im[i] = x[n_ + i];
    }
    return u;
  }

 private:
  int n_;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

inline ComplexField complex_lu_solve(const SparseMatrix& a_re, const SparseMatrix& a_im, std::span<const double> b_re,
                                     std::span<const double> b_im) {
  return ComplexSparseLU(a_re, a_im).solve(b_re, b_im);
}

/// (A_re + i A_im)(u_re + i u_im)
inline ComplexField complex_multiply(const SparseMatrix& a_re, const SparseMatrix& a_im, const ComplexField& u) {
  const std::size_t n = u.size();
  ComplexField y(n);
  Vector tmp(n);
  a_re.multiply(u.re, y.re);
  a_im.multiply(u.im, tmp);
  axpy(-1.0, tmp, y.re);
  a_re.multiply(u.im, y.im);
  a_im.multiply(u.re, tmp);
  axpy(1.0, tmp, y.im);
  return y;
}

}  // namespace cmcg
