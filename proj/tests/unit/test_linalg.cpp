#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "cmcg/complex_lu.hpp"
#include "cmcg/linalg.hpp"
#include "support.hpp"

using namespace cmcg;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows(), A.rows());
  for (int i = 0; i < A.rows(); ++i)
    for (int k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) D(i, A.col_index()[k]) = A.values()[k];
  return D;
}

}  // namespace

TEST(Sparse, DuplicatesAreSummed) {
  const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, 4.0}, {0, 1, -1.0}});
  EXPECT_EQ(A.nnz(), 3u);
  EXPECT_EQ(A.at(0, 0), 3.0);
  EXPECT_EQ(A.at(1, 0), 4.0);
  EXPECT_EQ(A.at(1, 1), 0.0);
  EXPECT_THROW(SparseMatrix::from_triplets(2, {{2, 0, 1.0}}), std::invalid_argument);
}

TEST(Sparse, MultiplyMatchesDense) {
  fixture::Gen gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(3, 60);
    const SparseMatrix A = gen.spd(n, 0.2);
    const Vector x = gen.vector(n);
    const Vector y = A * x;
    const Eigen::VectorXd ref = dense(A) * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(y[i], ref[i], 1e-12 * (1 + std::abs(ref[i])));
    Vector z(n, 1.0);
    A.multiply_add(2.0, x, z);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(z[i], 1.0 + 2.0 * ref[i], 1e-12 * (1 + std::abs(ref[i])));
    EXPECT_TRUE(A.is_bitwise_symmetric());
  }
}

TEST(Sparse, MultiplyIsDeterministic) {
  fixture::Gen gen(11);
  const SparseMatrix A = gen.spd(2000, 0.005);
  const Vector x = gen.vector(2000);
  const Vector y1 = A * x, y2 = A * x;
  for (int i = 0; i < 2000; ++i) ASSERT_EQ(y1[i], y2[i]);
}

TEST(Sparse, Combine) {
  const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {0, 1, 2.0}});
  const SparseMatrix B = SparseMatrix::from_triplets(2, {{1, 1, 3.0}, {0, 1, 1.0}});
  const SparseMatrix C = SparseMatrix::combine(2.0, A, -1.0, B);
  EXPECT_EQ(C.at(0, 0), 2.0);
  EXPECT_EQ(C.at(0, 1), 3.0);
  EXPECT_EQ(C.at(1, 1), -3.0);
}

TEST(Pcg, SolvesRandomSpd) {
  fixture::Gen gen(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(5, 200);
    const SparseMatrix A = gen.spd(n, 0.05);
    const Vector b = gen.vector(n);
    Vector inv = A.diagonal_entries();
    for (auto& v : inv) v = 1.0 / v;
    PcgResult r = pcg(A, b, inv);
    ASSERT_TRUE(r.converged);
    const Vector Ax = A * r.x;
    double res = 0, bn = 0;
    for (int i = 0; i < n; ++i) {
      res += (Ax[i] - b[i]) * (Ax[i] - b[i]);
      bn += b[i] * b[i];
    }
    EXPECT_LE(std::sqrt(res / bn), 1e-12);
    for (std::size_t k = 1; k < r.energy.size(); ++k) EXPECT_LE(r.energy[k], r.energy[k - 1] + 1e-12 * std::abs(r.energy[k - 1]));
  }
}

TEST(Pcg, ZeroRightHandSide) {
  fixture::Gen gen(1);
  const SparseMatrix A = gen.spd(10);
  const Vector b(10, 0.0);
  PcgResult r = pcg(A, b, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  for (double v : r.x) EXPECT_EQ(v, 0.0);
}

TEST(Pcg, IndefiniteIsReported) {
  const SparseMatrix A = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {1, 1, -1.0}});
  const Vector b{1.0, 1.0};
  EXPECT_THROW(pcg(A, b, {}), NotPositiveDefinite);
}

TEST(Pcg, SingularNeumannWithProjection) {
  // 1D Laplacian with free ends: kernel = constants.
  const int n = 30;
  std::vector<Triplet> t;
  for (int i = 0; i + 1 < n; ++i) {
    t.push_back({i, i, 1.0});
    t.push_back({i + 1, i + 1, 1.0});
    t.push_back({i, i + 1, -1.0});
    t.push_back({i + 1, i, -1.0});
  }
  const SparseMatrix A = SparseMatrix::from_triplets(n, t);
  fixture::Gen gen(5);
  Vector b = gen.vector(n);
  project_zero_mean(b);
  PcgOptions o;
  o.project_constants = true;
  PcgResult r = pcg(A, b, {}, o);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(sum(r.x), 0.0, 1e-10);
  const Vector Ax = A * r.x;
  EXPECT_LE(fixture::max_abs_diff(Ax, b), 1e-10);
}

TEST(ComplexLU, MatchesDenseSolve) {
  fixture::Gen gen(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = gen.integer(2, 40);
    const SparseMatrix Ar = gen.spd(n, 0.3);
    std::vector<Triplet> ti;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (gen.uniform(0, 1) < 0.2) ti.push_back({i, j, gen.uniform(-1, 1)});
    const SparseMatrix Ai = SparseMatrix::from_triplets(n, ti);
    const Vector br = gen.vector(n), bi = gen.vector(n);
    const ComplexField u = complex_lu_solve(Ar, Ai, br, bi);
    Eigen::MatrixXcd A = dense(Ar).cast<Complex>() + Complex(0, 1) * dense(Ai).cast<Complex>();
    Eigen::VectorXcd b(n);
    for (int i = 0; i < n; ++i) b[i] = {br[i], bi[i]};
    Eigen::VectorXcd ref = A.fullPivLu().solve(b);
    for (int i = 0; i < n; ++i) EXPECT_LE(std::abs(u[i] - ref[i]), 1e-10 * (1 + std::abs(ref[i])));
    const ComplexField back = complex_multiply(Ar, Ai, u);
    for (int i = 0; i < n; ++i) EXPECT_LE(std::abs(back[i] - b[i]), 1e-10 * (1 + std::abs(b[i])));
  }
}

TEST(ComplexLU, OneByOne) {
  const SparseMatrix ar = SparseMatrix::from_triplets(1, {{0, 0, 2.0}});
  const SparseMatrix ai = SparseMatrix::from_triplets(1, {{0, 0, -1.0}});
  const Vector br{1.0}, bi{0.0};
  const ComplexField u = complex_lu_solve(ar, ai, br, bi);
  EXPECT_NEAR(std::abs(u[0] - Complex(1.0, 0.0) / Complex(2.0, -1.0)), 0.0, 1e-15);
}

TEST(ComplexLU, SingularThrows) {
  const SparseMatrix z = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  const SparseMatrix e = SparseMatrix::from_triplets(2, {});
  EXPECT_THROW(ComplexSparseLU(z, e), FactorizationError);
}

TEST(Eigen, PowerIterationMatchesLanczos) {
  fixture::Gen gen(17);
  const SparseMatrix A = gen.spd(80, 0.1);
  const Vector w(80, 1.0);
  const auto op = [&](std::span<const double> x, std::span<double> y) { A.multiply(x, y); };
  const double lmax = max_generalized_eigenvalue(op, w, 300);
  const auto ritz = lanczos_ritz_values(op, 80, 80);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(A));
  EXPECT_NEAR(ritz.back(), es.eigenvalues().maxCoeff(), 1e-8);
  EXPECT_LE(lmax, es.eigenvalues().maxCoeff() * (1 + 1e-12));
  EXPECT_GE(lmax, 0.95 * es.eigenvalues().maxCoeff());
}
