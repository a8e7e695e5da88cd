#include "doctest.h"

#include "h2mor/error.hpp"
#include "h2mor/matequ.hpp"
#include "oracles.hpp"

using namespace h2mor;
using namespace h2mor::testing;

namespace {

double max_abs(const Matrix& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("stein: zero dynamics returns W") {
  const Matrix W = (Matrix(3, 3) << 2, 1, 0, 1, 3, -1, 0, -1, 1).finished();
  CHECK(max_abs(solve_stein(Matrix::Zero(3, 3), W) - W) == 0.0);
}

TEST_CASE("stein: scalar closed form") {
  const Matrix X = solve_stein(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.75));
  CHECK(X(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stein: random 5x5 matches Kronecker solve") {
  NormalSource rng(11);
  const Matrix A = random_stable(rng, 5, 0.9);
  const Matrix W = Matrix::Identity(5, 5);
  const Matrix X = solve_stein(A, W);
  CHECK(max_abs(X - kron_stein(A, W)) <= 1e-10 * max_abs(X));
}

TEST_CASE("stein: PSD and symmetric for PSD right-hand side") {
  NormalSource rng(12);
  for (int t = 0; t < 10; ++t) {
    const Matrix A = random_stable(rng, 7, 0.95);
    const Matrix G = rng.matrix(7, 2);
    const Matrix X = solve_stein(A, G * G.transpose());
    CHECK(max_abs(X - X.transpose()) == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(X);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * X.norm());
  }
}

TEST_CASE("stein: unstable A raises NotStable") {
  const Matrix A = Matrix::Identity(2, 2);
  try {
    solve_stein(A, Matrix::Identity(2, 2));
    FAIL("expected NotStable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotStable);
  }
}

TEST_CASE("sylvester: M = 0 returns W") {
  NormalSource rng(13);
  const Matrix W = rng.matrix(4, 2);
  CHECK(max_abs(solve_discrete_sylvester(Matrix::Zero(4, 4), rng.matrix(2, 2), W) - W) <= 1e-14 * max_abs(W));
}

TEST_CASE("sylvester: scalar closed form") {
  const Matrix X = solve_discrete_sylvester(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.5),
                                            Matrix::Constant(1, 1, 0.75));
  CHECK(X(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sylvester: random 6x3 matches Kronecker solve") {
  NormalSource rng(14);
  const Matrix M = random_stable(rng, 6, 0.9);
  const Matrix N = random_stable(rng, 3, 0.8);
  const Matrix W = rng.matrix(6, 3);
  const Matrix X = solve_discrete_sylvester(M, N, W);
  CHECK(max_abs(X - kron_sylvester(M, N, W)) <= 1e-10 * max_abs(X));
  CHECK(sylvester_residual(M, N, W, X) <= 1e-12 * X.norm());
}

TEST_CASE("sylvester: non-stable factors are fine when products avoid 1") {
  NormalSource rng(15);
  const Matrix M = 1.5 * Matrix::Identity(3, 3) + 0.1 * rng.matrix(3, 3);
  const Matrix N = 0.2 * rng.matrix(2, 2);
  const Matrix W = rng.matrix(3, 2);
  const Matrix X = solve_discrete_sylvester(M, N, W);
  CHECK(max_abs(X - kron_sylvester(M, N, W)) <= 1e-10 * max_abs(X));
}

TEST_CASE("sylvester: reproduces A^T S Ahat - Chat = S") {
  NormalSource rng(16);
  const Matrix A = random_stable(rng, 8, 0.9);
  const Matrix Ah = random_stable(rng, 3, 0.7);
  const Matrix Ch = rng.matrix(8, 3);
  const Matrix S = solve_discrete_sylvester(A.transpose(), Ah, -Ch);
  CHECK(max_abs(A.transpose() * S * Ah - Ch - S) <= 1e-10);
}

TEST_CASE("sylvester: eigenvalue product 1 raises NoUniqueSolution") {
  const Matrix M = Matrix::Constant(1, 1, 2.0);
  const Matrix N = Matrix::Constant(1, 1, 0.5);
  try {
    solve_discrete_sylvester(M, N, Matrix::Ones(1, 1));
    FAIL("expected NoUniqueSolution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoUniqueSolution);
  }
}

TEST_CASE("sylvester: complex-conjugate blocks on both sides") {
  // rotation blocks force 2x2 diagonal blocks in both Schur forms
  NormalSource rng(17);
  Matrix M = Matrix::Zero(5, 5);
  M.block(0, 0, 2, 2) << 0.3, -0.6, 0.6, 0.3;
  M.block(2, 2, 2, 2) << -0.2, 0.5, -0.5, -0.2;
  M(4, 4) = 0.4;
  const Matrix T = rng.matrix(5, 5) + 3 * Matrix::Identity(5, 5);
  M = T * M * T.inverse();
  Matrix N(2, 2);
  N << 0.1, 0.7, -0.7, 0.1;
  const Matrix W = rng.matrix(5, 2);
  const Matrix X = solve_discrete_sylvester(M, N, W);
  CHECK(max_abs(X - kron_sylvester(M, N, W)) <= 1e-10 * max_abs(X));
}

TEST_CASE("pseudoinverse: identity, full column rank, rank one") {
  CHECK(max_abs(pseudoinverse(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)) <= 1e-15);

  NormalSource rng(18);
  const Matrix A = rng.matrix(7, 3);
  CHECK(max_abs(pseudoinverse(A) * A - Matrix::Identity(3, 3)) <= 1e-10);

  const Matrix R1 = (Matrix(2, 2) << 1, 0, 1, 0).finished();
  const Matrix want = (Matrix(2, 2) << 0.5, 0.5, 0, 0).finished();
  CHECK(max_abs(pseudoinverse(R1) - want) <= 1e-15);
}

TEST_CASE("pseudoinverse: Penrose identities on rank-deficient matrices") {
  NormalSource rng(19);
  for (int t = 0; t < 5; ++t) {
    const Matrix A = rng.matrix(6, 2) * rng.matrix(2, 5);
    const Matrix Ap = pseudoinverse(A);
    CHECK(max_abs(Ap * A * Ap - Ap) <= 1e-10 * max_abs(Ap));
    CHECK(max_abs(A * Ap * A - A) <= 1e-10 * max_abs(A));
    CHECK(numerical_rank(A, 1e-10) == 2);
  }
}

TEST_CASE("pencil diagnostics") {
  SUBCASE("identity pencil") {
    const std::vector<Complex> other{Complex(2.0, 0.0)};
    const PencilReport rep = pencil_diagnostics(Matrix::Identity(3, 3), Matrix::Identity(3, 3), other);
    CHECK(rep.is_regular);
    REQUIRE(rep.spectra.size() == 3);
    for (const Complex& l : rep.spectra) CHECK(std::abs(l - 1.0) <= 1e-14);
    CHECK(rep.min_separation == doctest::Approx(1.0));
  }
  SUBCASE("zero pencil is singular") {
    const PencilReport rep = pencil_diagnostics(Matrix::Zero(3, 3), Matrix::Zero(3, 3), {});
    CHECK_FALSE(rep.is_regular);
    CHECK(rep.spectra.empty());
    CHECK(rep.min_separation >= 0.0);
  }
  SUBCASE("B = I gives the eigenvalues of A") {
    NormalSource rng(20);
    const Matrix A = rng.matrix(6, 6);
    const PencilReport rep = pencil_diagnostics(A, Matrix::Identity(6, 6), {});
    REQUIRE(rep.is_regular);
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(A).eigenvalues();
    REQUIRE(rep.spectra.size() == 6);
    for (const Complex& l : rep.spectra) {
      double best = 1e300;
      for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::min(best, std::abs(ev(i) - l));
      CHECK(best <= 1e-10);
    }
  }
  SUBCASE("singular B counts infinite eigenvalues") {
    Matrix B = Matrix::Identity(3, 3);
    B(2, 2) = 0.0;
    const PencilReport rep = pencil_diagnostics(Matrix::Identity(3, 3), B, {});
    CHECK(rep.is_regular);
    CHECK(rep.infinite_count == 1);
    CHECK(rep.spectra.size() == 2);
  }
}

TEST_CASE("spectral radius") {
  CHECK(spectral_radius(Matrix::Zero(3, 3)) == 0.0);
  const Matrix D = Eigen::Vector2d(0.9, -0.5).asDiagonal();
  CHECK(spectral_radius(D) == doctest::Approx(0.9).epsilon(1e-15));
  const Matrix companion = (Matrix(2, 2) << 0, 0.25, 1, 0).finished();
  CHECK(spectral_radius(companion) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("min separation") {
  const std::vector<Complex> a{Complex(0, 0), Complex(1, 1)};
  const std::vector<Complex> b{Complex(3, 0), Complex(1, 0.5)};
  CHECK(min_separation(a, b) == doctest::Approx(0.5));
  CHECK(std::isinf(min_separation(a, {})));
}
