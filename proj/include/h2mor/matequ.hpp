#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace h2mor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Spectrum = std::vector<Complex>;

/// Real Schur factorization A = U T U^T with T upper quasi-triangular.
/// Keeping it around lets repeated Sylvester solves against the same
/// coefficient skip the O(k^3) factorization.
struct SchurForm {
  Matrix U;
  Matrix T;
  std::vector<Eigen::Index> block_starts;  // 1x1 or 2x2 diagonal blocks
  Spectrum eigenvalues;
};

SchurForm real_schur(const Matrix& A);

/// Solves A X A^T + W = X by Bartels-Stewart. The result is symmetrized.
/// Throws NotStable when rho(A) >= 1 - 1e-12 and SingularSystem on a
/// back-substitution pivot below 1e-14.
Matrix solve_stein(const Matrix& A, const Matrix& W);

/// Solves M X N + W = X (M: k x k, N: r x r, W: k x r).
/// Throws NoUniqueSolution if some |lambda_i(M) lambda_j(N) - 1| < singular_tol.
Matrix solve_discrete_sylvester(const Matrix& M, const Matrix& N,
                                const Matrix& W, double singular_tol = 1e-12);
Matrix solve_discrete_sylvester(const SchurForm& M, const SchurForm& N,
                                const Matrix& W, double singular_tol = 1e-12);

/// Moore-Penrose pseudoinverse through the SVD; singular values below
/// rel_tol * sigma_max are treated as zero.
Matrix pseudoinverse(const Matrix& A, double rel_tol = 1e-12);

/// Number of singular values above rel_tol * sigma_max.
Eigen::Index numerical_rank(const Matrix& A, double rel_tol);

Spectrum eigenvalues(const Matrix& A);
double spectral_radius(const Matrix& A);

/// min |a_i - b_j| over both lists; +inf when either is empty.
double min_separation(std::span<const Complex> a, std::span<const Complex> b);

struct PencilReport {
  bool is_regular = false;
  Spectrum spectra;         // finite generalized eigenvalues of (A, B)
  int infinite_count = 0;   // eigenvalues with beta == 0
  double min_separation = 0.0;
};

/// Regularity and generalized spectrum of the pencil (A, B), compared against
/// another spectrum. Irregular pencils are reported, never thrown.
PencilReport pencil_diagnostics(const Matrix& A, const Matrix& B,
                                std::span<const Complex> other_spectrum);

/// ||M X N + W - X||_F, used for residual certificates.
double sylvester_residual(const Matrix& M, const Matrix& N, const Matrix& W,
                          const Matrix& X);

}  // namespace h2mor
