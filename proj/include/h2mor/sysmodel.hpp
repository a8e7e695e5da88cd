#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "h2mor/matequ.hpp"

namespace h2mor {

/// Full-order discrete-time system x+ = A x + B u, y = C x.
/// The reduction pipeline always uses C = I; a general C is kept so the
/// model-based oracle can be exercised on arbitrary outputs.
struct LtiSystem {
  Matrix A;
  Matrix B;
  Matrix C;

  static LtiSystem with_identity_output(Matrix A, Matrix B);

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  /// Throws InvalidArgument on inconsistent shapes.
  void validate() const;
};

/// Reduced model (Ahat, Bhat, Chat); Chat maps the reduced state back to the
/// p-dimensional output.
struct Rom {
  Matrix A;
  Matrix B;
  Matrix C;

  Eigen::Index r() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  void validate() const;
  static Rom zero(Eigen::Index r, Eigen::Index m, Eigen::Index p);
};

/// Gradient (or gradient-like) matrices with respect to Ahat, Bhat, Chat.
struct GradientTriple {
  Matrix gA;
  Matrix gB;
  Matrix gC;
};

/// Blocks of the error-system gramians E_c = [SigmaC R; R^T P] and
/// E_o = [SigmaO S; S^T Q].
struct ErrorGramians {
  Matrix SigmaC;
  Matrix SigmaO;
  Matrix P;
  Matrix Q;
  Matrix R;
  Matrix S;
};

struct ModelGradients {
  GradientTriple grad;
  Matrix P, Q, R, S;
  double f = 0.0;
};

struct SyntheticSpec {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double h = 0.1;
  std::uint64_t seed = 0;
};

/// 0 < |lambda_i(A)| < 1 with the floating-point lower bound `min_modulus`.
bool satisfies_modulus_bounds(const Spectrum& spectrum, double min_modulus = 1e-12);

double h2_norm(const LtiSystem& sys);

/// ||H - Hhat||_h2 from the controllability gramian of the error system.
double h2_error(const LtiSystem& sys, const Rom& rom);

ErrorGramians error_gramians(const LtiSystem& sys, const Rom& rom);

/// f(Ahat, Bhat, Chat) = tr(Chat P Chat^T) - 2 tr(C R Chat^T).
double model_objective(const LtiSystem& sys, const Rom& rom);

/// Exact gradients of f from P, Q, R, S solved with the true (A, B, C).
ModelGradients model_based_gradients(const LtiSystem& sys, const Rom& rom);

/// Caches the Schur form of A and tr(C SigmaC C^T) so that repeated error and
/// gradient evaluations against one system cost O(n^2 r) each.
class ModelOracle {
 public:
  explicit ModelOracle(LtiSystem sys);

  const LtiSystem& system() const { return sys_; }
  double h2_norm() const { return std::sqrt(trace_sigma_c_); }
  double trace_sigma_c() const { return trace_sigma_c_; }

  double h2_error(const Rom& rom) const;
  double relative_error(const Rom& rom) const;
  ModelGradients gradients(const Rom& rom) const;

 private:
  LtiSystem sys_;
  SchurForm schur_A_;
  SchurForm schur_At_;
  double trace_sigma_c_ = 0.0;
};

ComplexMatrix transfer_eval(const Matrix& A, const Matrix& B, const Matrix& C,
                            Complex z);
inline ComplexMatrix transfer_eval(const LtiSystem& sys, Complex z) {
  return transfer_eval(sys.A, sys.B, sys.C, z);
}
inline ComplexMatrix transfer_eval(const Rom& rom, Complex z) {
  return transfer_eval(rom.A, rom.B, rom.C, z);
}

/// Returns x_0 .. x_T for inputs u_0 .. u_{T-1}.
std::vector<Vector> simulate(const LtiSystem& sys, const Vector& x0,
                             const std::vector<Vector>& inputs);

/// Markov parameters C A^{k-1} B for k = 1..count.
std::vector<Matrix> markov_parameters(const LtiSystem& sys, int count);

/// Stable system A = exp(Ac h), B = (int_0^h exp(Ac t) dt) Bc with
/// Ac = (J - R) Q, J skew-symmetric and R, Q symmetric positive definite.
LtiSystem generate_synthetic(const SyntheticSpec& spec);

}  // namespace h2mor
