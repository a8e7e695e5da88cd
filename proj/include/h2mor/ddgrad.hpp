#pragma once

#include <optional>
#include <utility>

#include "h2mor/dataio.hpp"
#include "h2mor/matequ.hpp"
#include "h2mor/sysmodel.hpp"

namespace h2mor {

/// Dual-system quantities reconstructed from snapshot data. Everything here
/// depends only on the ensemble, so it is built once and shared by every
/// iterate of the optimizer.
struct DualData {
  Matrix Z2;   // N x n, equals X1 A on exact data
  Matrix ZB1;  // m x N, equals B^T X1^T
  Matrix UB1;  // N x n, equals U1 B^T
  Matrix M_R;  // n x n, X1^+ Z2
  Matrix M_S;  // n x n, X1^+ (X2 - UB1)
  Matrix G_B;  // n x m, X1^+ ZB1^T
  Matrix U1_pinv;   // m x N
  bool u1_full_rank = false;
  std::optional<Matrix> known_B;  // set on the B-known path; S_B = B^T S

  SchurForm schur_MR;
  SchurForm schur_MS;
  PencilReport pencil_R;  // (M_R, X1^+ X1); min_separation unset here
  PencilReport pencil_S;  // (M_S, X1^+ X1)

  Eigen::Index n() const { return M_R.rows(); }
  Eigen::Index m() const { return G_B.cols(); }
};

struct GramianSet {
  Matrix P;   // r x r
  Matrix Q;   // r x r
  Matrix R;   // n x r
  Matrix S;   // n x r
  Matrix SB;  // m x r
};

/// Solves [X1 U1] [Z2^T; ZB1] = X2 X1^T and X1 UB1^T = X1 X2^T - Z2 X1^T in
/// the least-squares sense. Throws RankDeficientData when rank [X1 U1] < n+m
/// or rank X1 < n, unless `allow_rank_deficient` is set.
DualData reconstruct_dual(const DataEnsemble& ens, bool allow_rank_deficient = false);

/// Variant for a known input matrix: ZB1 = B^T X1^T and UB1 = U1 B^T are
/// formed directly, so only rank X1 = n is required.
DualData reconstruct_dual_B_known(const DataEnsemble& ens, const Matrix& B);

/// M_R R Ahat^T + G_B Bhat^T = R.
Matrix solve_R(const DualData& dual, const Rom& rom);
/// M_S S Ahat - Chat = S.
Matrix solve_S(const DualData& dual, const Rom& rom);
/// U1 S_B = UB1 S in the least-squares sense (m x r).
Matrix solve_SB(const DataEnsemble& ens, const DualData& dual, const Matrix& S);
Matrix solve_SB(const DualData& dual, const Matrix& S);

/// P and Q of the reduced model (symmetrized).
std::pair<Matrix, Matrix> rom_gramians(const Rom& rom);

GradientTriple data_gradients(const Rom& rom, const Matrix& P, const Matrix& Q,
                              const Matrix& R, const Matrix& S, const Matrix& SB);

/// tr(Chat P Chat^T) - 2 tr(R Chat^T); equals ||H - Hhat||^2 - tr(SigmaC) on
/// exact data, hence may be negative.
double objective_f(const Rom& rom, const Matrix& P, const Matrix& R);

GradientTriple data_gradients_B_known(const DataEnsemble& ens, const Matrix& B,
                                      const Rom& rom);

/// Pencil checks of the Sylvester solvability conditions for this rom:
/// (M_R, I) and (M_S, I) must be regular and their spectra must stay away
/// from the spectrum of (I_r, Ahat), i.e. from 1 / lambda(Ahat).
std::pair<PencilReport, PencilReport> check_pencils(const DualData& dual,
                                                    const Rom& rom);
bool pencils_ok(const std::pair<PencilReport, PencilReport>& reports,
                double min_separation = 1e-10);

struct DataEvaluation {
  GramianSet gramians;
  GradientTriple grad;
  double f = 0.0;
};

/// Full per-iterate pipeline: P, Q, R, S, S_B, gradients and f.
DataEvaluation evaluate_data_gradients(const DualData& dual, const Rom& rom);

/// Objective only (P and R); used for line-search candidates.
double evaluate_objective(const DualData& dual, const Rom& rom);

}  // namespace h2mor
