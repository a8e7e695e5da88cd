#include "h2mor/ddgrad.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "h2mor/error.hpp"

namespace h2mor {
namespace {

void finish_dual(DualData& dual, const Matrix& X1_pinv, const DataEnsemble& ens) {
  const Matrix X1_proj = X1_pinv * ens.X1;
  dual.M_R = X1_pinv * dual.Z2;
  dual.M_S = X1_pinv * (ens.X2 - dual.UB1);
  dual.G_B = X1_pinv * dual.ZB1.transpose();
  dual.U1_pinv = pseudoinverse(ens.U1);
  dual.u1_full_rank = numerical_rank(ens.U1, kRankTolerance) == ens.m();
  dual.schur_MR = real_schur(dual.M_R);
  dual.schur_MS = real_schur(dual.M_S);
  dual.pencil_R = pencil_diagnostics(dual.M_R, X1_proj, {});
  dual.pencil_S = pencil_diagnostics(dual.M_S, X1_proj, {});
}

void require_rom_shape(const DualData& dual, const Rom& rom) {
  rom.validate();
  if (rom.m() != dual.m() || rom.p() != dual.n()) {
    std::ostringstream os;
    os << "rom (m=" << rom.m() << ", p=" << rom.p() << ") does not match data (n="
       << dual.n() << ", m=" << dual.m() << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

}  // namespace

DualData reconstruct_dual(const DataEnsemble& ens, bool allow_rank_deficient) {
  ens.validate();
  const Eigen::Index n = ens.n(), m = ens.m(), N = ens.N();
  const AssumptionReport rep = check_assumptions(ens, n, m);
  if (!allow_rank_deficient && !(rep.b1_holds && rep.b2_holds)) {
    std::ostringstream os;
    os << "rank [X1 U1] = " << rep.rank_X1U1 << " (need " << n + m
       << "), rank X1 = " << rep.rank_X1 << " (need " << n << ") with N = " << N;
    throw Error(ErrorCode::RankDeficientData, os.str());
  }

  Matrix XU(N, n + m);
  XU << ens.X1, ens.U1;
  const Matrix stacked = pseudoinverse(XU) * (ens.X2 * ens.X1.transpose());

  DualData dual;
  dual.Z2 = stacked.topRows(n).transpose();
  dual.ZB1 = stacked.bottomRows(m);
  const Matrix X1_pinv = pseudoinverse(ens.X1);
  dual.UB1 = (X1_pinv * (ens.X1 * ens.X2.transpose() - dual.Z2 * ens.X1.transpose())).transpose();
  finish_dual(dual, X1_pinv, ens);
  return dual;
}

DualData reconstruct_dual_B_known(const DataEnsemble& ens, const Matrix& B) {
  ens.validate();
  if (B.rows() != ens.n() || B.cols() != ens.m())
    throw Error(ErrorCode::InvalidArgument, "B must be n x m");
  const Eigen::Index rank_X1 = numerical_rank(ens.X1, kRankTolerance);
  if (rank_X1 != ens.n()) {
    std::ostringstream os;
    os << "rank X1 = " << rank_X1 << " (need " << ens.n() << ")";
    throw Error(ErrorCode::RankDeficientData, os.str());
  }
  const Matrix X1_pinv = pseudoinverse(ens.X1);
  DualData dual;
  dual.ZB1 = B.transpose() * ens.X1.transpose();
  dual.UB1 = ens.U1 * B.transpose();
  dual.Z2 = (X1_pinv * (ens.X2 * ens.X1.transpose() - ens.U1 * dual.ZB1)).transpose();
  dual.known_B = B;
  finish_dual(dual, X1_pinv, ens);
  return dual;
}

Matrix solve_R(const DualData& dual, const Rom& rom) {
  require_rom_shape(dual, rom);
  if (!dual.pencil_R.is_regular)
    throw Error(ErrorCode::AssumptionViolated, "pencil (M_R, X1^+ X1) is not regular");
  return solve_discrete_sylvester(dual.schur_MR, real_schur(rom.A.transpose()),
                                  dual.G_B * rom.B.transpose());
}

Matrix solve_S(const DualData& dual, const Rom& rom) {
  require_rom_shape(dual, rom);
  if (!dual.pencil_S.is_regular)
    throw Error(ErrorCode::AssumptionViolated, "pencil (M_S, X1^+ X1) is not regular");
  return solve_discrete_sylvester(dual.schur_MS, real_schur(rom.A), -rom.C);
}

Matrix solve_SB(const DualData& dual, const Matrix& S) {
  if (dual.known_B) return dual.known_B->transpose() * S;
  if (!dual.u1_full_rank)
    throw Error(ErrorCode::RankDeficientData, "rank U1 < m, S_B is not unique");
  return dual.U1_pinv * (dual.UB1 * S);
}

Matrix solve_SB(const DataEnsemble& ens, const DualData& dual, const Matrix& S) {
  if (ens.N() != dual.UB1.rows() || S.rows() != dual.n())
    throw Error(ErrorCode::InvalidArgument, "S_B inputs have inconsistent shapes");
  return solve_SB(dual, S);
}

std::pair<Matrix, Matrix> rom_gramians(const Rom& rom) {
  rom.validate();
  Matrix P = solve_stein(rom.A, rom.B * rom.B.transpose());
  Matrix Q = solve_stein(rom.A.transpose(), rom.C.transpose() * rom.C);
  return {std::move(P), std::move(Q)};
}

GradientTriple data_gradients(const Rom& rom, const Matrix& P, const Matrix& Q,
                              const Matrix& R, const Matrix& S, const Matrix& SB) {
  rom.validate();
  const Spectrum spec = eigenvalues(rom.A);
  double min_mod = std::numeric_limits<double>::infinity();
  for (const Complex& l : spec) min_mod = std::min(min_mod, std::abs(l));
  if (rom.r() > 0 && min_mod < 1e-12) {
    std::ostringstream os;
    os << "Ahat has an eigenvalue of modulus " << min_mod;
    throw Error(ErrorCode::SingularAhat, os.str());
  }
  // (S^T R - S_B^T Bhat^T) Ahat^{-T} = (Ahat^{-1} (S^T R - S_B^T Bhat^T)^T)^T
  const Matrix coupling = S.transpose() * R - SB.transpose() * rom.B.transpose();
  Eigen::PartialPivLU<Matrix> lu(rom.A);
  GradientTriple g;
  g.gA = 2.0 * (Q * rom.A * P + lu.solve(coupling.transpose()).transpose());
  g.gB = 2.0 * (SB.transpose() + Q * rom.B);
  g.gC = 2.0 * (rom.C * P - R);
  return g;
}

double objective_f(const Rom& rom, const Matrix& P, const Matrix& R) {
  return (rom.C * P * rom.C.transpose()).trace() - 2.0 * (R * rom.C.transpose()).trace();
}

GradientTriple data_gradients_B_known(const DataEnsemble& ens, const Matrix& B,
                                      const Rom& rom) {
  const DualData dual = reconstruct_dual_B_known(ens, B);
  return evaluate_data_gradients(dual, rom).grad;
}

std::pair<PencilReport, PencilReport> check_pencils(const DualData& dual,
                                                    const Rom& rom) {
  Spectrum reciprocal;
  for (const Complex& l : eigenvalues(rom.A))
    if (l != 0.0) reciprocal.push_back(1.0 / l);
  PencilReport pr = dual.pencil_R;
  PencilReport ps = dual.pencil_S;
  pr.min_separation = min_separation(pr.spectra, reciprocal);
  ps.min_separation = min_separation(ps.spectra, reciprocal);
  return {std::move(pr), std::move(ps)};
}

bool pencils_ok(const std::pair<PencilReport, PencilReport>& reports,
                double min_sep) {
  return reports.first.is_regular && reports.second.is_regular &&
         reports.first.min_separation > min_sep &&
         reports.second.min_separation > min_sep;
}

DataEvaluation evaluate_data_gradients(const DualData& dual, const Rom& rom) {
  DataEvaluation ev;
  auto [P, Q] = rom_gramians(rom);
  ev.gramians.P = std::move(P);
  ev.gramians.Q = std::move(Q);
  ev.gramians.R = solve_R(dual, rom);
  ev.gramians.S = solve_S(dual, rom);
  ev.gramians.SB = solve_SB(dual, ev.gramians.S);
  ev.grad = data_gradients(rom, ev.gramians.P, ev.gramians.Q, ev.gramians.R,
                           ev.gramians.S, ev.gramians.SB);
  ev.f = objective_f(rom, ev.gramians.P, ev.gramians.R);
  return ev;
}

double evaluate_objective(const DualData& dual, const Rom& rom) {
  const Matrix P = solve_stein(rom.A, rom.B * rom.B.transpose());
  return objective_f(rom, P, solve_R(dual, rom));
}

}  // namespace h2mor
