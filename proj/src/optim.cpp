#include "h2mor/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "h2mor/error.hpp"

namespace h2mor {
namespace {

bool is_assumption_failure(ErrorCode code) {
  return code == ErrorCode::NoUniqueSolution ||
         code == ErrorCode::AssumptionViolated ||
         code == ErrorCode::SingularAhat || code == ErrorCode::NotStable;
}

double rom_frobenius(const Rom& rom) {
  return std::sqrt(rom.A.squaredNorm() + rom.B.squaredNorm() + rom.C.squaredNorm());
}

Rom take_step(const Rom& rom, const GradientTriple& g, double alpha) {
  return Rom{rom.A - alpha * g.gA, rom.B - alpha * g.gB, rom.C - alpha * g.gC};
}

}  // namespace

void OptimParams::validate() const {
  std::ostringstream os;
  if (!(alpha0 > 0.0)) os << "alpha0 must be > 0; ";
  if (!(c > 0.0 && c < 1.0)) os << "c must lie in (0, 1); ";
  if (!(rho > 0.0 && rho < 1.0)) os << "rho must lie in (0, 1); ";
  if (!(tol > 0.0)) os << "tol must be > 0; ";
  if (max_iters < 0) os << "max_iters must be >= 0; ";
  if (max_backtracks < 1) os << "max_backtracks must be >= 1; ";
  if (!os.str().empty()) throw Error(ErrorCode::InvalidArgument, os.str());
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "Converged";
    case StopReason::MaxIters: return "MaxIters";
    case StopReason::AssumptionViolated: return "AssumptionViolated";
    case StopReason::BacktrackExhausted: return "BacktrackExhausted";
  }
  return "Unknown";
}

Matrix stack_direction(const GradientTriple& g) {
  const Eigen::Index r = g.gA.rows(), m = g.gB.cols(), n = g.gC.rows();
  Matrix d = Matrix::Zero(n + r, r + m);
  d.topLeftCorner(r, r) = -g.gA;
  d.topRightCorner(r, m) = -g.gB;
  d.bottomLeftCorner(n, r) = -g.gC;
  return d;
}

double direction_norm2(const GradientTriple& g) {
  return g.gA.squaredNorm() + g.gB.squaredNorm() + g.gC.squaredNorm();
}

double gradient_mismatch(const GradientTriple& a, const GradientTriple& b) {
  auto block = [](const Matrix& x, const Matrix& y) {
    if (y.size() == 0) return 0.0;
    const double scale = y.cwiseAbs().maxCoeff();
    const double diff = (x - y).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
  };
  return std::max({block(a.gA, b.gA), block(a.gB, b.gB), block(a.gC, b.gC)});
}

OptimResult run_optimizer(const DualData& dual, const Rom& init,
                          const OptimParams& params, const ModelOracle* oracle,
                          const IterSink& sink) {
  params.validate();
  init.validate();
  if (!satisfies_modulus_bounds(eigenvalues(init.A), params.min_eig_modulus))
    throw Error(ErrorCode::InvalidArgument,
                "initial Ahat must have all eigenvalues with 0 < |lambda| < 1");

  OptimResult result;
  result.rom = init;
  auto emit = [&](const IterRecord& rec) {
    result.history.push_back(rec);
    if (sink) sink(rec);
  };

  for (int iter = 1;; ++iter) {
    const Rom& cur = result.rom;
    IterRecord rec;
    rec.iter = iter;
    rec.rom_norm = rom_frobenius(cur);

    const auto pencils = check_pencils(dual, cur);
    if (!pencils_ok(pencils, params.pencil_separation)) {
      std::ostringstream os;
      os << "pencil check failed at iterate " << iter << " (separations "
         << pencils.first.min_separation << ", " << pencils.second.min_separation << ")";
      result.stop_reason = StopReason::AssumptionViolated;
      result.message = os.str();
      rec.stable = satisfies_modulus_bounds(eigenvalues(cur.A), params.min_eig_modulus);
      emit(rec);
      break;
    }

    DataEvaluation ev;
    try {
      ev = evaluate_data_gradients(dual, cur);
    } catch (const Error& e) {
      if (!is_assumption_failure(e.code())) throw;
      result.stop_reason = StopReason::AssumptionViolated;
      result.message = e.what();
      emit(rec);
      break;
    }
    rec.f = ev.f;
    rec.D = direction_norm2(ev.grad);
    rec.stable = true;
    if (oracle) {
      rec.rel_h2_error = oracle->relative_error(cur);
      rec.gradient_audit = gradient_mismatch(ev.grad, oracle->gradients(cur).grad);
    }

    if (rec.D < params.tol) {
      result.stop_reason = StopReason::Converged;
      emit(rec);
      break;
    }
    if (iter > params.max_iters) {
      result.stop_reason = StopReason::MaxIters;
      emit(rec);
      break;
    }

    bool accepted = false;
    for (int b = 0; b < params.max_backtracks; ++b) {
      const double alpha = params.alpha0 * std::pow(params.rho, b);
      Rom cand = take_step(cur, ev.grad, alpha);
      if (!cand.A.allFinite() || !cand.B.allFinite() || !cand.C.allFinite()) continue;
      if (!satisfies_modulus_bounds(eigenvalues(cand.A), params.min_eig_modulus)) continue;
      double f_cand = 0.0;
      try {
        f_cand = evaluate_objective(dual, cand);
      } catch (const Error& e) {
        if (!is_assumption_failure(e.code())) throw;
        continue;
      }
      if (f_cand <= ev.f - params.c * alpha * rec.D) {
        rec.step = alpha;
        rec.backtracks = b;
        emit(rec);
        result.rom = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rec.backtracks = params.max_backtracks;
      result.stop_reason = StopReason::BacktrackExhausted;
      std::ostringstream os;
      os << "no acceptable step after " << params.max_backtracks << " trials at iterate " << iter;
      result.message = os.str();
      emit(rec);
      break;
    }
  }
  return result;
}

}  // namespace h2mor
