#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "h2mor/ddgrad.hpp"
#include "h2mor/sysmodel.hpp"

namespace h2mor {

struct OptimParams {
  double alpha0 = 1.0;  // initial step size
  double c = 1e-4;      // Armijo parameter
  double rho = 0.5;     // backtracking factor
  double tol = 1e-3;    // stop when ||d||_F^2 < tol
  int max_iters = 500;
  int max_backtracks = 60;
  double min_eig_modulus = 1e-12;
  double pencil_separation = 1e-10;

  void validate() const;
};

/// One row per visited iterate. `step`/`backtracks` describe the step taken
/// from this iterate; the final row of a run has step 0.
struct IterRecord {
  int iter = 0;
  double f = 0.0;
  double D = 0.0;
  double step = 0.0;
  int backtracks = 0;
  std::optional<double> rel_h2_error;     // oracle mode only
  std::optional<double> gradient_audit;   // max rel. mismatch vs model gradients
  bool stable = true;
  double rom_norm = 0.0;                  // ||[Ahat Bhat; Chat 0]||_F
};

enum class StopReason { Converged, MaxIters, AssumptionViolated, BacktrackExhausted };

std::string_view to_string(StopReason reason);

struct OptimResult {
  Rom rom;
  std::vector<IterRecord> history;
  StopReason stop_reason = StopReason::MaxIters;
  std::string message;
};

using IterSink = std::function<void(const IterRecord&)>;

/// d = -[[gA, gB], [gC, 0]] in R^{(n+r) x (r+m)}.
Matrix stack_direction(const GradientTriple& g);
double direction_norm2(const GradientTriple& g);

/// Largest entrywise mismatch |a - b| / max|b| across the three blocks.
double gradient_mismatch(const GradientTriple& a, const GradientTriple& b);

/// Gradient descent with Armijo backtracking over stable reduced models,
/// driven purely by the reconstructed dual data. When `oracle` is given the
/// relative h2 error and a gradient-coincidence audit are logged per iterate.
OptimResult run_optimizer(const DualData& dual, const Rom& init,
                          const OptimParams& params,
                          const ModelOracle* oracle = nullptr,
                          const IterSink& sink = {});

}  // namespace h2mor
