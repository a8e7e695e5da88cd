#include "doctest.h"

#include "h2mor/error.hpp"
#include "h2mor/initmor.hpp"
#include "h2mor/optim.hpp"
#include "oracles.hpp"

using namespace h2mor;
using namespace h2mor::testing;

namespace {

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

struct Setup {
  LtiSystem sys;
  DataEnsemble ens;
  DualData dual;
};

Setup desk(std::uint64_t seed) {
  NormalSource rng(seed);
  LtiSystem sys = random_system(rng, 10, 2, 0.85);
  DataEnsemble ens = generate_ensemble(sys, 12, {0.0, derive_seed(seed, 1)});
  DualData dual = reconstruct_dual(ens);
  return {std::move(sys), std::move(ens), std::move(dual)};
}

}  // namespace

TEST_CASE("direction stacking") {
  NormalSource rng(71);
  const GradientTriple zero{Matrix::Zero(3, 3), Matrix::Zero(3, 2), Matrix::Zero(10, 3)};
  const Matrix d0 = stack_direction(zero);
  CHECK(d0.rows() == 13);
  CHECK(d0.cols() == 5);
  CHECK(max_abs(d0) == 0.0);
  CHECK(direction_norm2(zero) == 0.0);

  const GradientTriple unit{Matrix::Ones(3, 3), Matrix::Zero(3, 2), Matrix::Zero(10, 3)};
  CHECK(direction_norm2(unit) == 9.0);

  const GradientTriple g{rng.matrix(3, 3), rng.matrix(3, 2), rng.matrix(10, 3)};
  const Matrix d = stack_direction(g);
  CHECK(max_abs(d.topLeftCorner(3, 3) + g.gA) == 0.0);
  CHECK(max_abs(d.topRightCorner(3, 2) + g.gB) == 0.0);
  CHECK(max_abs(d.bottomLeftCorner(10, 3) + g.gC) == 0.0);
  CHECK(max_abs(d.bottomRightCorner(10, 2)) == 0.0);
  double sum = 0.0;
  for (const Matrix* M : {&g.gA, &g.gB, &g.gC})
    for (Eigen::Index i = 0; i < M->size(); ++i) sum += M->data()[i] * M->data()[i];
  CHECK(direction_norm2(g) == doctest::Approx(sum).epsilon(1e-14));
  CHECK(d.squaredNorm() == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(OptimParams{}.validate());
  OptimParams p;
  p.rho = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.c = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.alpha0 = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.tol = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  const OptimParams defaults;
  CHECK(defaults.alpha0 == 1.0);
  CHECK(defaults.c == 1e-4);
  CHECK(defaults.rho == 0.5);
  CHECK(defaults.tol == 1e-3);
  CHECK(defaults.max_iters == 500);
  CHECK(defaults.max_backtracks == 60);
}

TEST_CASE("stationary initial rom converges immediately") {
  const Setup s = desk(72);
  NormalSource rng(73);
  const Rom init{random_stable(rng, 3, 0.6), Matrix::Zero(3, 2), Matrix::Zero(10, 3)};
  const OptimResult res = run_optimizer(s.dual, init, {});
  CHECK(res.stop_reason == StopReason::Converged);
  REQUIRE(res.history.size() == 1);
  CHECK(res.history[0].iter == 1);
  CHECK(res.history[0].D == 0.0);
  CHECK(max_abs(res.rom.A - init.A) == 0.0);
  CHECK(max_abs(res.rom.B - init.B) == 0.0);
  CHECK(max_abs(res.rom.C - init.C) == 0.0);
}

TEST_CASE("unstable initial rom is rejected") {
  const Setup s = desk(74);
  NormalSource rng(75);
  Rom init = random_rom(rng, 3, 2, 10);
  init.A *= 5.0;
  CHECK_THROWS_AS(run_optimizer(s.dual, init, {}), Error);
}

TEST_CASE("descent contract on a noiseless desk instance") {
  const Setup s = desk(76);
  const ModelOracle oracle(s.sys);
  const TrajectorySet traj = generate_trajectories(s.sys, 12, 10, {0.0, 77});
  const Rom init = init_dmdc(traj, 3);
  OptimParams params;
  params.max_iters = 60;
  std::vector<IterRecord> streamed;
  const OptimResult res = run_optimizer(s.dual, init, params, &oracle,
                                        [&](const IterRecord& rec) { streamed.push_back(rec); });
  REQUIRE(res.history.size() >= 2);
  CHECK(streamed.size() == res.history.size());
  CHECK((res.stop_reason == StopReason::Converged || res.stop_reason == StopReason::MaxIters));
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const IterRecord& rec = res.history[i];
    CHECK(rec.iter == static_cast<int>(i) + 1);
    CHECK(rec.D >= 0.0);
    CHECK(rec.stable);
    REQUIRE(rec.gradient_audit.has_value());
    CHECK(*rec.gradient_audit <= 1e-8);
    REQUIRE(rec.rel_h2_error.has_value());
    if (i + 1 < res.history.size()) {
      const IterRecord& next = res.history[i + 1];
      CHECK(rec.step == doctest::Approx(params.alpha0 * std::pow(params.rho, rec.backtracks)).epsilon(1e-15));
      CHECK(next.f <= rec.f - params.c * rec.step * rec.D + 1e-14 * std::abs(rec.f));
    }
  }
  CHECK(*res.history.back().rel_h2_error <= *res.history.front().rel_h2_error);
  CHECK(satisfies_modulus_bounds(eigenvalues(res.rom.A)));
  CHECK(std::abs(oracle.relative_error(res.rom) - *res.history.back().rel_h2_error) <= 1e-12);
}

TEST_CASE("iteration cap and determinism") {
  const Setup s = desk(78);
  NormalSource rng(79);
  const Rom init = random_rom(rng, 3, 2, 10, 0.5);
  OptimParams params;
  params.max_iters = 5;
  const OptimResult a = run_optimizer(s.dual, init, params);
  const OptimResult b = run_optimizer(s.dual, init, params);
  CHECK(a.stop_reason == StopReason::MaxIters);
  CHECK(a.history.size() == 6);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].f == b.history[i].f);
    CHECK(a.history[i].D == b.history[i].D);
    CHECK(a.history[i].backtracks == b.history[i].backtracks);
    CHECK_FALSE(a.history[i].rel_h2_error.has_value());
  }
  CHECK(max_abs(a.rom.A - b.rom.A) == 0.0);
}

TEST_CASE("backtracking exhaustion is reported") {
  const Setup s = desk(80);
  NormalSource rng(81);
  const Rom init = random_rom(rng, 3, 2, 10, 0.5);
  OptimParams params;
  params.alpha0 = 1e6;
  params.max_backtracks = 2;
  const OptimResult res = run_optimizer(s.dual, init, params);
  CHECK(res.stop_reason == StopReason::BacktrackExhausted);
  CHECK(res.history.back().backtracks == 2);
  CHECK(max_abs(res.rom.A - init.A) == 0.0);
}

TEST_CASE("gradient mismatch measure") {
  NormalSource rng(82);
  const GradientTriple a{rng.matrix(2, 2), rng.matrix(2, 1), rng.matrix(4, 2)};
  CHECK(gradient_mismatch(a, a) == 0.0);
  GradientTriple b = a;
  b.gB(0, 0) += 0.5 * a.gB.cwiseAbs().maxCoeff();
  CHECK(gradient_mismatch(b, a) == doctest::Approx(0.5));
}

TEST_CASE("stop reason names") {
  CHECK(to_string(StopReason::Converged) == "Converged");
  CHECK(to_string(StopReason::MaxIters) == "MaxIters");
  CHECK(to_string(StopReason::AssumptionViolated) == "AssumptionViolated");
  CHECK(to_string(StopReason::BacktrackExhausted) == "BacktrackExhausted");
}
