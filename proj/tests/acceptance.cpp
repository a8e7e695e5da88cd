// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. The last line always reports how many criteria ran.
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "h2mor/ddgrad.hpp"
#include "h2mor/initmor.hpp"
#include "h2mor/optim.hpp"
#include "oracles.hpp"

using namespace h2mor;
using namespace h2mor::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
int evaluated = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  ++evaluated;
  if (!ok) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double triple_error(const GradientTriple& got, const GradientTriple& want) {
  return std::max({rel_block_error(got.gA, want.gA), rel_block_error(got.gB, want.gB),
                   rel_block_error(got.gC, want.gC)});
}

struct Desk {
  LtiSystem sys;
  DataEnsemble ens;
  DualData dual;
};

Desk desk(std::uint64_t seed, Eigen::Index n, Eigen::Index m) {
  LtiSystem sys = generate_synthetic({n, m, 0.1, seed});
  DataEnsemble ens = generate_ensemble(sys, n + m, {0.0, derive_seed(seed, 1)});
  DualData dual = reconstruct_dual(ens);
  return {std::move(sys), std::move(ens), std::move(dual)};
}

// Random rom satisfying 0 < |lambda| < 1 whose spectra stay clear of the
// data pencils.
Rom admissible_rom(NormalSource& rng, const DualData& dual, Eigen::Index r, Eigen::Index m,
                   Eigen::Index p) {
  for (;;) {
    Rom rom = random_rom(rng, r, m, p, 0.3 + 0.6 * rng.uniform());
    if (satisfies_modulus_bounds(eigenvalues(rom.A)) && pencils_ok(check_pencils(dual, rom)))
      return rom;
  }
}

void gradient_coincidence() {
  const auto t0 = Clock::now();
  const Desk d = desk(2024, 10, 2);
  const ModelOracle oracle(d.sys);
  NormalSource rng(7);
  double worst = 0.0, worst_cor = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Rom rom = admissible_rom(rng, d.dual, 3, 2, 10);
    const GradientTriple data = evaluate_data_gradients(d.dual, rom).grad;
    worst = std::max(worst, triple_error(data, oracle.gradients(rom).grad));
    worst_cor = std::max(worst_cor, triple_error(data_gradients_B_known(d.ens, d.sys.B, rom), data));
  }
  const double elapsed = seconds_since(t0);
  report("gradient_coincidence", worst <= 1e-8 && elapsed < 5.0,
         fmt("n=10 m=2 r=3 N=12, 20 roms, max rel err %.3e (tol 1e-8), %.2f s (budget 5 s)", worst, elapsed));
  report("b_known_equivalence", worst_cor <= 1e-8,
         fmt("B-known vs B-unknown, max rel err %.3e (tol 1e-8)", worst_cor));
}

void finite_differences() {
  double worst = 0.0;
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const Desk d = desk(seed, 8, 2);
    NormalSource rng(seed);
    const Rom rom = admissible_rom(rng, d.dual, 3, 2, 8);
    const GradientTriple g = evaluate_data_gradients(d.dual, rom).grad;
    const FdGradient fd = central_differences([&](const Rom& x) { return evaluate_objective(d.dual, x); }, rom, 1e-6);
    worst = std::max(worst, triple_error(g, GradientTriple{fd.gA, fd.gB, fd.gC}));
  }
  report("gradient_vs_finite_difference", worst <= 1e-4,
         fmt("n=8 m=2 r=3, 3 instances, step 1e-6, max rel err %.3e (tol 1e-4)", worst));
}

void solver_oracles() {
  const auto t0 = Clock::now();
  NormalSource rng(41);
  double worst = 0.0;
  int count = 0;
  for (int t = 0; t < 25; ++t) {
    const Eigen::Index k = 2 + (t % 19);  // k^2 <= 400
    const Matrix A = random_stable(rng, k, 0.5 + 0.45 * rng.uniform());
    const Matrix G = rng.matrix(k, k);
    const Matrix W = G * G.transpose();
    const Matrix X = solve_stein(A, W);
    worst = std::max(worst, rel_block_error(X, kron_stein(A, W)));
    ++count;
  }
  for (int t = 0; t < 25; ++t) {
    const Eigen::Index r = 1 + (t % 8);
    const Eigen::Index k = std::min<Eigen::Index>(400 / r, 5 + 3 * t);
    const Matrix M = random_stable(rng, k, 0.5 + 0.45 * rng.uniform());
    const Matrix N = random_stable(rng, r, 0.5 + 0.45 * rng.uniform());
    const Matrix W = rng.matrix(k, r);
    const Matrix X = solve_discrete_sylvester(M, N, W);
    worst = std::max(worst, rel_block_error(X, kron_sylvester(M, N, W)));
    ++count;
  }
  const double elapsed = seconds_since(t0);
  report("solver_oracles", worst <= 1e-10 && elapsed < 10.0,
         fmt("%d Stein/Sylvester instances, k*r <= 400, max rel err %.3e (tol 1e-10), %.2f s (budget 10 s)",
             count, worst, elapsed));
}

void h2_quadrature() {
  NormalSource rng(51);
  double worst = 0.0;
  for (Eigen::Index n : {2, 4, 8, 12, 16}) {
    const LtiSystem sys = random_system(rng, n, 2, 0.9);
    const double want = h2_norm_quadrature(sys, 4096);
    worst = std::max(worst, std::abs(h2_norm(sys) - want) / want);
  }
  report("h2_norm_quadrature", worst <= 1e-6,
         fmt("n in {2,4,8,12,16}, 4096 nodes, max rel diff %.3e (tol 1e-6)", worst));
}

struct ScaleRun {
  std::string name;
  Rom init;
};

std::vector<ScaleRun> full_scale_initializers(const LtiSystem& sys, double alpha, std::uint64_t seed) {
  std::vector<ScaleRun> runs;
  runs.push_back({"dmdc", init_dmdc(generate_trajectories(sys, 102, 10, {alpha, derive_seed(seed, 1)}), 6)});
  const auto [left, right] = sample_unit_circle(sys, 30, derive_seed(seed, 2));
  runs.push_back({"loewner", init_loewner(left, right, 6, derive_seed(seed, 3))});
  runs.push_back({"databt", init_data_bt(impulse_data(sys, 10), 6)});
  return runs;
}

void algorithm_contract() {
  const LtiSystem sys = generate_synthetic({100, 2, 0.1, 1});
  const DataEnsemble ens = generate_ensemble(sys, 102, {0.0, 2});
  const DualData dual = reconstruct_dual(ens);
  const ModelOracle oracle(sys);
  const OptimParams params;  // alpha=1, c=1e-4, rho=0.5, tol=1e-3
  for (const ScaleRun& run : full_scale_initializers(sys, 0.0, 3)) {
    const auto t0 = Clock::now();
    const OptimResult res = run_optimizer(dual, run.init, params, &oracle);
    const double elapsed = seconds_since(t0);
    bool monotone = true, stable = true;
    for (std::size_t i = 0; i < res.history.size(); ++i) {
      stable = stable && res.history[i].stable;
      if (i > 0) monotone = monotone && res.history[i].f <= res.history[i - 1].f;
    }
    stable = stable && satisfies_modulus_bounds(eigenvalues(res.rom.A));
    const double e0 = *res.history.front().rel_h2_error;
    const double e1 = *res.history.back().rel_h2_error;
    const double d0 = res.history.front().D;
    const bool ok = monotone && stable && e1 < e0 && elapsed < 600.0;
    report("descent_contract_" + run.name, ok,
           fmt("n=100 m=2 r=6 N=102 noiseless, initial D %.3e (tol %.0e), %s after %zu iterates, "
               "f non-increasing=%s, all stable=%s, rel err %.6e -> %.6e, %.1f s (budget 600 s)",
               d0, params.tol, std::string(to_string(res.stop_reason)).c_str(), res.history.size(),
               monotone ? "yes" : "no", stable ? "yes" : "no", e0, e1, elapsed));
  }
}

void noise_runs() {
  const LtiSystem sys = generate_synthetic({100, 2, 0.1, 1});
  const DataEnsemble ens = generate_ensemble(sys, 510, {0.001, 4});
  const DualData dual = reconstruct_dual(ens);
  const ModelOracle oracle(sys);
  const OptimParams params;
  for (const ScaleRun& run : full_scale_initializers(sys, 0.001, 5)) {
    const auto t0 = Clock::now();
    const OptimResult res = run_optimizer(dual, run.init, params, &oracle);
    const double elapsed = seconds_since(t0);
    const bool finished = res.stop_reason == StopReason::Converged || res.stop_reason == StopReason::MaxIters;
    const double e0 = *res.history.front().rel_h2_error;
    const double e1 = *res.history.back().rel_h2_error;
    report("noise_run_" + run.name, finished && e1 <= e0,
           fmt("N=510 alpha=0.001, initial D %.3e, %s after %zu iterates, rel err %.6e -> %.6e, %.1f s",
               res.history.front().D, std::string(to_string(res.stop_reason)).c_str(), res.history.size(), e0,
               e1, elapsed));
  }
}

void initializer_sanity() {
  {
    const LtiSystem sys = generate_synthetic({8, 2, 0.1, 61});
    const Rom rom = init_dmdc(generate_trajectories(sys, 4, 10, {0.0, 62}), 8);
    double worst = 0.0;
    for (int k = 0; k < 16; ++k) {
      const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / 16.0);
      const ComplexMatrix H = transfer_eval(sys, z);
      worst = std::max(worst, (H - transfer_eval(rom.A, rom.B, rom.C, z)).norm() / H.norm());
    }
    report("init_dmdc_exact_recovery", worst <= 1e-6,
           fmt("n=r=8, 16 unit-circle probes, max rel transfer gap %.3e (tol 1e-6)", worst));
  }
  {
    NormalSource rng(63);
    const LtiSystem sys{random_stable(rng, 6, 0.85), rng.matrix(6, 2), rng.matrix(4, 6)};
    const auto [left, right] = sample_unit_circle(sys, 6, 64);
    const Rom rom = init_loewner(left, right, 6, 65);
    double worst = 0.0;
    for (const auto* side : {&left, &right})
      for (const FreqSample& s : *side)
        worst = std::max(worst, (s.value - transfer_eval(rom.A, rom.B, rom.C, s.z)).norm() / s.value.norm());
    report("init_loewner_interpolation", worst <= 1e-8,
           fmt("order-6 system, 12+12 samples, max rel gap at sample points %.3e (tol 1e-8)", worst));
  }
  {
    NormalSource rng(66);
    const LtiSystem sys{random_stable(rng, 6, 0.85), rng.matrix(6, 2), rng.matrix(4, 6)};
    const ImpulseData imp = impulse_data(sys, 12);
    const Rom rom = init_data_bt(imp, 6);
    const auto got = markov_parameters(LtiSystem{rom.A, rom.B, rom.C}, 12);
    double worst = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k)
      worst = std::max(worst, (got[k] - imp.markov[k]).cwiseAbs().maxCoeff() / imp.markov[0].cwiseAbs().maxCoeff());
    report("init_databt_markov", worst <= 1e-8,
           fmt("order-6 system, 12 Markov parameters, max rel deviation %.3e (tol 1e-8)", worst));
  }
}

void guarded(const char* name, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded("gradient_coincidence", gradient_coincidence);
  guarded("gradient_vs_finite_difference", finite_differences);
  guarded("solver_oracles", solver_oracles);
  guarded("h2_norm_quadrature", h2_quadrature);
  guarded("initializer_sanity", initializer_sanity);
  guarded("descent_contract", algorithm_contract);
  guarded("noise_runs", noise_runs);
  std::printf("%d criteria evaluated, %d failing\n", evaluated, failures);
  return failures == 0 ? 0 : 1;
}
