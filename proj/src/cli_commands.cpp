#include "h2mor/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "h2mor/dataio.hpp"
#include "h2mor/ddgrad.hpp"
#include "h2mor/initmor.hpp"
#include "h2mor/matrix_io.hpp"
#include "h2mor/random.hpp"
#include "h2mor/sysmodel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace h2mor::cli {
namespace {

json spectrum_json(const Spectrum& spec) {
  json arr = json::array();
  for (const Complex& l : spec) arr.push_back({{"re", l.real()}, {"im", l.imag()}});
  return arr;
}

json report_json(const AssumptionReport& rep) {
  json j = {{"rank_X1U1", rep.rank_X1U1}, {"rank_X1", rep.rank_X1},
            {"rank_U1", rep.rank_U1},     {"b1", rep.b1_holds},
            {"b2", rep.b2_holds},         {"b3", rep.b3_holds}};
  auto pencil = [](const PencilReport& p) {
    return json{{"is_regular", p.is_regular}, {"min_separation", p.min_separation}};
  };
  if (rep.pencil_R) j["pencil_R"] = pencil(*rep.pencil_R);
  if (rep.pencil_S) j["pencil_S"] = pencil(*rep.pencil_S);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

Rom build_initial_rom(const ReduceArgs& args, const DataEnsemble& ens,
                      const std::optional<LtiSystem>& truth, StabilizeLog& log) {
  const Eigen::Index r = args.r;
  if (args.init == "dmdc") {
    if (truth) {
      const NoiseSpec noise{ens.noise_alpha, derive_seed(args.seed, 1)};
      return init_dmdc(generate_trajectories(*truth, ens.N(), args.init_L, noise), r, &log);
    }
    return init_dmdc(as_trajectories(ens), r, &log);
  }
  if (args.init == "loewner") {
    if (!args.freq_data.empty()) {
      const auto [left, right] = load_freq_samples(args.freq_data);
      return init_loewner(left, right, r, derive_seed(args.seed, 3), &log);
    }
    if (!truth) throw Error(ErrorCode::InvalidArgument, "--init loewner needs --freq-data or --oracle");
    const auto [left, right] = sample_unit_circle(*truth, args.loewner_pairs, derive_seed(args.seed, 2));
    return init_loewner(left, right, r, derive_seed(args.seed, 3), &log);
  }
  if (args.init == "databt") {
    if (!args.impulse_data.empty()) return init_data_bt(load_impulse_data(args.impulse_data), r, &log);
    if (!truth) throw Error(ErrorCode::InvalidArgument, "--init databt needs --impulse-data or --oracle");
    return init_data_bt(impulse_data(*truth, args.impulse_count), r, &log);
  }
  if (args.init == "file") {
    if (args.init_rom.empty()) throw Error(ErrorCode::InvalidArgument, "--init file needs --init-rom");
    return make_stable(load_rom(args.init_rom), &log);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown initializer '" + args.init + "'");
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::FormatError:
      return kConfigError;
    case ErrorCode::RankDeficientData:
    case ErrorCode::AssumptionViolated:
    case ErrorCode::InsufficientData:
      return kDataAssumption;
    default:
      return kNumericalError;
  }
}

void write_history_csv(const fs::path& path, const std::vector<IterRecord>& history) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "iter,f,D,step,backtracks,rel_h2_error,stable\n";
  for (const IterRecord& rec : history) {
    out << rec.iter << ',' << format_double(rec.f) << ',' << format_double(rec.D) << ','
        << format_double(rec.step) << ',' << rec.backtracks << ','
        << (rec.rel_h2_error ? format_double(*rec.rel_h2_error) : std::string()) << ','
        << (rec.stable ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

int cmd_gen_system(const GenSystemArgs& args, std::ostream& out) {
  if (args.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const LtiSystem sys = generate_synthetic({args.n, args.m, args.h, args.seed});
  const fs::path manifest = save_system(sys, args.out, {args.h, args.seed});
  out << json{{"system", manifest.string()},
              {"n", sys.n()},
              {"m", sys.m()},
              {"spectral_radius", spectral_radius(sys.A)},
              {"h2_norm", h2_norm(sys)}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_gen_data(const GenDataArgs& args, std::ostream& out) {
  if (args.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const LtiSystem sys = load_system(args.system);
  const DataEnsemble ens = generate_ensemble(sys, args.N, {args.alpha, args.seed});
  const fs::path manifest = save_ensemble(ens, args.out);
  const AssumptionReport rep = check_assumptions(ens, sys.n(), sys.m());
  out << json{{"ensemble", manifest.string()}, {"N", ens.N()}, {"alpha", args.alpha},
              {"assumptions", report_json(rep)}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_reduce(const ReduceArgs& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  if (args.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  args.params.validate();
  const DataEnsemble ens = load_ensemble(args.ensemble);
  if (args.r < 1 || args.r >= ens.n())
    throw Error(ErrorCode::InvalidArgument, "need 1 <= r < n");

  std::optional<LtiSystem> truth;
  if (!args.oracle.empty()) {
    truth = load_system(args.oracle);
    if (truth->n() != ens.n() || truth->m() != ens.m())
      throw Error(ErrorCode::InvalidArgument, "oracle system does not match the ensemble dimensions");
  }
  if (args.b_known && !truth)
    throw Error(ErrorCode::InvalidArgument, "--b-known takes B from the --oracle system");

  AssumptionReport report = check_assumptions(ens, ens.n(), ens.m());
  const bool data_ok = args.b_known ? report.b2_holds : report.data_ok();
  if (!data_ok && !args.force) {
    out << json{{"error", "data assumptions violated (use --force to override)"},
                {"assumptions", report_json(report)}}
               .dump()
        << '\n';
    return kDataAssumption;
  }
  if (!data_ok) std::cerr << "warning: data assumptions violated; continuing because of --force\n";

  const DualData dual = args.b_known ? reconstruct_dual_B_known(ens, truth->B)
                                     : reconstruct_dual(ens, args.force);
  StabilizeLog stab;
  const Rom init = build_initial_rom(args, ens, truth, stab);

  std::optional<ModelOracle> oracle;
  if (truth) oracle.emplace(*truth);

  const OptimResult result = run_optimizer(dual, init, args.params, oracle ? &*oracle : nullptr);

  const auto pencils = check_pencils(dual, result.rom);
  report.pencil_R = pencils.first;
  report.pencil_S = pencils.second;

  fs::create_directories(args.out);
  save_rom(result.rom, args.out);
  save_rom(init, args.out / "init");
  write_history_csv(args.out / "history.csv", result.history);

  const IterRecord& first = result.history.front();
  const IterRecord& last = result.history.back();
  double audit_max = 0.0;
  for (const IterRecord& rec : result.history)
    if (rec.gradient_audit) audit_max = std::max(audit_max, *rec.gradient_audit);
  const bool final_stable = satisfies_modulus_bounds(eigenvalues(result.rom.A));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary = {
      {"stop_reason", std::string(to_string(result.stop_reason))},
      {"message", result.message},
      {"iterations", static_cast<int>(result.history.size()) - 1},
      {"max_iters", args.params.max_iters},
      {"initial_f", first.f},
      {"final_f", last.f},
      {"final_D", last.D},
      {"final_stable", final_stable},
      {"initializer", args.init},
      {"r", args.r},
      {"params", {{"alpha", args.params.alpha0}, {"c", args.params.c}, {"rho", args.params.rho},
                  {"tol", args.params.tol}, {"max_backtracks", args.params.max_backtracks}}},
      {"stabilization", {{"rescales", stab.rescales}, {"shifts", stab.shifts}}},
      {"assumptions", report_json(report)},
      {"b_known", args.b_known},
      {"forced", args.force && !data_ok},
      {"wall_time_s", wall},
  };
  if (oracle) {
    summary["initial_rel_error"] = first.rel_h2_error.value_or(0.0);
    summary["final_rel_error"] = last.rel_h2_error.value_or(0.0);
    summary["gradient_audit_max"] = audit_max;
  }
  write_json(args.out / "summary.json", summary);
  out << summary.dump() << '\n';

  if (!final_stable) return kNumericalError;
  switch (result.stop_reason) {
    case StopReason::Converged:
    case StopReason::MaxIters:
      return kOk;
    case StopReason::AssumptionViolated:
      return kDataAssumption;
    case StopReason::BacktrackExhausted:
      return kNumericalError;
  }
  return kNumericalError;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const LtiSystem sys = load_system(args.system);
  const Rom rom = load_rom(args.rom);
  const Spectrum rom_spec = eigenvalues(rom.A);
  double rho = 0.0, low = std::numeric_limits<double>::infinity();
  for (const Complex& l : rom_spec) {
    rho = std::max(rho, std::abs(l));
    low = std::min(low, std::abs(l));
  }
  const double sys_rho = spectral_radius(sys.A);
  if (rho >= 1.0 || sys_rho >= 1.0) {
    json offending = json::array();
    for (const Complex& l : rom_spec)
      if (std::abs(l) >= 1.0) offending.push_back({{"re", l.real()}, {"im", l.imag()}});
    out << json{{"error", "NotStable"}, {"system_spectral_radius", sys_rho},
                {"rom_spectral_radius", rho}, {"offending_eigenvalues", offending}}
               .dump(2)
        << '\n';
    return kNumericalError;
  }
  const double norm = h2_norm(sys);
  const double err = h2_error(sys, rom);
  out << json{{"h2_norm", norm},
              {"abs_h2_error", err},
              {"rel_h2_error", err / norm},
              {"rom_spectrum", spectrum_json(rom_spec)},
              {"rom_spectral_radius", rho},
              {"rom_min_modulus", low},
              {"stability_margin", 1.0 - rho},
              {"system_spectral_radius", sys_rho}}
             .dump(2)
      << '\n';
  return kOk;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw Error(ErrorCode::InvalidArgument, "--config needs a path");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!config_path) return rest;

  std::ifstream in(*config_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + *config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, *config_path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::FormatError, *config_path + ": config must be an object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number_unsigned() || value.is_number_integer()) {
      injected.push_back(flag);
      injected.push_back(value.dump());
    } else if (value.is_number_float()) {
      injected.push_back(flag);
      injected.push_back(format_double(value.get<double>()));
    } else {
      throw Error(ErrorCode::FormatError, *config_path + ": unsupported value for '" + key + "'");
    }
  }
  auto sub = std::find_if(rest.begin(), rest.end(),
                          [](const std::string& s) { return !s.empty() && s[0] != '-'; });
  const auto at = (sub == rest.end()) ? rest.begin() : std::next(sub);
  rest.insert(at, injected.begin(), injected.end());
  return rest;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-driven h2-optimal model reduction for discrete-time LTI systems"};
  app.name("h2mor");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 configuration/IO error, 2 data assumptions violated,\n"
      "3 numerical failure (instability, singular solve, no descent step).\n"
      "Every subcommand accepts --config FILE.json; explicit flags override the file.");

  std::string config_unused;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_unused, "JSON object of flag values");
  };

  GenSystemArgs gs;
  auto* gen_system = app.add_subcommand("gen-system", "Generate a stable synthetic system");
  gen_system->set_help_flag("--help", "Print this help message and exit");
  gen_system->add_option("--n", gs.n, "State dimension")->capture_default_str();
  gen_system->add_option("--m", gs.m, "Input dimension")->capture_default_str();
  gen_system->add_option("--h", gs.h, "Sampling step")->capture_default_str();
  gen_system->add_option("--seed", gs.seed, "PRNG seed")->capture_default_str();
  gen_system->add_option("--out", gs.out, "Output directory")->required();
  add_config(gen_system);

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Sample a one-step measurement ensemble");
  gen_data->add_option("--system", gd.system, "system.json or its directory")->required();
  gen_data->add_option("--N", gd.N, "Number of samples")->capture_default_str();
  gen_data->add_option("--alpha", gd.alpha, "Noise amplitude")->capture_default_str();
  gen_data->add_option("--seed", gd.seed, "PRNG seed")->capture_default_str();
  gen_data->add_option("--out", gd.out, "Output directory")->required();
  add_config(gen_data);

  ReduceArgs rd;
  auto* reduce = app.add_subcommand("reduce", "Run data-driven h2 gradient descent");
  reduce->add_option("--ensemble", rd.ensemble, "ensemble.json or its directory")->required();
  reduce->add_option("--init", rd.init, "Initializer")
      ->check(CLI::IsMember({"dmdc", "loewner", "databt", "file"}))
      ->capture_default_str();
  reduce->add_option("--init-rom", rd.init_rom, "rom.json used with --init file");
  reduce->add_option("--r", rd.r, "Reduced order")->capture_default_str();
  reduce->add_option("--alpha", rd.params.alpha0, "Initial step size")->capture_default_str();
  reduce->add_option("--c", rd.params.c, "Armijo parameter")->capture_default_str();
  reduce->add_option("--rho", rd.params.rho, "Backtracking factor")->capture_default_str();
  reduce->add_option("--tol", rd.params.tol, "Stop when ||d||_F^2 < tol")->capture_default_str();
  reduce->add_option("--max-iters", rd.params.max_iters, "Iteration cap")->capture_default_str();
  reduce->add_option("--max-backtracks", rd.params.max_backtracks, "Backtracking cap")->capture_default_str();
  reduce->add_option("--oracle", rd.oracle, "True system, enables error logging and gradient audit");
  reduce->add_option("--out", rd.out, "Output directory")->required();
  reduce->add_flag("--force", rd.force, "Proceed although the rank conditions fail");
  reduce->add_flag("--b-known", rd.b_known, "Use B from --oracle (needs only rank X1 = n)");
  reduce->add_option("--seed", rd.seed, "Seed for initializer sampling")->capture_default_str();
  reduce->add_option("--init-L", rd.init_L, "Trajectory length for DMDc data")->capture_default_str();
  reduce->add_option("--loewner-pairs", rd.loewner_pairs, "Conjugate pairs per Loewner side")->capture_default_str();
  reduce->add_option("--impulse-count", rd.impulse_count, "Markov parameters for data-BT")->capture_default_str();
  reduce->add_option("--freq-data", rd.freq_data, "JSON frequency samples for Loewner");
  reduce->add_option("--impulse-data", rd.impulse_data, "JSON Markov parameters for data-BT");
  add_config(reduce);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "h2 error of a rom against a system");
  evaluate->add_option("--system", ev.system, "system.json or its directory")->required();
  evaluate->add_option("--rom", ev.rom, "rom.json or its directory")->required();
  add_config(evaluate);

  try {
    std::vector<std::string> raw(argv + 1, argv + argc);
    std::vector<std::string> args = expand_config(raw);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  try {
    if (gen_system->parsed()) return cmd_gen_system(gs, out);
    if (gen_data->parsed()) return cmd_gen_data(gd, out);
    if (reduce->parsed()) return cmd_reduce(rd, out);
    if (evaluate->parsed()) return cmd_evaluate(ev, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kConfigError;
}

}  // namespace h2mor::cli
