#include "h2mor/dataio.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "h2mor/error.hpp"
#include "h2mor/matrix_io.hpp"
#include "h2mor/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace h2mor {
namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::FormatError, path.string() + ": manifest must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

fs::path resolve_manifest(const fs::path& path, const char* default_name) {
  if (fs::is_directory(path)) return path / default_name;
  return path;
}

template <typename T>
T get_field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key))
    throw Error(ErrorCode::FormatError, where.string() + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, where.string() + ": bad value for '" + key + "': " + e.what());
  }
}

void expect_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols,
                  const char* name, const fs::path& where) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << where.string() << ": " << name << " is " << M.rows() << "x" << M.cols()
       << " but the manifest implies " << rows << "x" << cols;
    throw Error(ErrorCode::FormatError, os.str());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void DataEnsemble::validate() const {
  if (U1.rows() != X1.rows() || X2.rows() != X1.rows() || X2.cols() != X1.cols()) {
    std::ostringstream os;
    os << "inconsistent ensemble blocks: X1 " << X1.rows() << "x" << X1.cols()
       << ", U1 " << U1.rows() << "x" << U1.cols() << ", X2 " << X2.rows() << "x" << X2.cols();
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  if (!X1.allFinite() || !U1.allFinite() || !X2.allFinite())
    throw Error(ErrorCode::InvalidArgument, "ensemble has non-finite entries");
}

DataEnsemble generate_ensemble(const LtiSystem& sys, Eigen::Index N,
                               const NoiseSpec& noise) {
  sys.validate();
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "ensemble needs N >= 1");
  if (!(noise.alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise alpha must be >= 0");

  NormalSource rng(noise.seed);
  const Matrix X1_clean = rng.matrix(N, sys.n());
  const Matrix U1 = rng.matrix(N, sys.m());
  const Matrix E1 = rng.matrix(N, sys.n());
  const Matrix E2 = rng.matrix(N, sys.n());
  const Matrix X2_clean = X1_clean * sys.A.transpose() + U1 * sys.B.transpose();

  DataEnsemble ens;
  ens.X1 = X1_clean + noise.alpha * E1;
  ens.U1 = U1;
  ens.X2 = X2_clean + noise.alpha * E2;
  ens.noise_alpha = noise.alpha;
  ens.seed = noise.seed;
  return ens;
}

TrajectorySet generate_trajectories(const LtiSystem& sys, Eigen::Index N,
                                    Eigen::Index L, const NoiseSpec& noise) {
  sys.validate();
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "trajectory set needs N >= 1");
  if (L < 2) throw Error(ErrorCode::InvalidArgument, "trajectories need L >= 2");
  NormalSource rng(noise.seed);
  TrajectorySet out;
  out.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    Trajectory t;
    t.inputs = rng.matrix(L - 1, sys.m());
    Matrix clean(L, sys.n());
    clean.row(0) = rng.matrix(1, sys.n());
    for (Eigen::Index k = 0; k + 1 < L; ++k)
      clean.row(k + 1) = clean.row(k) * sys.A.transpose() + t.inputs.row(k) * sys.B.transpose();
    t.states = clean + noise.alpha * rng.matrix(L, sys.n());
    out.push_back(std::move(t));
  }
  return out;
}

DataEnsemble first_transitions(const TrajectorySet& traj) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory set");
  const Eigen::Index n = traj.front().states.cols();
  const Eigen::Index m = traj.front().inputs.cols();
  const auto N = static_cast<Eigen::Index>(traj.size());
  DataEnsemble ens;
  ens.X1.resize(N, n);
  ens.U1.resize(N, m);
  ens.X2.resize(N, n);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Trajectory& t = traj[static_cast<std::size_t>(i)];
    if (t.states.rows() < 2 || t.states.cols() != n || t.inputs.cols() != m ||
        t.inputs.rows() != t.states.rows() - 1)
      throw Error(ErrorCode::InvalidArgument, "inconsistent trajectory shapes");
    ens.X1.row(i) = t.states.row(0);
    ens.U1.row(i) = t.inputs.row(0);
    ens.X2.row(i) = t.states.row(1);
  }
  return ens;
}

TrajectorySet as_trajectories(const DataEnsemble& ens) {
  ens.validate();
  TrajectorySet out;
  out.reserve(static_cast<std::size_t>(ens.N()));
  for (Eigen::Index i = 0; i < ens.N(); ++i) {
    Trajectory t;
    t.states.resize(2, ens.n());
    t.states.row(0) = ens.X1.row(i);
    t.states.row(1) = ens.X2.row(i);
    t.inputs = ens.U1.row(i);
    out.push_back(std::move(t));
  }
  return out;
}

AssumptionReport check_assumptions(const DataEnsemble& ens, Eigen::Index n,
                                   Eigen::Index m) {
  ens.validate();
  if (ens.n() != n || ens.m() != m)
    throw Error(ErrorCode::InvalidArgument, "ensemble dimensions do not match (n, m)");
  AssumptionReport rep;
  Matrix XU(ens.N(), n + m);
  XU << ens.X1, ens.U1;
  rep.rank_X1U1 = numerical_rank(XU, kRankTolerance);
  rep.rank_X1 = numerical_rank(ens.X1, kRankTolerance);
  rep.rank_U1 = numerical_rank(ens.U1, kRankTolerance);
  rep.b1_holds = rep.rank_X1U1 == n + m;
  rep.b2_holds = rep.rank_X1 == n;
  rep.b3_holds = rep.rank_U1 == m;
  return rep;
}

fs::path save_ensemble(const DataEnsemble& ens, const fs::path& dir) {
  ens.validate();
  ensure_dir(dir);
  write_matrix_csv(dir / "x1.csv", ens.X1);
  write_matrix_csv(dir / "u1.csv", ens.U1);
  write_matrix_csv(dir / "x2.csv", ens.X2);
  const json manifest = {
      {"n", ens.n()},   {"m", ens.m()},         {"N", ens.N()},
      {"alpha", ens.noise_alpha}, {"seed", ens.seed},
      {"x1", "x1.csv"}, {"u1", "u1.csv"},       {"x2", "x2.csv"},
  };
  const fs::path path = dir / "ensemble.json";
  write_json(path, manifest);
  return path;
}

DataEnsemble load_ensemble(const fs::path& path) {
  const fs::path manifest_path = resolve_manifest(path, "ensemble.json");
  const json j = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  const auto n = get_field<Eigen::Index>(j, "n", manifest_path);
  const auto m = get_field<Eigen::Index>(j, "m", manifest_path);
  const auto N = get_field<Eigen::Index>(j, "N", manifest_path);
  if (n < 1 || m < 1 || N < 1)
    throw Error(ErrorCode::FormatError, manifest_path.string() + ": n, m, N must be positive");

  DataEnsemble ens;
  ens.X1 = read_matrix_csv(base / get_field<std::string>(j, "x1", manifest_path));
  ens.U1 = read_matrix_csv(base / get_field<std::string>(j, "u1", manifest_path));
  ens.X2 = read_matrix_csv(base / get_field<std::string>(j, "x2", manifest_path));
  expect_shape(ens.X1, N, n, "x1", manifest_path);
  expect_shape(ens.U1, N, m, "u1", manifest_path);
  expect_shape(ens.X2, N, n, "x2", manifest_path);
  ens.noise_alpha = j.value("alpha", 0.0);
  ens.seed = j.value("seed", std::uint64_t{0});
  return ens;
}

fs::path save_system(const LtiSystem& sys, const fs::path& dir,
                     const SystemProvenance& prov) {
  sys.validate();
  ensure_dir(dir);
  write_matrix_csv(dir / "A.csv", sys.A);
  write_matrix_csv(dir / "B.csv", sys.B);
  json manifest = {{"n", sys.n()}, {"m", sys.m()}, {"h", prov.h},
                   {"seed", prov.seed}, {"A", "A.csv"}, {"B", "B.csv"}};
  const bool identity_output =
      sys.C.rows() == sys.n() && sys.C.isIdentity(0.0);
  if (!identity_output) {
    write_matrix_csv(dir / "C.csv", sys.C);
    manifest["p"] = sys.p();
    manifest["C"] = "C.csv";
  }
  const fs::path path = dir / "system.json";
  write_json(path, manifest);
  return path;
}

LtiSystem load_system(const fs::path& path) {
  const fs::path manifest_path = resolve_manifest(path, "system.json");
  const json j = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  const auto n = get_field<Eigen::Index>(j, "n", manifest_path);
  const auto m = get_field<Eigen::Index>(j, "m", manifest_path);
  Matrix A = read_matrix_csv(base / get_field<std::string>(j, "A", manifest_path));
  Matrix B = read_matrix_csv(base / get_field<std::string>(j, "B", manifest_path));
  expect_shape(A, n, n, "A", manifest_path);
  expect_shape(B, n, m, "B", manifest_path);
  LtiSystem sys = LtiSystem::with_identity_output(std::move(A), std::move(B));
  if (j.contains("C")) {
    const auto p = get_field<Eigen::Index>(j, "p", manifest_path);
    sys.C = read_matrix_csv(base / get_field<std::string>(j, "C", manifest_path));
    expect_shape(sys.C, p, n, "C", manifest_path);
  }
  return sys;
}

fs::path save_rom(const Rom& rom, const fs::path& dir) {
  rom.validate();
  ensure_dir(dir);
  write_matrix_csv(dir / "rom_A.csv", rom.A);
  write_matrix_csv(dir / "rom_B.csv", rom.B);
  write_matrix_csv(dir / "rom_C.csv", rom.C);
  const json manifest = {{"r", rom.r()},         {"m", rom.m()},
                         {"p", rom.p()},         {"A", "rom_A.csv"},
                         {"B", "rom_B.csv"},     {"C", "rom_C.csv"}};
  const fs::path path = dir / "rom.json";
  write_json(path, manifest);
  return path;
}

Rom load_rom(const fs::path& path) {
  const fs::path manifest_path = resolve_manifest(path, "rom.json");
  const json j = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  const auto r = get_field<Eigen::Index>(j, "r", manifest_path);
  const auto m = get_field<Eigen::Index>(j, "m", manifest_path);
  const auto p = get_field<Eigen::Index>(j, "p", manifest_path);
  Rom rom;
  rom.A = read_matrix_csv(base / get_field<std::string>(j, "A", manifest_path));
  rom.B = read_matrix_csv(base / get_field<std::string>(j, "B", manifest_path));
  rom.C = read_matrix_csv(base / get_field<std::string>(j, "C", manifest_path));
  expect_shape(rom.A, r, r, "rom A", manifest_path);
  expect_shape(rom.B, r, m, "rom B", manifest_path);
  expect_shape(rom.C, p, r, "rom C", manifest_path);
  return rom;
}

}  // namespace h2mor
