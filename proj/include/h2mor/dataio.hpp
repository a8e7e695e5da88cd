#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "h2mor/matequ.hpp"
#include "h2mor/sysmodel.hpp"

namespace h2mor {

/// N one-step transitions stacked row-wise: row i of X1, U1, X2 holds
/// x_{i,1}^T, u_{i,1}^T, x_{i,2}^T.
struct DataEnsemble {
  Matrix X1;
  Matrix U1;
  Matrix X2;
  double noise_alpha = 0.0;  // provenance only
  std::uint64_t seed = 0;

  Eigen::Index N() const { return X1.rows(); }
  Eigen::Index n() const { return X1.cols(); }
  Eigen::Index m() const { return U1.cols(); }

  void validate() const;
};

struct Trajectory {
  Matrix states;  // L x n
  Matrix inputs;  // (L-1) x m
};

using TrajectorySet = std::vector<Trajectory>;

struct NoiseSpec {
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

struct AssumptionReport {
  Eigen::Index rank_X1U1 = 0;
  Eigen::Index rank_X1 = 0;
  Eigen::Index rank_U1 = 0;
  bool b1_holds = false;  // rank [X1 U1] = n + m
  bool b2_holds = false;  // rank X1 = n
  bool b3_holds = false;  // rank U1 = m
  // Filled by check_pencils once a reduced model is known.
  std::optional<PencilReport> pencil_R;
  std::optional<PencilReport> pencil_S;

  bool data_ok() const { return b1_holds && b2_holds && b3_holds; }
};

inline constexpr double kRankTolerance = 1e-10;

/// Gaussian states, inputs and noise; observed snapshots are the clean
/// states plus alpha times standard-normal noise.
DataEnsemble generate_ensemble(const LtiSystem& sys, Eigen::Index N,
                               const NoiseSpec& noise);

TrajectorySet generate_trajectories(const LtiSystem& sys, Eigen::Index N,
                                    Eigen::Index L, const NoiseSpec& noise);

/// First transition of every trajectory.
DataEnsemble first_transitions(const TrajectorySet& traj);

/// Each ensemble row as a length-2 trajectory.
TrajectorySet as_trajectories(const DataEnsemble& ens);

AssumptionReport check_assumptions(const DataEnsemble& ens, Eigen::Index n,
                                   Eigen::Index m);

/// Writes x1.csv, u1.csv, x2.csv and the ensemble.json manifest into `dir`.
std::filesystem::path save_ensemble(const DataEnsemble& ens,
                                    const std::filesystem::path& dir);
/// Accepts the manifest path or the directory holding ensemble.json.
DataEnsemble load_ensemble(const std::filesystem::path& path);

struct SystemProvenance {
  double h = 0.0;
  std::uint64_t seed = 0;
};

/// A.csv, B.csv (and C.csv when C is not the identity) plus system.json.
std::filesystem::path save_system(const LtiSystem& sys,
                                  const std::filesystem::path& dir,
                                  const SystemProvenance& prov = {});
LtiSystem load_system(const std::filesystem::path& path);

/// rom_A.csv, rom_B.csv, rom_C.csv plus rom.json.
std::filesystem::path save_rom(const Rom& rom, const std::filesystem::path& dir);
Rom load_rom(const std::filesystem::path& path);

}  // namespace h2mor
