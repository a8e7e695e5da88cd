#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "h2mor/dataio.hpp"
#include "h2mor/sysmodel.hpp"

namespace h2mor {

enum class SampleSide { Left, Right };

/// One frequency-response sample H(z). Sample lists must be conjugate
/// closed: a sample with Im z != 0 is immediately followed by its conjugate.
struct FreqSample {
  Complex z;
  ComplexMatrix value;  // p x m
  SampleSide side = SampleSide::Right;
};

/// Impulse response h_k = C A^{k-1} B, k = 1..T.
struct ImpulseData {
  std::vector<Matrix> markov;
};

struct StabilizeLog {
  int rescales = 0;
  int shifts = 0;
};

/// DMD with control: least-squares [Abar Bbar] from stacked snapshots,
/// projected on the leading r left singular vectors of the shifted states.
Rom init_dmdc(const TrajectorySet& traj, Eigen::Index r, StabilizeLog* log = nullptr);

/// Real Loewner framework with tangential directions drawn from
/// `direction_seed` (one real direction per conjugate pair).
Rom init_loewner(const std::vector<FreqSample>& left,
                 const std::vector<FreqSample>& right, Eigen::Index r,
                 std::uint64_t direction_seed = 0, StabilizeLog* log = nullptr);

/// Balanced (Ho-Kalman) realization from the block Hankel matrix of
/// Markov parameters.
Rom init_data_bt(const ImpulseData& imp, Eigen::Index r, StabilizeLog* log = nullptr);

/// Rescales Ahat to spectral radius 0.99 when unstable and shifts it by
/// 1e-6 I when an eigenvalue is (nearly) zero; at most 5 rounds.
Rom make_stable(const Rom& rom, StabilizeLog* log = nullptr);

/// Conjugate-closed samples of the system's transfer function on the unit
/// circle: `pairs` pairs per side at seeded random angles in (0, pi).
std::pair<std::vector<FreqSample>, std::vector<FreqSample>>
sample_unit_circle(const LtiSystem& sys, int pairs, std::uint64_t seed);

ImpulseData impulse_data(const LtiSystem& sys, int count);

void save_freq_samples(const std::filesystem::path& path,
                       const std::vector<FreqSample>& left,
                       const std::vector<FreqSample>& right);
std::pair<std::vector<FreqSample>, std::vector<FreqSample>>
load_freq_samples(const std::filesystem::path& path);

void save_impulse_data(const std::filesystem::path& path, const ImpulseData& imp);
ImpulseData load_impulse_data(const std::filesystem::path& path);

}  // namespace h2mor
