#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace h2mor {

/// Seeded standard-normal source used for every synthetic draw.
///
/// Engine: std::mt19937_64 (fully specified by the C++ standard). Normal
/// variates come from the Box-Muller transform applied to two uniforms in
/// (0, 1] built from the top 53 bits of successive engine outputs, so the
/// stream is identical across standard libraries. std::normal_distribution
/// is deliberately not used because its algorithm is implementation-defined.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed);

  double next();
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols);
  double uniform();  // in (0, 1]

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; derives independent sub-seeds from a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace h2mor
