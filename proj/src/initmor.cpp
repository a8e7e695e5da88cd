#include "h2mor/initmor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "json.hpp"

#include "h2mor/error.hpp"
#include "h2mor/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace h2mor {
namespace {

constexpr double kHankelRankTol = 1e-10;

// Groups sample indices into conjugate pairs (size 2) and real singletons.
std::vector<std::pair<std::size_t, std::size_t>> conjugate_groups(
    const std::vector<FreqSample>& samples, const char* side) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size();) {
    const FreqSample& s = samples[i];
    const double scale = std::max(1.0, std::abs(s.z));
    if (std::abs(s.z.imag()) <= 1e-14 * scale) {
      if (s.value.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.value.cwiseAbs().maxCoeff())) {
        std::ostringstream os;
        os << side << " sample " << i << " sits on the real axis but has a complex value";
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
      groups.emplace_back(i, 1);
      i += 1;
      continue;
    }
    if (i + 1 >= samples.size()) {
      std::ostringstream os;
      os << side << " sample " << i << " has no conjugate partner";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    const FreqSample& t = samples[i + 1];
    const double vscale = std::max(1.0, s.value.cwiseAbs().maxCoeff());
    const bool point_ok = std::abs(t.z - std::conj(s.z)) <= 1e-12 * scale;
    const bool value_ok = t.value.rows() == s.value.rows() && t.value.cols() == s.value.cols() &&
                          (t.value - s.value.conjugate()).cwiseAbs().maxCoeff() <= 1e-10 * vscale;
    if (!point_ok || !value_ok) {
      std::ostringstream os;
      os << side << " samples " << i << " and " << i + 1 << " are not a conjugate pair";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    groups.emplace_back(i, 2);
    i += 2;
  }
  return groups;
}

// Unitary block-diagonal transform that maps conjugate-pair coordinates onto
// real ones: blocks (1/sqrt2) [[1, -i], [1, i]].
ComplexMatrix realifying_transform(const std::vector<std::pair<std::size_t, std::size_t>>& groups,
                                   Eigen::Index k) {
  ComplexMatrix T = ComplexMatrix::Zero(k, k);
  const double s = 1.0 / std::numbers::sqrt2;
  const Complex I(0.0, 1.0);
  for (const auto& [start, size] : groups) {
    const auto a = static_cast<Eigen::Index>(start);
    if (size == 1) {
      T(a, a) = 1.0;
    } else {
      T(a, a) = s;
      T(a + 1, a) = s;
      T(a, a + 1) = -I * s;
      T(a + 1, a + 1) = I * s;
    }
  }
  return T;
}

Matrix real_part_checked(const ComplexMatrix& M, const char* what) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (M.size() > 0 && M.imag().cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " is not real after the conjugate-pair transform");
  }
  return M.real();
}

json complex_to_json(Complex c) { return json{{"re", c.real()}, {"im", c.imag()}}; }

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_object() || !j.contains("re"))
    throw Error(ErrorCode::FormatError, "expected a number or an {re, im} object");
  return {j.at("re").get<double>(), j.value("im", 0.0)};
}

json cmatrix_to_json(const ComplexMatrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(complex_to_json(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ComplexMatrix cmatrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw Error(ErrorCode::FormatError, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  ComplexMatrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorCode::FormatError, "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return M;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
}

}  // namespace

Rom make_stable(const Rom& rom, StabilizeLog* log) {
  rom.validate();
  constexpr double kTargetRadius = 0.99;
  constexpr double kMinModulus = 1e-10;
  constexpr double kShift = 1e-6;
  Rom out = rom;
  for (int round = 0; round < 5; ++round) {
    const Spectrum spec = eigenvalues(out.A);
    double rho = 0.0, low = std::numeric_limits<double>::infinity();
    for (const Complex& l : spec) {
      rho = std::max(rho, std::abs(l));
      low = std::min(low, std::abs(l));
    }
    if (spec.empty() || (rho < 1.0 && low > kMinModulus)) return out;
    if (rho >= 1.0) {
      out.A *= kTargetRadius / rho;
      if (log) ++log->rescales;
    } else {
      out.A += kShift * Matrix::Identity(out.r(), out.r());
      if (log) ++log->shifts;
    }
  }
  if (satisfies_modulus_bounds(eigenvalues(out.A), kMinModulus)) return out;
  throw Error(ErrorCode::StabilizationFailed, "Ahat still violates 0 < |lambda| < 1 after 5 rounds");
}

Rom init_dmdc(const TrajectorySet& traj, Eigen::Index r, StabilizeLog* log) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "DMDc needs at least one trajectory");
  const Eigen::Index n = traj.front().states.cols();
  const Eigen::Index m = traj.front().inputs.cols();
  if (r < 1 || r > n) throw Error(ErrorCode::InvalidArgument, "DMDc needs 1 <= r <= n");

  Eigen::Index K = 0;
  for (const Trajectory& t : traj) {
    if (t.states.cols() != n || t.inputs.cols() != m || t.states.rows() < 2 ||
        t.inputs.rows() != t.states.rows() - 1)
      throw Error(ErrorCode::InvalidArgument, "inconsistent trajectory shapes");
    K += t.states.rows() - 1;
  }
  Matrix Omega(n + m, K);  // [X; U]
  Matrix Xp(n, K);
  Eigen::Index col = 0;
  for (const Trajectory& t : traj) {
    const Eigen::Index steps = t.states.rows() - 1;
    Omega.block(0, col, n, steps) = t.states.topRows(steps).transpose();
    Omega.block(n, col, m, steps) = t.inputs.transpose();
    Xp.block(0, col, n, steps) = t.states.bottomRows(steps).transpose();
    col += steps;
  }

  Eigen::BDCSVD<Matrix> in_svd(Omega, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s_in = in_svd.singularValues();
  const Eigen::Index rank_in = s_in(0) > 0.0 ? (s_in.array() > kHankelRankTol * s_in(0)).count() : 0;
  Eigen::BDCSVD<Matrix> out_svd(Xp, Eigen::ComputeThinU);
  const Vector& s_out = out_svd.singularValues();
  const Eigen::Index rank_out = s_out(0) > 0.0 ? (s_out.array() > kHankelRankTol * s_out(0)).count() : 0;
  if (rank_in < r || rank_out < r) {
    std::ostringstream os;
    os << "snapshot ranks (" << rank_in << ", " << rank_out << ") below r = " << r;
    throw Error(ErrorCode::InsufficientData, os.str());
  }

  const Eigen::Index p = rank_in;
  const Matrix G = Xp * in_svd.matrixV().leftCols(p) *
                   s_in.head(p).cwiseInverse().asDiagonal() *
                   in_svd.matrixU().leftCols(p).transpose();
  const Matrix basis = out_svd.matrixU().leftCols(r);
  Rom rom;
  rom.A = basis.transpose() * G.leftCols(n) * basis;
  rom.B = basis.transpose() * G.rightCols(m);
  rom.C = basis;
  return make_stable(rom, log);
}

Rom init_loewner(const std::vector<FreqSample>& left,
                 const std::vector<FreqSample>& right, Eigen::Index r,
                 std::uint64_t direction_seed, StabilizeLog* log) {
  if (left.empty() || right.empty())
    throw Error(ErrorCode::InvalidArgument, "Loewner needs left and right samples");
  const auto kl = static_cast<Eigen::Index>(left.size());
  const auto kr = static_cast<Eigen::Index>(right.size());
  if (r < 1 || kl < r || kr < r)
    throw Error(ErrorCode::InvalidArgument, "Loewner needs at least r samples per side");
  const Eigen::Index p = right.front().value.rows();
  const Eigen::Index m = right.front().value.cols();
  for (const auto* side : {&left, &right})
    for (const FreqSample& s : *side)
      if (s.value.rows() != p || s.value.cols() != m)
        throw Error(ErrorCode::InvalidArgument, "frequency samples disagree on shape");

  const auto left_groups = conjugate_groups(left, "left");
  const auto right_groups = conjugate_groups(right, "right");

  // Tangential directions: real, shared inside each conjugate group.
  NormalSource rng(direction_seed);
  ComplexMatrix Rdir(m, kr);   // right directions as columns
  ComplexMatrix Ldir(kl, p);   // left directions as rows
  for (const auto& [start, size] : right_groups) {
    const Matrix d = rng.matrix(m, 1);
    for (std::size_t q = 0; q < size; ++q) Rdir.col(static_cast<Eigen::Index>(start + q)) = d.cast<Complex>();
  }
  for (const auto& [start, size] : left_groups) {
    const Matrix d = rng.matrix(1, p);
    for (std::size_t q = 0; q < size; ++q) Ldir.row(static_cast<Eigen::Index>(start + q)) = d.cast<Complex>();
  }

  ComplexMatrix W(p, kr);  // w_j = H(lambda_j) r_j
  for (Eigen::Index j = 0; j < kr; ++j) W.col(j) = right[static_cast<std::size_t>(j)].value * Rdir.col(j);
  ComplexMatrix V(kl, m);  // v_i = l_i^T H(mu_i)
  for (Eigen::Index i = 0; i < kl; ++i) V.row(i) = Ldir.row(i) * left[static_cast<std::size_t>(i)].value;

  ComplexMatrix L(kl, kr), Ls(kl, kr);
  for (Eigen::Index i = 0; i < kl; ++i) {
    const Complex mu = left[static_cast<std::size_t>(i)].z;
    for (Eigen::Index j = 0; j < kr; ++j) {
      const Complex lambda = right[static_cast<std::size_t>(j)].z;
      const Complex gap = mu - lambda;
      if (std::abs(gap) < 1e-13) throw Error(ErrorCode::InvalidArgument, "left and right sample points coincide");
      const Complex vr = (V.row(i) * Rdir.col(j))(0, 0);
      const Complex lw = (Ldir.row(i) * W.col(j))(0, 0);
      L(i, j) = (vr - lw) / gap;
      Ls(i, j) = (mu * vr - lambda * lw) / gap;
    }
  }

  const ComplexMatrix Tl = realifying_transform(left_groups, kl);
  const ComplexMatrix Tr = realifying_transform(right_groups, kr);
  const Matrix Lr = real_part_checked(Tl.adjoint() * L * Tr, "Loewner matrix");
  const Matrix Lsr = real_part_checked(Tl.adjoint() * Ls * Tr, "shifted Loewner matrix");
  const Matrix Vr = real_part_checked(Tl.adjoint() * V, "left data");
  const Matrix Wr = real_part_checked(W * Tr, "right data");

  Matrix wide(kl, 2 * kr);
  wide << Lr, Lsr;
  Matrix tall(2 * kl, kr);
  tall << Lr, Lsr;
  Eigen::BDCSVD<Matrix> svd_wide(wide, Eigen::ComputeThinU);
  Eigen::BDCSVD<Matrix> svd_tall(tall, Eigen::ComputeThinV);
  const Matrix Y = svd_wide.matrixU().leftCols(r);
  const Matrix X = svd_tall.matrixV().leftCols(r);

  const Matrix E = -Y.transpose() * Lr * X;
  const Matrix Ad = -Y.transpose() * Lsr * X;
  const Matrix Bd = Y.transpose() * Vr;
  const Matrix Cd = Wr * X;

  Eigen::JacobiSVD<Matrix> esvd(E);
  const Vector& se = esvd.singularValues();
  if (!(se(r - 1) >= 1e-12 * se(0)) || se(0) == 0.0) {
    std::ostringstream os;
    os << "descriptor E has sigma_min/sigma_max = " << (se(0) > 0 ? se(r - 1) / se(0) : 0.0);
    throw Error(ErrorCode::SingularE, os.str());
  }
  Eigen::PartialPivLU<Matrix> lu(E);
  Rom rom{lu.solve(Ad), lu.solve(Bd), Cd};
  return make_stable(rom, log);
}

Rom init_data_bt(const ImpulseData& imp, Eigen::Index r, StabilizeLog* log) {
  const auto T = static_cast<Eigen::Index>(imp.markov.size());
  if (T < 2) throw Error(ErrorCode::InvalidArgument, "need at least two Markov parameters");
  const Eigen::Index p = imp.markov.front().rows();
  const Eigen::Index m = imp.markov.front().cols();
  for (const Matrix& h : imp.markov)
    if (h.rows() != p || h.cols() != m) throw Error(ErrorCode::InvalidArgument, "Markov parameters disagree on shape");

  const Eigen::Index a = (T + 1) / 2;  // block rows
  const Eigen::Index b = T / 2;        // block columns
  if (r < 1 || a * p < r || b * m < r) {
    std::ostringstream os;
    os << "block Hankel of size " << a * p << "x" << b * m << " cannot carry order " << r;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  Matrix H(a * p, b * m), Hs(a * p, b * m);
  for (Eigen::Index i = 0; i < a; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      H.block(i * p, j * m, p, m) = imp.markov[static_cast<std::size_t>(i + j)];
      Hs.block(i * p, j * m, p, m) = imp.markov[static_cast<std::size_t>(i + j + 1)];
    }
  }
  Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Eigen::Index rank = s(0) > 0.0 ? (s.array() > kHankelRankTol * s(0)).count() : 0;
  if (rank < r) {
    std::ostringstream os;
    os << "Hankel rank " << rank << " below r = " << r;
    throw Error(ErrorCode::InsufficientData, os.str());
  }
  const Vector sqrt_s = s.head(r).cwiseSqrt();
  const Matrix Ur = svd.matrixU().leftCols(r);
  const Matrix Vr = svd.matrixV().leftCols(r);
  const Matrix obs = Ur * sqrt_s.asDiagonal();                    // (a p) x r
  const Matrix ctr = sqrt_s.asDiagonal() * Vr.transpose();        // r x (b m)
  const Vector inv_sqrt = sqrt_s.cwiseInverse();

  Rom rom;
  rom.A = inv_sqrt.asDiagonal() * Ur.transpose() * Hs * Vr * inv_sqrt.asDiagonal();
  rom.B = ctr.leftCols(m);
  rom.C = obs.topRows(p);
  return make_stable(rom, log);
}

std::pair<std::vector<FreqSample>, std::vector<FreqSample>>
sample_unit_circle(const LtiSystem& sys, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample pair");
  NormalSource rng(seed);
  std::vector<double> angles;
  while (static_cast<int>(angles.size()) < 2 * pairs) {
    const double theta = std::numbers::pi * rng.uniform();
    if (theta >= std::numbers::pi * (1.0 - 1e-9)) continue;
    const bool distinct = std::none_of(angles.begin(), angles.end(),
                                       [&](double t) { return std::abs(t - theta) < 1e-9; });
    if (distinct) angles.push_back(theta);
  }
  std::vector<FreqSample> left, right;
  for (int k = 0; k < 2 * pairs; ++k) {
    const Complex z = std::polar(1.0, angles[static_cast<std::size_t>(k)]);
    const ComplexMatrix Hz = transfer_eval(sys, z);
    auto& bucket = (k % 2 == 0) ? right : left;
    const SampleSide side = (k % 2 == 0) ? SampleSide::Right : SampleSide::Left;
    bucket.push_back({z, Hz, side});
    bucket.push_back({std::conj(z), Hz.conjugate(), side});
  }
  return {std::move(left), std::move(right)};
}

ImpulseData impulse_data(const LtiSystem& sys, int count) {
  return ImpulseData{markov_parameters(sys, count)};
}

void save_freq_samples(const fs::path& path, const std::vector<FreqSample>& left,
                       const std::vector<FreqSample>& right) {
  auto encode = [](const std::vector<FreqSample>& samples) {
    json arr = json::array();
    for (const FreqSample& s : samples)
      arr.push_back({{"z", complex_to_json(s.z)}, {"value", cmatrix_to_json(s.value)}});
    return arr;
  };
  write_json_file(path, json{{"left", encode(left)}, {"right", encode(right)}});
}

std::pair<std::vector<FreqSample>, std::vector<FreqSample>>
load_freq_samples(const fs::path& path) {
  const json j = read_json_file(path);
  auto decode = [&](const char* key, SampleSide side) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
      throw Error(ErrorCode::FormatError, path.string() + ": missing array '" + key + "'");
    std::vector<FreqSample> out;
    try {
      for (const json& e : j.at(key))
        out.push_back({complex_from_json(e.at("z")), cmatrix_from_json(e.at("value")), side});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    return out;
  };
  return {decode("left", SampleSide::Left), decode("right", SampleSide::Right)};
}

void save_impulse_data(const fs::path& path, const ImpulseData& imp) {
  json arr = json::array();
  for (const Matrix& h : imp.markov) arr.push_back(cmatrix_to_json(h.cast<Complex>()));
  write_json_file(path, json{{"markov", arr}});
}

ImpulseData load_impulse_data(const fs::path& path) {
  const json j = read_json_file(path);
  if (!j.is_object() || !j.contains("markov") || !j.at("markov").is_array())
    throw Error(ErrorCode::FormatError, path.string() + ": missing array 'markov'");
  ImpulseData imp;
  try {
    for (const json& e : j.at("markov")) {
      const ComplexMatrix h = cmatrix_from_json(e);
      imp.markov.push_back(real_part_checked(h, "Markov parameter"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return imp;
}

}  // namespace h2mor
