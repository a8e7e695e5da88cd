#include "h2mor/sysmodel.hpp"

#include <algorithm>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "h2mor/error.hpp"
#include "h2mor/random.hpp"

namespace h2mor {
namespace {

constexpr int kErrorHeadTerms = 4000;
constexpr double kErrorHeadDecay = 1e-6;

void check_shape(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

void require_stable(const Spectrum& spectrum, const char* who) {
  double rho = 0.0;
  for (const Complex& l : spectrum) rho = std::max(rho, std::abs(l));
  if (rho >= 1.0 - 1e-12) {
    std::ostringstream os;
    os << who << " has spectral radius " << rho;
    throw Error(ErrorCode::NotStable, os.str());
  }
}

void require_compatible(const LtiSystem& sys, const Rom& rom) {
  sys.validate();
  rom.validate();
  std::ostringstream os;
  os << "rom (r=" << rom.r() << ", m=" << rom.m() << ", p=" << rom.p()
     << ") does not match system (m=" << sys.m() << ", p=" << sys.p() << ")";
  check_shape(rom.m() == sys.m() && rom.p() == sys.p(), os.str());
}

}  // namespace

LtiSystem LtiSystem::with_identity_output(Matrix A, Matrix B) {
  LtiSystem sys{std::move(A), std::move(B), Matrix()};
  sys.C = Matrix::Identity(sys.A.rows(), sys.A.rows());
  return sys;
}

void LtiSystem::validate() const {
  check_shape(A.rows() == A.cols(), "system A must be square");
  check_shape(B.rows() == A.rows(), "system B must have n rows");
  check_shape(C.cols() == A.rows(), "system C must have n columns");
}

void Rom::validate() const {
  check_shape(A.rows() == A.cols(), "rom Ahat must be square");
  check_shape(B.rows() == A.rows(), "rom Bhat must have r rows");
  check_shape(C.cols() == A.rows(), "rom Chat must have r columns");
}

Rom Rom::zero(Eigen::Index r, Eigen::Index m, Eigen::Index p) {
  return Rom{Matrix::Zero(r, r), Matrix::Zero(r, m), Matrix::Zero(p, r)};
}

bool satisfies_modulus_bounds(const Spectrum& spectrum, double min_modulus) {
  return std::all_of(spectrum.begin(), spectrum.end(), [&](const Complex& l) {
    const double mod = std::abs(l);
    return mod > min_modulus && mod < 1.0;
  });
}

double h2_norm(const LtiSystem& sys) {
  sys.validate();
  const Matrix sigma_c = solve_stein(sys.A, sys.B * sys.B.transpose());
  return std::sqrt(std::max(0.0, (sys.C * sigma_c * sys.C.transpose()).trace()));
}

double h2_error(const LtiSystem& sys, const Rom& rom) {
  require_compatible(sys, rom);
  // ||H - Hhat||^2 = sum_k ||C A^k B - Chat Ahat^k Bhat||_F^2. The leading
  // terms are summed as explicit differences; the remainder goes through the
  // error-system gramian once the propagated inputs have decayed, so the
  // cancellation in tr(Ce Ec Ce^T) only affects a small tail.
  const Eigen::Index n = sys.n(), r = rom.r();
  Matrix X = sys.B, Xh = rom.B;
  const double start = X.squaredNorm() + Xh.squaredNorm();
  double head = 0.0;
  for (int k = 0; k < kErrorHeadTerms; ++k) {
    if (X.squaredNorm() + Xh.squaredNorm() <= kErrorHeadDecay * start) break;
    head += (sys.C * X - rom.C * Xh).squaredNorm();
    X = sys.A * X;
    Xh = rom.A * Xh;
  }
  Matrix Ae = Matrix::Zero(n + r, n + r);
  Ae.topLeftCorner(n, n) = sys.A;
  Ae.bottomRightCorner(r, r) = rom.A;
  Matrix Be(n + r, sys.m());
  Be << X, Xh;
  Matrix Ce(sys.p(), n + r);
  Ce << sys.C, -rom.C;
  const Matrix Ec = solve_stein(Ae, Be * Be.transpose());
  const double tail = std::max(0.0, (Ce * Ec * Ce.transpose()).trace());
  return std::sqrt(head + tail);
}

ErrorGramians error_gramians(const LtiSystem& sys, const Rom& rom) {
  require_compatible(sys, rom);
  ErrorGramians g;
  g.SigmaC = solve_stein(sys.A, sys.B * sys.B.transpose());
  g.SigmaO = solve_stein(sys.A.transpose(), sys.C.transpose() * sys.C);
  g.P = solve_stein(rom.A, rom.B * rom.B.transpose());
  g.Q = solve_stein(rom.A.transpose(), rom.C.transpose() * rom.C);
  g.R = solve_discrete_sylvester(sys.A, rom.A.transpose(), sys.B * rom.B.transpose());
  g.S = solve_discrete_sylvester(sys.A.transpose(), rom.A, -sys.C.transpose() * rom.C);
  return g;
}

double model_objective(const LtiSystem& sys, const Rom& rom) {
  return model_based_gradients(sys, rom).f;
}

ModelGradients model_based_gradients(const LtiSystem& sys, const Rom& rom) {
  return ModelOracle(sys).gradients(rom);
}

ModelOracle::ModelOracle(LtiSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  schur_A_ = real_schur(sys_.A);
  require_stable(schur_A_.eigenvalues, "system");
  schur_At_ = real_schur(sys_.A.transpose());
  const Matrix sigma_c = solve_discrete_sylvester(schur_A_, schur_At_, sys_.B * sys_.B.transpose());
  trace_sigma_c_ = (sys_.C * sigma_c * sys_.C.transpose()).trace();
}

double ModelOracle::h2_error(const Rom& rom) const {
  require_compatible(sys_, rom);
  const SchurForm schur_Aht = real_schur(rom.A.transpose());
  require_stable(schur_Aht.eigenvalues, "rom");
  const Matrix P = solve_stein(rom.A, rom.B * rom.B.transpose());
  const Matrix R = solve_discrete_sylvester(schur_A_, schur_Aht, sys_.B * rom.B.transpose());
  const double f = (rom.C * P * rom.C.transpose()).trace() -
                   2.0 * (sys_.C * R * rom.C.transpose()).trace();
  return std::sqrt(std::max(0.0, trace_sigma_c_ + f));
}

double ModelOracle::relative_error(const Rom& rom) const {
  return h2_error(rom) / h2_norm();
}

ModelGradients ModelOracle::gradients(const Rom& rom) const {
  require_compatible(sys_, rom);
  const SchurForm schur_Ah = real_schur(rom.A);
  const SchurForm schur_Aht = real_schur(rom.A.transpose());
  require_stable(schur_Ah.eigenvalues, "rom");

  ModelGradients out;
  out.P = solve_discrete_sylvester(schur_Ah, schur_Aht, rom.B * rom.B.transpose());
  out.P = 0.5 * (out.P + out.P.transpose());
  out.Q = solve_discrete_sylvester(schur_Aht, schur_Ah, rom.C.transpose() * rom.C);
  out.Q = 0.5 * (out.Q + out.Q.transpose());
  out.R = solve_discrete_sylvester(schur_A_, schur_Aht, sys_.B * rom.B.transpose());
  out.S = solve_discrete_sylvester(schur_At_, schur_Ah, -sys_.C.transpose() * rom.C);

  out.grad.gA = 2.0 * (out.Q * rom.A * out.P + out.S.transpose() * sys_.A * out.R);
  out.grad.gB = 2.0 * (out.S.transpose() * sys_.B + out.Q * rom.B);
  out.grad.gC = 2.0 * (rom.C * out.P - sys_.C * out.R);
  out.f = (rom.C * out.P * rom.C.transpose()).trace() -
          2.0 * (sys_.C * out.R * rom.C.transpose()).trace();
  return out;
}

ComplexMatrix transfer_eval(const Matrix& A, const Matrix& B, const Matrix& C,
                            Complex z) {
  const Eigen::Index n = A.rows();
  ComplexMatrix shifted = -A.cast<Complex>();
  shifted.diagonal().array() += z;
  Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
  if (n > 0) {
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 0.0) || lu.rcond() < 1e-15) {
      std::ostringstream os;
      os << "zI - A is numerically singular at z = " << z;
      throw Error(ErrorCode::SingularShift, os.str());
    }
  }
  return C.cast<Complex>() * lu.solve(B.cast<Complex>());
}

std::vector<Vector> simulate(const LtiSystem& sys, const Vector& x0,
                             const std::vector<Vector>& inputs) {
  check_shape(x0.size() == sys.n(), "initial state has the wrong length");
  std::vector<Vector> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (const Vector& u : inputs) {
    check_shape(u.size() == sys.m(), "input has the wrong length");
    states.push_back(sys.A * states.back() + sys.B * u);
  }
  return states;
}

std::vector<Matrix> markov_parameters(const LtiSystem& sys, int count) {
  std::vector<Matrix> out;
  out.reserve(std::max(count, 0));
  Matrix AkB = sys.B;
  for (int k = 0; k < count; ++k) {
    out.push_back(sys.C * AkB);
    AkB = sys.A * AkB;
  }
  return out;
}

LtiSystem generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.m < 1 || !(spec.h > 0.0))
    throw Error(ErrorCode::InvalidArgument, "synthetic spec needs n >= 1, m >= 1, h > 0");
  const Eigen::Index n = spec.n;
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    NormalSource rng(derive_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
    const Matrix G = rng.matrix(n, n);
    const Matrix J = G - G.transpose();
    const Matrix Gr = rng.matrix(n, n);
    const Matrix R = Gr * Gr.transpose() + 0.1 * Matrix::Identity(n, n);
    const Matrix Gq = rng.matrix(n, n);
    const Matrix Q = Gq * Gq.transpose() + 0.1 * Matrix::Identity(n, n);
    const Matrix Bc = rng.matrix(n, spec.m);

    const Matrix Ac = (J - R) * Q;
    const Matrix A = (Ac * spec.h).exp();

    Matrix integral;
    Eigen::PartialPivLU<Matrix> lu(Ac);
    if (lu.rcond() > 1e-10) {
      integral = lu.solve(A - Matrix::Identity(n, n));
    } else {
      // Van Loan block exponential: exp([[Ac, I], [0, 0]] h) carries the
      // integral in its upper-right block.
      Matrix aug = Matrix::Zero(2 * n, 2 * n);
      aug.topLeftCorner(n, n) = Ac;
      aug.topRightCorner(n, n) = Matrix::Identity(n, n);
      integral = (aug * spec.h).exp().topRightCorner(n, n);
    }
    LtiSystem sys = LtiSystem::with_identity_output(A, integral * Bc);
    if (sys.A.allFinite() && sys.B.allFinite() && spectral_radius(sys.A) < 1.0)
      return sys;
  }
  throw Error(ErrorCode::GenerationFailed,
              "no Schur-stable system after 10 attempts");
}

}  // namespace h2mor
