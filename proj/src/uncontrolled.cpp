#include "sysid/uncontrolled.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

namespace sysid {

namespace {

constexpr Eigen::Index kMaxDimension = 64;

void require_square(const Matrix& A) {
  if (A.rows() < 1 || A.rows() != A.cols()) throw InputError("A must be square");
  require_finite(A, "A");
}

// phi switches from the closed form to summation when |1 - a^2| is below this.
constexpr double kPhiSeriesSwitch = 1e-4;

BoundReport trivial_report(BoundMethod method, double threshold) {
  BoundReport r;
  r.tau = 1;
  r.method = method;
  r.threshold = threshold;
  r.trivial = true;
  r.curve.push_back({1, 0.0});
  return r;
}

[[noreturn]] void throw_cap(std::int64_t cap, double last) {
  throw IterationCapError("bound inversion exceeded " + std::to_string(cap) +
                              " steps; try a larger eps or delta",
                          cap, last);
}

}  // namespace

std::string_view to_string(ConfusingKind k) {
  return k == ConfusingKind::gramian_direction ? "gramian" : "schur";
}

GramianAccumulator::GramianAccumulator(Matrix A) : A_(std::move(A)) {
  require_square(A_);
  gamma_ = Matrix::Identity(A_.rows(), A_.cols());
  S_ = Matrix::Zero(A_.rows(), A_.cols());
}

void GramianAccumulator::step() {
  S_ += gamma_;
  gamma_ = A_ * gamma_ * A_.transpose();
  gamma_.diagonal().array() += 1.0;
  ++t_;
}

double GramianAccumulator::lambda_min() const {
  if (!S_.allFinite()) {
    throw NumericalError("gramian sum overflowed", std::numeric_limits<double>::infinity());
  }
  return lambda_min_sym(S_);
}

Matrix gramian(const Matrix& A, std::int64_t s) {
  require_square(A);
  if (s < 0) throw InputError("gramian index must be >= 0");
  Matrix G = Matrix::Identity(A.rows(), A.cols());
  for (std::int64_t k = 1; k <= s; ++k) {
    G = A * G * A.transpose();
    G.diagonal().array() += 1.0;
  }
  return G;
}

Matrix information_matrix(const Matrix& A, std::int64_t t) {
  if (t < 1) throw InputError("t must be >= 1");
  GramianAccumulator acc(A);
  while (acc.t() < t) acc.step();
  return acc.information();
}

double cumulative_info(const Matrix& A, std::int64_t t) {
  if (t < 1) throw InputError("t must be >= 1");
  GramianAccumulator acc(A);
  while (acc.t() < t) acc.step();
  return acc.lambda_min();
}

double phi(double a, std::int64_t t) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("phi requires a finite a >= 0");
  if (t < 1) throw InputError("phi requires t >= 1");
  const double td = static_cast<double>(t);
  if (a == 0.0) return td - 1.0;
  if (a == 1.0) return 0.5 * td * (td - 1.0);

  const double h = (a - 1.0) * (a + 1.0);  // a^2 - 1
  if (std::abs(h) >= kPhiSeriesSwitch) {
    // (a^{2t} + t(1 - a^2) - 1) / (1 - a^2)^2, with a^{2t} - 1 formed by expm1/log1p.
    return (std::expm1(td * std::log1p(h)) - td * h) / (h * h);
  }
  const double a2 = a * a;
  double inner = 1.0;  // sum_{k=0}^{s-1} a^{2k} at s = 1
  double total = 0.0;
  for (std::int64_t s = 1; s < t; ++s) {
    total += inner;
    inner = a2 * inner + 1.0;
  }
  return total;
}

BoundReport tau_gramian(const Matrix& A, const AccuracySpec& spec, std::int64_t step_cap) {
  require_square(A);
  if (A.rows() > kMaxDimension) throw InputError("A dimension exceeds 64");
  const double threshold = rate_threshold(spec);
  if (threshold <= 0.0) return trivial_report(BoundMethod::gramian, threshold);

  BoundReport r;
  r.method = BoundMethod::gramian;
  r.threshold = threshold;
  GramianAccumulator acc(A);
  double info = 0.0;
  r.curve.push_back({1, info});
  while (info < threshold) {
    if (acc.t() >= step_cap) throw_cap(step_cap, info);
    acc.step();
    info = acc.lambda_min();
    r.curve.push_back({acc.t(), info});
  }
  r.tau = acc.t();
  return r;
}

BoundReport tau_phi(double amplitude, const AccuracySpec& spec, std::int64_t step_cap) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw InputError("amplitude must be a finite value >= 0");
  }
  const double threshold = rate_threshold(spec);
  if (threshold <= 0.0) return trivial_report(BoundMethod::spectral, threshold);

  BoundReport r;
  r.method = BoundMethod::spectral;
  r.threshold = threshold;
  const double a2 = amplitude * amplitude;
  std::int64_t t = 1;
  double value = 0.0;
  double inner = 1.0;
  r.curve.push_back({t, value});
  // Monotone accumulation: a^{2t} is never formed on its own, so unstable
  // amplitudes stop at the crossing before anything overflows.
  while (value < threshold) {
    if (t >= step_cap) throw_cap(step_cap, value);
    value += inner;
    inner = a2 * inner + 1.0;
    ++t;
    r.curve.push_back({t, value});
  }
  r.tau = t;
  return r;
}

BoundReport tau_spectral(const Matrix& A, const AccuracySpec& spec, std::int64_t step_cap) {
  require_square(A);
  return tau_phi(eigenvalues_sorted(A).min_amplitude(), spec, step_cap);
}

double expected_llr(const Matrix& A, const Matrix& Aprime, std::int64_t t) {
  require_square(A);
  if (Aprime.rows() != A.rows() || Aprime.cols() != A.cols()) {
    throw InputError("A and A' must have the same shape");
  }
  const Matrix D = A - Aprime;
  const Matrix S = information_matrix(A, t);
  return 0.5 * (D.transpose() * D * S).trace();
}

ConfusingInstance confusing_gramian(const Matrix& A, const AccuracySpec& spec, std::int64_t t) {
  require_square(A);
  if (t < 2) throw InputError("confusing_gramian requires t >= 2");
  const Matrix S = information_matrix(A, t);
  const SymmetricEigenpair pair = min_eigenpair_sym(S);
  ConfusingInstance out;
  out.kind = ConfusingKind::gramian_direction;
  out.Aprime = A - 2.0 * spec.eps() * pair.vector * pair.vector.transpose();
  out.distance = (A - out.Aprime).norm();
  return out;
}

ConfusingInstance confusing_schur(const Matrix& A, const AccuracySpec& spec) {
  require_square(A);
  const SchurForm form = schur_sorted(A);
  const SchurBlock& last = form.trailing();
  const Eigen::Index d = A.rows();

  Matrix E = Matrix::Zero(d, d);
  if (last.size == 1) {
    E(d - 1, d - 1) = 1.0;
  } else {
    const Eigen::Matrix2d Bk = form.U.block(last.offset, last.offset, 2, 2);
    const BlockDiagonalization bd = block_diagonalize(Bk);
    const Eigen::Matrix2d Pinv = bd.P.inverse();
    E.block(last.offset, last.offset, 2, 2) = Pinv / Pinv.norm();
  }

  ConfusingInstance out;
  out.kind = ConfusingKind::schur_spectral;
  out.Aprime = A - 2.0 * spec.eps() * E * form.Q.transpose();
  out.distance = (A - out.Aprime).norm();
  return out;
}

bool check_locally_stable_gap(const Matrix& A, const Matrix& Aprime, const AccuracySpec& spec) {
  if (Aprime.rows() != A.rows() || Aprime.cols() != A.cols()) return false;
  constexpr double slack = 1e-12;
  const double dist = (A - Aprime).norm();
  const double eps = spec.eps();
  return dist >= 2.0 * eps * (1.0 - slack) && dist < 3.0 * eps * (1.0 - slack);
}

}  // namespace sysid
