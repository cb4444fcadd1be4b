#include "sysid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

namespace sysid {

namespace {

void require_square(const Matrix& A, const char* name) {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw InputError(std::string(name) + " must be square");
  }
}

bool amplitude_order(const Complex& x, const Complex& y) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  if (ax != ay) return ax > ay;
  if (x.real() != y.real()) return x.real() > y.real();
  return x.imag() > y.imag();
}

/// Eigenvalues of a 2x2 block; complex pairs are returned as (alpha + i beta, alpha - i beta), beta > 0.
std::vector<Complex> eigenvalues_2x2(double a, double b, double c, double d) {
  const double half_trace = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double disc = half_diff * half_diff + b * c;
  if (disc < 0.0) {
    const double beta = std::sqrt(-disc);
    return {Complex(half_trace, beta), Complex(half_trace, -beta)};
  }
  const double root = std::sqrt(disc);
  return {Complex(half_trace + root, 0.0), Complex(half_trace - root, 0.0)};
}

std::vector<Complex> block_eigenvalues(const Matrix& U, Eigen::Index offset, Eigen::Index size) {
  if (size == 1) return {Complex(U(offset, offset), 0.0)};
  return eigenvalues_2x2(U(offset, offset), U(offset, offset + 1), U(offset + 1, offset),
                         U(offset + 1, offset + 1));
}

/// Triangularize a 2x2 diagonal block that has real eigenvalues with a Givens rotation.
void split_real_block(Matrix& U, Matrix& Q, Eigen::Index k) {
  const double a = U(k, k), b = U(k, k + 1), c = U(k + 1, k), d = U(k + 1, k + 1);
  const double lambda = eigenvalues_2x2(a, b, c, d).front().real();
  Eigen::Vector2d v1(b, lambda - a);
  Eigen::Vector2d v2(lambda - d, c);
  Eigen::Vector2d v = v1.norm() >= v2.norm() ? v1 : v2;
  if (v.norm() == 0.0) v = Eigen::Vector2d::UnitX();
  v.normalize();
  Eigen::Matrix2d G;
  G << v(0), -v(1), v(1), v(0);
  U.middleRows(k, 2) = G.transpose() * U.middleRows(k, 2);
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  Q.middleCols(k, 2) = Q.middleCols(k, 2) * G;
  U(k + 1, k) = 0.0;
}

std::vector<Eigen::Index> detect_block_sizes(const Matrix& U) {
  std::vector<Eigen::Index> sizes;
  const Eigen::Index n = U.rows();
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && U(i + 1, i) != 0.0) {
      sizes.push_back(2);
      i += 2;
    } else {
      sizes.push_back(1);
      i += 1;
    }
  }
  return sizes;
}

double residual_tolerance(const Matrix& A) { return 1e-8 * (1.0 + A.norm()); }

}  // namespace

double Spectrum::min_amplitude() const { return std::abs(eigenvalues.back()); }
double Spectrum::max_amplitude() const { return std::abs(eigenvalues.front()); }

Eigen::Matrix2d BlockDiagonalization::rotation_form() const {
  Eigen::Matrix2d R;
  R << alpha, -beta, beta, alpha;
  return R;
}

Eigen::Matrix2d BlockDiagonalization::reconstruct() const {
  return P * rotation_form() * P.inverse();
}

Spectrum eigenvalues_sorted(const Matrix& A) {
  require_square(A, "A");
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration did not converge", std::nan(""));
  }
  Spectrum s;
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), amplitude_order);
  return s;
}

void swap_schur_blocks(Matrix& U, Matrix& Q, Eigen::Index offset, Eigen::Index first,
                       Eigen::Index second) {
  const Eigen::Index p = first;
  const Eigen::Index q = second;
  const Eigen::Index n = p + q;
  const Matrix A11 = U.block(offset, offset, p, p);
  const Matrix A12 = U.block(offset, offset + p, p, q);
  const Matrix A22 = U.block(offset + p, offset + p, q, q);

  // Solve A11 X - X A22 = -A12. Columns of [X; I] then span the invariant
  // subspace belonging to A22.
  const Matrix Ip = Matrix::Identity(p, p);
  const Matrix Iq = Matrix::Identity(q, q);
  Matrix K(p * q, p * q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      K.block(i * p, j * p, p, p) = Iq(i, j) * A11 - A22(j, i) * Ip;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(A12.data(), p * q);
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) {
    throw NumericalError("cannot swap Schur blocks with shared eigenvalues", 0.0);
  }
  const Vector x = lu.solve(rhs);
  const Matrix X = Eigen::Map<const Matrix>(x.data(), p, q);

  Matrix Z(n, q);
  Z.topRows(p) = X;
  Z.bottomRows(q) = Iq;
  Eigen::HouseholderQR<Matrix> qr(Z);
  const Matrix W = qr.householderQ() * Matrix::Identity(n, n);

  U.middleRows(offset, n) = W.transpose() * U.middleRows(offset, n);
  U.middleCols(offset, n) = U.middleCols(offset, n) * W;
  Q.middleCols(offset, n) = Q.middleCols(offset, n) * W;

  // The block below the new leading block should now vanish.
  auto lower = U.block(offset + q, offset, p, q);
  const double window_norm = U.block(offset, offset, n, n).norm();
  if (lower.norm() > 1e-8 * (1.0 + window_norm)) {
    throw NumericalError("Schur block swap left a large subdiagonal residue", lower.norm());
  }
  lower.setZero();
}

SchurForm schur_sorted(const Matrix& A, int max_iterations) {
  require_square(A, "A");
  require_finite(A, "A");
  const Eigen::Index n = A.rows();

  Eigen::RealSchur<Matrix> schur(n);
  if (max_iterations > 0) schur.setMaxIterations(max_iterations);
  schur.compute(A, /*computeU=*/true);
  if (schur.info() != Eigen::Success) {
    // Residual: norm of the subdiagonal of the partially reduced matrix.
    const Matrix& T = schur.matrixT();
    const double residual = n > 1 ? T.diagonal(-1).norm() : 0.0;
    throw NumericalError("real Schur iteration did not converge within the iteration cap",
                         residual);
  }

  SchurForm form;
  form.U = schur.matrixT();
  form.Q = schur.matrixU();

  std::vector<Eigen::Index> sizes = detect_block_sizes(form.U);

  // Normalize: split 2x2 blocks with real eigenvalues and clear round-off
  // below the block diagonal.
  {
    Eigen::Index k = 0;
    std::vector<Eigen::Index> normalized;
    for (Eigen::Index size : sizes) {
      if (size == 2 && block_eigenvalues(form.U, k, 2).front().imag() == 0.0) {
        split_real_block(form.U, form.Q, k);
        normalized.push_back(1);
        normalized.push_back(1);
      } else {
        normalized.push_back(size);
      }
      k += size;
    }
    sizes = std::move(normalized);
    Eigen::Index row = 0;
    for (Eigen::Index size : sizes) {
      for (Eigen::Index r = row + size; r < n; ++r) {
        for (Eigen::Index c = row; c < row + size; ++c) form.U(r, c) = 0.0;
      }
      row += size;
    }
  }

  // Pick the block to move: smallest amplitude, latest among ties.
  std::vector<double> amps;
  {
    Eigen::Index k = 0;
    for (Eigen::Index size : sizes) {
      amps.push_back(std::abs(block_eigenvalues(form.U, k, size).front()));
      k += size;
    }
  }
  const double min_amp = *std::min_element(amps.begin(), amps.end());
  const double tie_tol = 1e-10 * std::max(1.0, min_amp);
  std::size_t target = 0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (amps[i] <= min_amp + tie_tol) target = i;
  }

  const double tol = residual_tolerance(A);
  for (std::size_t i = target; i + 1 < sizes.size(); ++i) {
    Eigen::Index offset = 0;
    for (std::size_t j = 0; j < i; ++j) offset += sizes[j];
    swap_schur_blocks(form.U, form.Q, offset, sizes[i], sizes[i + 1]);
    std::swap(sizes[i], sizes[i + 1]);
    const double residual = (form.Q * form.U * form.Q.transpose() - A).norm();
    if (residual > tol) {
      throw NumericalError("Schur reordering lost accuracy", residual);
    }
  }

  Eigen::Index k = 0;
  for (Eigen::Index size : sizes) {
    form.blocks.push_back(SchurBlock{k, size, block_eigenvalues(form.U, k, size)});
    k += size;
  }
  return form;
}

double schur_residual(const SchurForm& form, const Matrix& A) {
  return (form.Q * form.U * form.Q.transpose() - A).norm();
}

BlockDiagonalization block_diagonalize(const Eigen::Matrix2d& Bk) {
  if (!Bk.allFinite()) throw InputError("block contains NaN or Inf entries");
  const double a = Bk(0, 0), b = Bk(0, 1), c = Bk(1, 0), d = Bk(1, 1);
  const auto ev = eigenvalues_2x2(a, b, c, d);
  if (ev.front().imag() == 0.0) {
    throw InputError("block has real eigenvalues; use the 1x1 path");
  }

  BlockDiagonalization out;
  out.alpha = ev.front().real();
  out.beta = ev.front().imag();
  out.amplitude = std::hypot(out.alpha, out.beta);
  out.theta = std::atan2(out.beta, out.alpha);

  // Eigenvector for alpha - i beta gives Bk [v_re v_im] = [v_re v_im] [[alpha, -beta], [beta, alpha]].
  const Complex lambda(out.alpha, -out.beta);
  Eigen::Vector2cd v;
  if (std::abs(b) >= std::abs(c)) {
    v << Complex(b, 0.0), lambda - a;
  } else {
    v << lambda - d, Complex(c, 0.0);
  }
  out.P.col(0) = v.real();
  out.P.col(1) = v.imag();
  out.P /= out.P.col(0).norm();
  return out;
}

SymmetricEigenpair min_eigenpair_sym(const Matrix& S) {
  require_square(S, "S");
  require_finite(S, "S");
  const double asym = (S - S.transpose()).norm();
  if (asym > 1e-9 * S.norm()) {
    throw InputError("matrix is not symmetric within tolerance");
  }
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge", std::nan(""));
  }
  SymmetricEigenpair pair;
  pair.value = solver.eigenvalues()(0);
  pair.vector = solver.eigenvectors().col(0);
  Eigen::Index imax = 0;
  pair.vector.cwiseAbs().maxCoeff(&imax);
  if (pair.vector(imax) < 0.0) pair.vector = -pair.vector;
  return pair;
}

double lambda_min_sym(const Matrix& S) {
  require_square(S, "S");
  require_finite(S, "S");
  const double asym = (S - S.transpose()).norm();
  if (asym > 1e-9 * S.norm()) {
    throw InputError("matrix is not symmetric within tolerance");
  }
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge", std::nan(""));
  }
  return solver.eigenvalues()(0);
}

}  // namespace sysid
