#pragma once

#include <complex>
#include <vector>

#include "sysid/core.hpp"

namespace sysid {

using Complex = std::complex<double>;

/// Eigenvalues sorted by nonincreasing amplitude. Ties are broken by real
/// part (descending), then imaginary part (descending).
struct Spectrum {
  std::vector<Complex> eigenvalues;

  /// |lambda_d|, the smallest amplitude.
  double min_amplitude() const;
  double max_amplitude() const;
};

/// One diagonal block of a real Schur form.
struct SchurBlock {
  Eigen::Index offset = 0;
  Eigen::Index size = 1;  // 1 or 2
  /// One entry for a 1x1 block; alpha + i beta and alpha - i beta (beta > 0) for a 2x2 block.
  std::vector<Complex> eigenvalues;

  double amplitude() const { return std::abs(eigenvalues.front()); }
};

/// A = Q U Q^T with Q orthogonal and U quasi-upper-triangular. The trailing
/// block of a form returned by schur_sorted carries the smallest-amplitude
/// eigenvalue (or conjugate pair).
struct SchurForm {
  Matrix Q;
  Matrix U;
  std::vector<SchurBlock> blocks;

  const SchurBlock& trailing() const { return blocks.back(); }
};

/// B_k = P [[alpha, -beta], [beta, alpha]] P^{-1} with beta > 0.
///
/// P = [v_re, v_im] where v is the eigenvector of B_k for alpha - i beta, built
/// from the first row of (B_k - lambda I) when |b12| >= |b21| and from the second
/// row otherwise, then scaled so that the first column has unit norm.
struct BlockDiagonalization {
  Eigen::Matrix2d P;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;      // atan2(beta, alpha)
  double amplitude = 0.0;  // sqrt(alpha^2 + beta^2)

  Eigen::Matrix2d rotation_form() const;
  Eigen::Matrix2d reconstruct() const;
};

Spectrum eigenvalues_sorted(const Matrix& A);

/// Real Schur form of A, reordered by orthogonal swaps of adjacent diagonal
/// blocks until the smallest-amplitude block is last. Among blocks whose
/// amplitudes tie with the minimum, the one nearest the end is moved.
///
/// `max_iterations` caps the Francis QR iteration (0 selects the default of
/// 40 sweeps per row). Throws NumericalError if the iteration does not converge
/// or if a swap degrades the reconstruction residual.
SchurForm schur_sorted(const Matrix& A, int max_iterations = 0);

/// Swap the adjacent diagonal blocks of U starting at `offset` with sizes
/// `first` and `second`, updating Q so that Q U Q^T is preserved. U must be
/// quasi-upper-triangular on the affected window.
void swap_schur_blocks(Matrix& U, Matrix& Q, Eigen::Index offset, Eigen::Index first,
                       Eigen::Index second);

BlockDiagonalization block_diagonalize(const Eigen::Matrix2d& Bk);

/// Smallest eigenvalue of a symmetric matrix. S must be symmetric within
/// 1e-9 * ||S||_F; it is symmetrized before solving.
double lambda_min_sym(const Matrix& S);

struct SymmetricEigenpair {
  double value = 0.0;
  Vector vector;
};

/// Smallest eigenpair of a symmetric matrix; the eigenvector has unit norm and
/// its largest-magnitude component is positive.
SymmetricEigenpair min_eigenpair_sym(const Matrix& S);

/// ||Q U Q^T - A||_F.
double schur_residual(const SchurForm& form, const Matrix& A);

}  // namespace sysid
