#pragma once

#include <cstdint>

#include "sysid/core.hpp"
#include "sysid/spectral.hpp"

namespace sysid {

/// Running finite-time controllability gramians of x_{t+1} = A x_t + w_t.
///
/// At time index t (starting at 1) it holds Gamma = Gamma_{t-1}(A) and
/// S = sum_{s=1}^{t-1} Gamma_{s-1}(A), so S is zero at t = 1. Each step applies
/// S <- S + Gamma, then Gamma <- A Gamma A^T + I.
class GramianAccumulator {
 public:
  explicit GramianAccumulator(Matrix A);

  std::int64_t t() const { return t_; }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& information() const { return S_; }

  /// Advance from t to t + 1.
  void step();

  /// lambda_min of the current information matrix S_t.
  double lambda_min() const;

 private:
  Matrix A_;
  std::int64_t t_ = 1;
  Matrix gamma_;
  Matrix S_;
};

enum class ConfusingKind { gramian_direction, schur_spectral };

std::string_view to_string(ConfusingKind k);

struct ConfusingInstance {
  Matrix Aprime;
  double distance = 0.0;  // ||A - A'||_F
  ConfusingKind kind = ConfusingKind::gramian_direction;
};

/// Gamma_s(A) = sum_{k=0}^{s} A^k (A^k)^T, via Gamma_s = A Gamma_{s-1} A^T + I.
Matrix gramian(const Matrix& A, std::int64_t s);

/// S_t = sum_{s=1}^{t-1} Gamma_{s-1}(A).
Matrix information_matrix(const Matrix& A, std::int64_t t);

/// lambda_min(S_t); zero at t = 1.
double cumulative_info(const Matrix& A, std::int64_t t);

/// phi_a(t) = sum_{s=1}^{t-1} sum_{k=0}^{s-1} a^{2k}.
double phi(double a, std::int64_t t);

/// Smallest tau with lambda_min(S_tau) >= rate_threshold(spec).
BoundReport tau_gramian(const Matrix& A, const AccuracySpec& spec,
                        std::int64_t step_cap = kDefaultStepCap);

/// Smallest tau with phi_{|lambda_d(A)|}(tau) >= rate_threshold(spec).
BoundReport tau_spectral(const Matrix& A, const AccuracySpec& spec,
                         std::int64_t step_cap = kDefaultStepCap);

/// Same inversion as tau_spectral for a known amplitude |lambda_d|.
BoundReport tau_phi(double amplitude, const AccuracySpec& spec,
                    std::int64_t step_cap = kDefaultStepCap);

/// Exact E_A[L_t] = 1/2 tr((A - A')^T (A - A') S_t).
double expected_llr(const Matrix& A, const Matrix& Aprime, std::int64_t t);

/// A' = A - 2 eps q q^T with q the unit eigenvector of lambda_min(S_t). Requires t >= 2.
ConfusingInstance confusing_gramian(const Matrix& A, const AccuracySpec& spec, std::int64_t t);

/// A' = A - 2 eps E_k(B_k) Q^T built from the amplitude-sorted real Schur form.
ConfusingInstance confusing_schur(const Matrix& A, const AccuracySpec& spec);

/// True iff 2 eps <= ||A - A'||_F < 3 eps. Both edges are evaluated with a
/// relative slack of 1e-12 so that constructions landing exactly on 2 eps are
/// accepted and ones landing exactly on 3 eps are rejected despite round-off.
bool check_locally_stable_gap(const Matrix& A, const Matrix& Aprime, const AccuracySpec& spec);

}  // namespace sysid
