#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sysid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors. The CLI maps each kind onto a stable exit code.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (dimensions, ranges, non-finite data).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed; carries the residual it reached.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A bound inversion walked past its step cap without meeting the threshold.
class IterationCapError : public Error {
 public:
  IterationCapError(const std::string& what, std::int64_t cap, double last_value)
      : Error(what), cap_(cap), last_value_(last_value) {}
  std::int64_t cap() const { return cap_; }
  double last_value() const { return last_value_; }

 private:
  std::int64_t cap_;
  double last_value_;
};

/// The empirical harness reached its horizon without a stable crossing.
class HorizonExhaustedError : public Error {
 public:
  HorizonExhaustedError(const std::string& what, double final_fraction)
      : Error(what), final_fraction_(final_fraction) {}
  double final_fraction() const { return final_fraction_; }

 private:
  double final_fraction_;
};

/// The information matrix has a null space the policy can never excite.
/// `stalled_subspace` holds an orthonormal basis of that null space as columns.
class UnreachableBoundError : public Error {
 public:
  UnreachableBoundError(const std::string& what, Matrix stalled_subspace)
      : Error(what), stalled_subspace_(std::move(stalled_subspace)) {}
  const Matrix& stalled_subspace() const { return stalled_subspace_; }

 private:
  Matrix stalled_subspace_;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

bool all_finite(const Matrix& m);

/// Throws InputError naming `what` unless every entry of `m` is finite.
void require_finite(const Matrix& m, std::string_view what);

class UncontrolledSystem {
 public:
  explicit UncontrolledSystem(Matrix A);

  const Matrix& A() const { return A_; }
  Eigen::Index dim() const { return A_.rows(); }

 private:
  Matrix A_;
};

class ControlledSystem {
 public:
  ControlledSystem(Matrix A, Matrix B);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  Eigen::Index state_dim() const { return A_.rows(); }
  Eigen::Index input_dim() const { return B_.cols(); }

 private:
  Matrix A_;
  Matrix B_;
};

/// PAC identification target: Frobenius accuracy eps with failure probability delta.
class AccuracySpec {
 public:
  AccuracySpec(double eps, double delta);

  double eps() const { return eps_; }
  double delta() const { return delta_; }

  /// True when delta >= 1/2.4, i.e. the threshold is non-positive.
  bool vacuous() const;

 private:
  double eps_;
  double delta_;
};

enum class BoundMethod { gramian, spectral, controlled };

std::string_view to_string(BoundMethod m);
BoundMethod bound_method_from_string(std::string_view s);

struct CurvePoint {
  std::int64_t t = 0;
  double value = 0.0;
};

struct BoundReport {
  std::int64_t tau = 1;
  BoundMethod method = BoundMethod::gramian;
  double threshold = 0.0;
  std::vector<CurvePoint> curve;
  /// Set when the threshold is non-positive; tau is then 1.
  bool trivial = false;
  /// The bound is identical under the Frobenius and operator norms.
  std::string norm = "frobenius";
};

inline constexpr std::int64_t kDefaultStepCap = 10'000'000;

// ---------------------------------------------------------------------------
// Information-theoretic thresholds
// ---------------------------------------------------------------------------

/// (1 / (2 eps^2)) * ln(1 / (2.4 delta)). Non-positive when delta >= 1/2.4.
double rate_threshold(const AccuracySpec& spec);

/// KL divergence between Bernoulli(x) and Bernoulli(y), natural log.
/// d(0,0) = d(1,1) = 0; +inf when y is 0 or 1 and x != y.
double bernoulli_kl(double x, double y);

/// ln(1 / (2.4 delta)), the lower bound used for d(1 - delta, delta) when delta < 1/2.
double confidence_gap_bound(double delta);

/// Exact d(1 - delta, delta), for diagnostics against confidence_gap_bound.
double confidence_gap_exact(double delta);

}  // namespace sysid
