#include "sysid/core.hpp"

#include <cmath>
#include <limits>

namespace sysid {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " contains NaN or Inf entries");
  }
}

UncontrolledSystem::UncontrolledSystem(Matrix A) : A_(std::move(A)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw InputError("A must be square with dimension >= 1");
  }
  require_finite(A_, "A");
}

ControlledSystem::ControlledSystem(Matrix A, Matrix B) : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw InputError("A must be square with dimension >= 1");
  }
  if (B_.rows() != A_.rows()) {
    throw InputError("B must have as many rows as A");
  }
  if (B_.cols() < 1) {
    throw InputError("B must have at least one column");
  }
  require_finite(A_, "A");
  require_finite(B_, "B");
}

AccuracySpec::AccuracySpec(double eps, double delta) : eps_(eps), delta_(delta) {
  if (!std::isfinite(eps) || eps <= 0.0) {
    throw InputError("eps must be a positive finite number");
  }
  if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0) {
    throw InputError("delta must lie in (0, 1)");
  }
}

bool AccuracySpec::vacuous() const { return rate_threshold(*this) <= 0.0; }

std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::gramian:
      return "gramian";
    case BoundMethod::spectral:
      return "spectral";
    case BoundMethod::controlled:
      return "controlled";
  }
  return "unknown";
}

BoundMethod bound_method_from_string(std::string_view s) {
  if (s == "gramian") return BoundMethod::gramian;
  if (s == "spectral") return BoundMethod::spectral;
  if (s == "controlled") return BoundMethod::controlled;
  throw InputError("unknown bound method '" + std::string(s) + "'");
}

double rate_threshold(const AccuracySpec& spec) {
  return confidence_gap_bound(spec.delta()) / (2.0 * spec.eps() * spec.eps());
}

double bernoulli_kl(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0)) {
    throw InputError("bernoulli_kl arguments must lie in [0, 1]");
  }
  if (x == y) return 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (y == 0.0 || y == 1.0) return inf;

  // 0 * log(0 / y) is taken as 0.
  double kl = 0.0;
  if (x > 0.0) kl += x * std::log(x / y);
  if (x < 1.0) kl += (1.0 - x) * std::log((1.0 - x) / (1.0 - y));
  return kl;
}

double confidence_gap_bound(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InputError("delta must lie in (0, 1)");
  }
  return -std::log(2.4 * delta);
}

double confidence_gap_exact(double delta) { return bernoulli_kl(1.0 - delta, delta); }

}  // namespace sysid
