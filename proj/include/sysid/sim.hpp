#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "sysid/core.hpp"
#include "sysid/policy.hpp"

namespace sysid {

/// Recorded in every report so runs can be reproduced.
inline constexpr std::string_view kPrngId =
    "mt19937_64/splitmix64-substreams/std::normal_distribution<double>";

/// Seed for substream `index` of `seed` (splitmix64 finalizer over both).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Standard Gaussian draws from a seeded mt19937_64.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double draw() { return normal_(engine_); }
  Vector draw(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Replaces Gaussian noise in tests: returns w_s for step s (x_{s+1} = ... + w_s).
using NoiseHook = std::function<Vector(std::int64_t s, Eigen::Index d)>;

/// States beyond this norm halt a simulation.
inline constexpr double kHaltNorm = 1e150;

/// A realization of x_1..x_T (and u_0..u_{T-1}); x_0 = 0 implicitly.
struct Trajectory {
  Matrix states;  // d x T, column t-1 holds x_t
  Matrix inputs;  // p x T, column t holds u_t; zero rows when uncontrolled
  std::uint64_t seed = 0;
  /// Set when a state exceeded kHaltNorm; the trajectory ends at that state.
  bool halted = false;

  std::int64_t T() const { return states.cols(); }
  bool controlled() const { return inputs.rows() > 0; }
  /// x_t for 0 <= t <= T.
  Vector state(std::int64_t t) const;
};

Trajectory simulate_uncontrolled(const UncontrolledSystem& sys, std::int64_t T,
                                 std::uint64_t seed);
Trajectory simulate_uncontrolled(const UncontrolledSystem& sys, std::int64_t T,
                                 const NoiseHook& noise);

Trajectory simulate_controlled(const ControlledSystem& sys, const Policy& policy,
                               std::int64_t T, std::uint64_t seed);
Trajectory simulate_controlled(const ControlledSystem& sys, const Policy& policy,
                               std::int64_t T, const NoiseHook& noise);

inline constexpr double kDefaultRidge = 1e-10;

/// A_hat_t = (sum_{s<t} x_{s+1} x_s^T)(sum_{s<t} x_s x_s^T + ridge I)^{-1}. Requires 2 <= t <= T.
Matrix ols_uncontrolled(const Trajectory& traj, std::int64_t t, double ridge = kDefaultRidge);

/// [A_hat B_hat] from regressing x_{s+1} on z_s = [x_s; u_s], same ridge guard.
std::pair<Matrix, Matrix> ols_controlled(const Trajectory& traj, std::int64_t t,
                                         double ridge = kDefaultRidge);

/// log f_A(x_1..x_t) - log f_A'(x_1..x_t) for unit-covariance Gaussian noise.
double log_likelihood_ratio(const Trajectory& traj, const Matrix& A, const Matrix& Aprime,
                            std::int64_t t);

struct SuccessPoint {
  std::int64_t t = 0;
  double fraction = 0.0;
};

/// Empirical sample complexity of OLS.
///
/// tau_hat is the first evaluated horizon at which the fraction of trials with
/// ||estimate - truth||_F <= eps reaches 1 - delta and stays there for the next
/// three evaluated horizons. Horizons come from a geometric schedule (ratio
/// 1.2, starting at 2), refined to every integer between the last coarse
/// checkpoint below the crossing and the crossing itself.
struct EmpiricalComplexity {
  std::int64_t tau_hat = 0;
  std::vector<SuccessPoint> success_curve;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Coarse checkpoints 2, then max(c + 1, ceil(1.2 c)), up to and including Tmax.
std::vector<std::int64_t> checkpoint_schedule(std::int64_t Tmax);

EmpiricalComplexity empirical_sample_complexity(const UncontrolledSystem& sys,
                                                const AccuracySpec& spec, std::int64_t trials,
                                                std::uint64_t seed, std::int64_t Tmax);

EmpiricalComplexity empirical_sample_complexity(const ControlledSystem& sys,
                                                const AccuracySpec& spec, std::int64_t trials,
                                                std::uint64_t seed, std::int64_t Tmax,
                                                const Policy& policy);

struct TightnessReport {
  double eps = 0.0;
  double delta = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::int64_t Tmax = 0;
  std::string prng;
  std::int64_t tau_gramian = 0;
  std::int64_t tau_spectral = 0;
  std::int64_t tau_hat = 0;
  double ratio = 0.0;  // tau_hat / tau_gramian
  std::vector<SuccessPoint> success_curve;
};

TightnessReport tightness_report(const UncontrolledSystem& sys, const AccuracySpec& spec,
                                 std::int64_t trials, std::uint64_t seed, std::int64_t Tmax);

/// Haar-distributed orthogonal d x d matrix from QR of a seeded Gaussian matrix.
Matrix random_orthogonal(Eigen::Index d, std::uint64_t seed);

}  // namespace sysid
