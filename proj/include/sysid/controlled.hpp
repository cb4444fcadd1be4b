#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sysid/core.hpp"
#include "sysid/policy.hpp"

namespace sysid {

/// Sigma = sum_{t=0}^{T-1} E[[x_t; u_t][x_t^T u_t^T]] with x_0 = 0.
struct JointMoment {
  std::int64_t T = 0;
  Matrix Sigma;
  /// Entrywise standard errors; present only for Monte Carlo estimates.
  std::optional<Matrix> std_error;
};

/// Exact first/second moment recursion for constant and affine-feedback policies.
///
///   mu_{t+1} = A mu_t + B E[u_t],  V_{t+1} = Abar V_t Abar^T + I
///
/// with Abar = A for constant inputs and A + B K under feedback.
class JointMomentAccumulator {
 public:
  JointMomentAccumulator(const ControlledSystem& sys, const Policy& policy);

  /// Number of terms summed so far.
  std::int64_t T() const { return T_; }
  const Matrix& sigma() const { return sigma_; }

  /// Add E[z_T z_T^T] and advance the state moments.
  void step();

 private:
  Matrix A_;
  Matrix B_;
  Matrix closed_loop_;
  Policy policy_;
  Vector mu_;
  Matrix V_;
  Matrix sigma_;
  std::int64_t T_ = 0;
};

JointMoment joint_moment_exact(const ControlledSystem& sys, const Policy& policy, std::int64_t T);

/// Sample mean of sum_t z_t z_t^T over `trials` seeded trajectories. Trial i
/// uses derive_seed(seed, i); aggregation runs in trial order.
JointMoment joint_moment_mc(const ControlledSystem& sys, const Policy& policy, std::int64_t T,
                            std::int64_t trials, std::uint64_t seed);

/// Smallest tau with lambda_min(Sigma_tau) >= rate_threshold(spec), using exact moments.
///
/// Throws UnreachableBoundError when Sigma has a null space no horizon can fill:
/// a constant input with u = 0 or p >= 2, or feedback with c = 0 or p >= 2.
BoundReport tau_controlled(const ControlledSystem& sys, const AccuracySpec& spec,
                           const Policy& policy, std::int64_t step_cap = kDefaultStepCap);

/// Monte Carlo variant of tau_controlled for any policy, external ones included.
/// Sigma_T is estimated from `trials` trajectories simulated up to `horizon`.
BoundReport tau_controlled_mc(const ControlledSystem& sys, const AccuracySpec& spec,
                              const Policy& policy, std::int64_t trials, std::uint64_t seed,
                              std::int64_t horizon);

// ---------------------------------------------------------------------------
// Scalar system x_{t+1} = a x_t + b u_t + w_t under constant input.
// ---------------------------------------------------------------------------

/// Which input-input entry the 2x2 information matrix carries: the scalar
/// derivation's (tau - 1) u^2, or tau u^2 from summing t = 0..tau-1 with x_0 = 0.
enum class ScalarVariant { paper, theorem2 };

std::string_view to_string(ScalarVariant v);
ScalarVariant scalar_variant_from_string(std::string_view s);

struct ScalarSums {
  double varphi = 0.0;  // sum_{t=1}^{tau-1} sum_{k<t} a^{2k}
  double phi_ab = 0.0;  // sum_{t=1}^{tau-1} (sum_{k<t} a^k b)^2
  double psi = 0.0;     // sum_{t=1}^{tau-1} sum_{k<t} a^k b
};

ScalarSums scalar_sums(double a, double b, std::int64_t tau);

/// The 2x2 matrix whose lambda_min is f_{a,b,tau}(u).
Eigen::Matrix2d scalar_information(const ScalarSums& sums, std::int64_t tau, double u,
                                   ScalarVariant variant);

/// lambda_min of the scalar information matrix. ScalarVariant::paper uses the
/// closed form; ScalarVariant::theorem2 solves the 2x2 eigenproblem.
double f_scalar(double a, double b, std::int64_t tau, double u, ScalarVariant variant);

BoundReport tau_scalar_constant(double a, double b, const AccuracySpec& spec, double u,
                                ScalarVariant variant, std::int64_t step_cap = kDefaultStepCap);

struct InputDesign {
  double ustar = 0.0;
  std::int64_t taustar = 0;
  /// tau(u) was nonincreasing across the pre-scan grid.
  bool monotone = true;
  /// tau(u) was identical at every pre-scan point.
  bool flat = false;
  /// (u, tau) at every pre-scan point; tau < 0 marks a cap/unreachable evaluation.
  std::vector<std::pair<double, std::int64_t>> scan;
};

/// Minimize tau_scalar_constant over u in (0, umax]: 50-point pre-scan, then
/// golden-section search on u^2, with exhaustive grid refinement when the
/// pre-scan is not monotone. Ties go to the larger u.
InputDesign design_constant_input(double a, double b, const AccuracySpec& spec, double umax,
                                  ScalarVariant variant = ScalarVariant::theorem2,
                                  std::int64_t step_cap = 1'000'000);

}  // namespace sysid
