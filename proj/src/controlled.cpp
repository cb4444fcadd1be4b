#include "sysid/controlled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sysid/sim.hpp"
#include "sysid/spectral.hpp"

namespace sysid {

namespace {

BoundReport trivial_report(double threshold) {
  BoundReport r;
  r.tau = 1;
  r.method = BoundMethod::controlled;
  r.threshold = threshold;
  r.trivial = true;
  r.curve.push_back({1, 0.0});
  return r;
}

/// Orthonormal basis (as columns) of the complement of span{c} in R^p.
Matrix complement_basis(const Vector& c) {
  const Eigen::Index p = c.size();
  if (c.norm() == 0.0) return Matrix::Identity(p, p);
  Eigen::HouseholderQR<Matrix> qr{Matrix(c)};
  const Matrix Q = qr.householderQ() * Matrix::Identity(p, p);
  return Q.rightCols(p - 1);
}

/// Null space of Sigma_T that persists for every horizon, or an empty matrix.
///
/// v = [a; b] is invisible iff E[(a^T x_t + b^T u_t)^2] = 0 for all t. Because
/// Cov(x_t) >= I for t >= 1, that forces the state weight to vanish:
///   constant u:      a = 0, b^T u = 0
///   u = K x + c:     a = -K^T b, b^T c = 0
Matrix persistent_null_space(const ControlledSystem& sys, const Policy& policy) {
  const Eigen::Index d = sys.state_dim();
  const Eigen::Index p = sys.input_dim();
  Matrix basis;
  if (policy.kind() == Policy::Kind::constant) {
    const Matrix inputs = complement_basis(policy.as_constant().u);
    basis = Matrix::Zero(d + p, inputs.cols());
    basis.bottomRows(p) = inputs;
  } else {
    const auto& fb = policy.as_feedback();
    const Matrix inputs = complement_basis(fb.c);
    basis.resize(d + p, inputs.cols());
    basis.topRows(d) = -fb.K.transpose() * inputs;
    basis.bottomRows(p) = inputs;
  }
  if (basis.cols() == 0) return basis;
  Eigen::HouseholderQR<Matrix> qr(basis);
  return (qr.householderQ() * Matrix::Identity(d + p, basis.cols())).eval();
}

Vector stack(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

double lambda_min_2x2(const Eigen::Matrix2d& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(M, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact moments
// ---------------------------------------------------------------------------

JointMomentAccumulator::JointMomentAccumulator(const ControlledSystem& sys, const Policy& policy)
    : A_(sys.A()), B_(sys.B()), policy_(policy) {
  if (!policy.exact_moments()) {
    throw InputError("exact moments need a constant or feedback policy");
  }
  const Eigen::Index d = sys.state_dim();
  const Eigen::Index p = sys.input_dim();
  policy.validate(d, p);
  closed_loop_ = policy.kind() == Policy::Kind::feedback
                     ? Matrix(A_ + B_ * policy.as_feedback().K)
                     : A_;
  mu_ = Vector::Zero(d);
  V_ = Matrix::Zero(d, d);
  sigma_ = Matrix::Zero(d + p, d + p);
}

void JointMomentAccumulator::step() {
  const Eigen::Index d = A_.rows();
  const Eigen::Index p = B_.cols();
  const Matrix Exx = V_ + mu_ * mu_.transpose();
  Matrix Exu;
  Matrix Euu;
  Vector mean_u;
  if (policy_.kind() == Policy::Kind::constant) {
    const Vector& u = policy_.as_constant().u;
    mean_u = u;
    Exu = mu_ * u.transpose();
    Euu = u * u.transpose();
  } else {
    const auto& fb = policy_.as_feedback();
    mean_u = fb.K * mu_ + fb.c;
    Exu = Exx * fb.K.transpose() + mu_ * fb.c.transpose();
    const Matrix Kmu_c = fb.K * mu_ * fb.c.transpose();
    Euu = fb.K * Exx * fb.K.transpose() + Kmu_c + Kmu_c.transpose() + fb.c * fb.c.transpose();
  }
  sigma_.topLeftCorner(d, d) += Exx;
  sigma_.topRightCorner(d, p) += Exu;
  sigma_.bottomLeftCorner(p, d) += Exu.transpose();
  sigma_.bottomRightCorner(p, p) += Euu;

  mu_ = A_ * mu_ + B_ * mean_u;
  V_ = closed_loop_ * V_ * closed_loop_.transpose();
  V_.diagonal().array() += 1.0;
  ++T_;
}

JointMoment joint_moment_exact(const ControlledSystem& sys, const Policy& policy, std::int64_t T) {
  if (T < 1) throw InputError("T must be >= 1");
  JointMomentAccumulator acc(sys, policy);
  while (acc.T() < T) acc.step();
  return JointMoment{T, acc.sigma(), std::nullopt};
}

JointMoment joint_moment_mc(const ControlledSystem& sys, const Policy& policy, std::int64_t T,
                            std::int64_t trials, std::uint64_t seed) {
  if (T < 1) throw InputError("T must be >= 1");
  if (trials < 2) throw InputError("Monte Carlo moments need at least 2 trials");
  const Eigen::Index m = sys.state_dim() + sys.input_dim();

  // Welford accumulation, trial order fixed.
  Matrix mean = Matrix::Zero(m, m);
  Matrix m2 = Matrix::Zero(m, m);
  for (std::int64_t i = 0; i < trials; ++i) {
    const Trajectory traj =
        simulate_controlled(sys, policy, T, derive_seed(seed, static_cast<std::uint64_t>(i)));
    Matrix total = Matrix::Zero(m, m);
    for (std::int64_t t = 0; t < std::min<std::int64_t>(T, traj.T()); ++t) {
      const Vector z = stack(traj.state(t), traj.inputs.col(t));
      total.noalias() += z * z.transpose();
    }
    const double n = static_cast<double>(i + 1);
    const Matrix delta = total - mean;
    mean += delta / n;
    m2 += delta.cwiseProduct(total - mean);
  }
  const double n = static_cast<double>(trials);
  Matrix se = (m2 / (n - 1.0) / n).cwiseSqrt();
  return JointMoment{T, mean, std::move(se)};
}

BoundReport tau_controlled(const ControlledSystem& sys, const AccuracySpec& spec,
                           const Policy& policy, std::int64_t step_cap) {
  JointMomentAccumulator acc(sys, policy);
  const double threshold = rate_threshold(spec);
  if (threshold <= 0.0) return trivial_report(threshold);

  const Matrix stalled = persistent_null_space(sys, policy);
  if (stalled.cols() > 0) {
    throw UnreachableBoundError("bound unreachable under this policy: the information matrix "
                                "has a " + std::to_string(stalled.cols()) +
                                "-dimensional null space the inputs never excite",
                                stalled);
  }

  BoundReport r;
  r.method = BoundMethod::controlled;
  r.threshold = threshold;
  double info = -std::numeric_limits<double>::infinity();
  while (info < threshold) {
    if (acc.T() >= step_cap) throw IterationCapError("bound inversion exceeded step cap", step_cap, info);
    acc.step();
    if (!acc.sigma().allFinite()) {
      throw NumericalError("joint moment overflowed", std::numeric_limits<double>::infinity());
    }
    info = lambda_min_sym(acc.sigma());
    r.curve.push_back({acc.T(), info});
  }
  r.tau = acc.T();
  return r;
}

BoundReport tau_controlled_mc(const ControlledSystem& sys, const AccuracySpec& spec,
                              const Policy& policy, std::int64_t trials, std::uint64_t seed,
                              std::int64_t horizon) {
  if (trials < 2) throw InputError("Monte Carlo moments need at least 2 trials");
  if (horizon < 1) throw InputError("horizon must be >= 1");
  policy.validate(sys.state_dim(), sys.input_dim());
  const double threshold = rate_threshold(spec);
  if (threshold <= 0.0) return trivial_report(threshold);

  const Eigen::Index m = sys.state_dim() + sys.input_dim();
  std::vector<Matrix> terms(static_cast<std::size_t>(horizon), Matrix::Zero(m, m));
  for (std::int64_t i = 0; i < trials; ++i) {
    const Trajectory traj =
        simulate_controlled(sys, policy, horizon, derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (std::int64_t t = 0; t < traj.T(); ++t) {
      const Vector z = stack(traj.state(t), traj.inputs.col(t));
      terms[static_cast<std::size_t>(t)].noalias() += z * z.transpose();
    }
  }

  BoundReport r;
  r.method = BoundMethod::controlled;
  r.threshold = threshold;
  Matrix sigma = Matrix::Zero(m, m);
  for (std::int64_t T = 1; T <= horizon; ++T) {
    sigma += terms[static_cast<std::size_t>(T - 1)] / static_cast<double>(trials);
    const double info = lambda_min_sym(sigma);
    r.curve.push_back({T, info});
    if (info >= threshold) {
      r.tau = T;
      return r;
    }
  }
  throw IterationCapError("Monte Carlo bound did not cross the threshold within the horizon",
                          horizon, r.curve.back().value);
}

// ---------------------------------------------------------------------------
// Scalar closed forms
// ---------------------------------------------------------------------------

std::string_view to_string(ScalarVariant v) {
  return v == ScalarVariant::paper ? "paper" : "theorem2";
}

ScalarVariant scalar_variant_from_string(std::string_view s) {
  if (s == "paper") return ScalarVariant::paper;
  if (s == "theorem2") return ScalarVariant::theorem2;
  throw InputError("variant must be 'paper' or 'theorem2'");
}

ScalarSums scalar_sums(double a, double b, std::int64_t tau) {
  if (tau < 1) throw InputError("tau must be >= 1");
  ScalarSums s;
  double g = 1.0;  // sum_{k<t} a^{2k}
  double h = b;    // sum_{k<t} a^k b
  for (std::int64_t t = 1; t < tau; ++t) {
    s.varphi += g;
    s.phi_ab += h * h;
    s.psi += h;
    g = a * a * g + 1.0;
    h = a * h + b;
  }
  return s;
}

Eigen::Matrix2d scalar_information(const ScalarSums& sums, std::int64_t tau, double u,
                                   ScalarVariant variant) {
  const double u2 = u * u;
  const double n = variant == ScalarVariant::paper ? static_cast<double>(tau - 1)
                                                   : static_cast<double>(tau);
  Eigen::Matrix2d M;
  M << sums.varphi + sums.phi_ab * u2, sums.psi * u2, sums.psi * u2, n * u2;
  return M;
}

namespace {

double f_from_sums(const ScalarSums& s, std::int64_t tau, double u, ScalarVariant variant) {
  if (variant == ScalarVariant::paper) {
    const double u2 = u * u;
    const double n = static_cast<double>(tau);
    const double spread = s.varphi + (s.phi_ab - n + 1.0) * u2;
    return 0.5 * (s.varphi + (s.phi_ab + n - 1.0) * u2 -
                  std::sqrt(spread * spread + 4.0 * s.psi * s.psi * u2 * u2));
  }
  return lambda_min_2x2(scalar_information(s, tau, u, variant));
}

}  // namespace

double f_scalar(double a, double b, std::int64_t tau, double u, ScalarVariant variant) {
  return f_from_sums(scalar_sums(a, b, tau), tau, u, variant);
}

BoundReport tau_scalar_constant(double a, double b, const AccuracySpec& spec, double u,
                                ScalarVariant variant, std::int64_t step_cap) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(u)) {
    throw InputError("a, b and u must be finite");
  }
  const double threshold = rate_threshold(spec);
  if (threshold <= 0.0) return trivial_report(threshold);
  if (u == 0.0) {
    throw UnreachableBoundError("bound unreachable under this policy: zero input leaves b "
                                "unidentifiable",
                                Eigen::Vector2d(0.0, 1.0));
  }

  BoundReport r;
  r.method = BoundMethod::controlled;
  r.threshold = threshold;
  ScalarSums s;
  double g = 1.0;
  double h = b;
  std::int64_t tau = 1;
  double value = f_from_sums(s, tau, u, variant);
  r.curve.push_back({tau, value});
  while (value < threshold) {
    if (tau >= step_cap) throw IterationCapError("bound inversion exceeded step cap", step_cap, value);
    s.varphi += g;
    s.phi_ab += h * h;
    s.psi += h;
    g = a * a * g + 1.0;
    h = a * h + b;
    ++tau;
    value = f_from_sums(s, tau, u, variant);
    r.curve.push_back({tau, value});
  }
  r.tau = tau;
  return r;
}

InputDesign design_constant_input(double a, double b, const AccuracySpec& spec, double umax,
                                  ScalarVariant variant, std::int64_t step_cap) {
  if (!(umax > 0.0) || !std::isfinite(umax)) throw InputError("umax must be positive and finite");

  auto tau_at = [&](double u) -> std::optional<std::int64_t> {
    try {
      return tau_scalar_constant(a, b, spec, u, variant, step_cap).tau;
    } catch (const IterationCapError&) {
      return std::nullopt;
    } catch (const UnreachableBoundError&) {
      return std::nullopt;
    }
  };

  InputDesign out;
  std::vector<std::pair<double, std::optional<std::int64_t>>> evaluated;
  auto record = [&](double u) {
    const auto tau = tau_at(u);
    evaluated.emplace_back(u, tau);
    return tau;
  };

  constexpr int kScan = 50;
  std::vector<std::optional<std::int64_t>> scan;
  for (int i = 1; i <= kScan; ++i) {
    const double u = umax * i / kScan;
    scan.push_back(record(u));
    out.scan.emplace_back(u, scan.back().value_or(-1));
  }

  // Missing values count as +infinity.
  constexpr auto inf = std::numeric_limits<std::int64_t>::max();
  auto val = [&](const std::optional<std::int64_t>& t) { return t.value_or(inf); };
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if (val(scan[i]) > val(scan[i - 1])) out.monotone = false;
  }
  out.flat = std::all_of(scan.begin(), scan.end(),
                         [&](const auto& t) { return t && *t == *scan.front(); });

  if (out.monotone) {
    // Golden-section on s = u^2; tau depends on u only through u^2.
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::pow(umax / kScan, 2);
    double hi = umax * umax;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    auto f1 = val(record(std::sqrt(x1)));
    auto f2 = val(record(std::sqrt(x2)));
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = val(record(std::sqrt(x1)));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = val(record(std::sqrt(x2)));
      }
    }
  } else {
    // Exhaustive refinement: a fine global grid plus a finer grid around the best scan point.
    constexpr int kFine = 500;
    for (int i = 1; i <= kFine; ++i) record(umax * i / kFine);
    std::size_t best = 0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
      if (val(scan[i]) <= val(scan[best])) best = i;
    }
    const double left = umax * static_cast<double>(best) / kScan;
    const double right = std::min(umax, umax * static_cast<double>(best + 2) / kScan);
    for (int i = 1; i <= 200; ++i) record(left + (right - left) * i / 200.0);
  }

  bool found = false;
  for (const auto& [u, tau] : evaluated) {
    if (!tau) continue;
    if (!found || *tau < out.taustar || (*tau == out.taustar && u > out.ustar)) {
      out.ustar = u;
      out.taustar = *tau;
      found = true;
    }
  }
  if (!found) {
    throw IterationCapError("no input in (0, umax] reaches the threshold within the step cap",
                            step_cap, 0.0);
  }
  return out;
}

}  // namespace sysid
