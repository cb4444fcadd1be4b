#include "sysid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sysid/uncontrolled.hpp"

namespace sysid {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Shared stepping kernel so that seeded simulation and the harness produce
/// the same paths. B has zero columns for uncontrolled systems.
template <typename Noise>
Trajectory simulate_impl(const Matrix& A, const Matrix& B, const Policy* policy, std::int64_t T,
                         Noise&& noise) {
  if (T < 1) throw InputError("T must be >= 1");
  const Eigen::Index d = A.rows();
  const Eigen::Index p = B.cols();
  Trajectory traj;
  traj.states = Matrix::Zero(d, T);
  traj.inputs = Matrix::Zero(p, T);

  Vector x = Vector::Zero(d);
  for (std::int64_t t = 0; t < T; ++t) {
    Vector next = A * x;
    if (p > 0) {
      const Vector u = policy->input(x, traj.states.leftCols(t), traj.inputs.leftCols(t));
      if (u.size() != p) throw InputError("policy returned an input of the wrong length");
      traj.inputs.col(t) = u;
      next.noalias() += B * u;
    }
    next += noise(t, d);
    traj.states.col(t) = next;
    x = std::move(next);
    if (!(x.norm() <= kHaltNorm)) {
      traj.halted = true;
      traj.states.conservativeResize(d, t + 1);
      traj.inputs.conservativeResize(p, t + 1);
      break;
    }
  }
  return traj;
}

Vector stacked(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

Matrix regress(const Matrix& gram, const Matrix& cross, double ridge) {
  Matrix regularized = gram;
  regularized.diagonal().array() += ridge;
  // estimate * regularized = cross  <=>  regularized * estimate^T = cross^T
  return regularized.ldlt().solve(cross.transpose()).transpose();
}

// ---------------------------------------------------------------------------
// Empirical harness
// ---------------------------------------------------------------------------

struct HarnessProblem {
  Matrix A;
  Matrix B;  // zero columns when uncontrolled
  const Policy* policy = nullptr;
  Matrix truth;  // A or [A B]
  double eps = 0.0;
  double ridge = kDefaultRidge;
};

class TrialRunner {
 public:
  TrialRunner(const HarnessProblem& prob, std::uint64_t seed)
      : prob_(&prob),
        noise_(seed),
        x_(Vector::Zero(prob.A.rows())),
        gram_(Matrix::Zero(prob.truth.cols(), prob.truth.cols())),
        cross_(Matrix::Zero(prob.A.rows(), prob.truth.cols())) {
    if (track_history()) {
      states_ = Matrix::Zero(prob.A.rows(), 16);
      inputs_ = Matrix::Zero(prob.B.cols(), 16);
    }
  }

  void advance_to(std::int64_t target) {
    const Eigen::Index p = prob_->B.cols();
    while (t_ < target && !halted_) {
      Vector u(p);
      if (p > 0) {
        u = prob_->policy->input(x_, states_.leftCols(track_history() ? t_ : 0),
                                 inputs_.leftCols(track_history() ? t_ : 0));
        if (u.size() != p) throw InputError("policy returned an input of the wrong length");
      }
      Vector next = prob_->A * x_ + noise_.draw(x_.size());
      if (p > 0) next.noalias() += prob_->B * u;
      if (!(next.norm() <= kHaltNorm)) {
        halted_ = true;
        break;
      }
      const Vector z = p > 0 ? stacked(x_, u) : x_;
      gram_.noalias() += z * z.transpose();
      cross_.noalias() += next * z.transpose();
      if (track_history()) remember(next, u);
      x_ = std::move(next);
      ++t_;
    }
  }

  bool success() const {
    return (regress(gram_, cross_, prob_->ridge) - prob_->truth).norm() <= prob_->eps;
  }

 private:
  bool track_history() const {
    return prob_->policy != nullptr && prob_->policy->kind() == Policy::Kind::external;
  }

  void remember(const Vector& x_next, const Vector& u) {
    if (t_ + 1 > states_.cols()) {
      const Eigen::Index cap = 2 * states_.cols();
      states_.conservativeResize(Eigen::NoChange, cap);
      inputs_.conservativeResize(Eigen::NoChange, cap);
    }
    states_.col(t_) = x_next;
    inputs_.col(t_) = u;
  }

  const HarnessProblem* prob_;
  GaussianSource noise_;
  Vector x_;
  Matrix gram_;
  Matrix cross_;
  std::int64_t t_ = 0;
  bool halted_ = false;
  Matrix states_;
  Matrix inputs_;
};

EmpiricalComplexity run_harness(const HarnessProblem& prob, const AccuracySpec& spec,
                                std::int64_t trials, std::uint64_t seed, std::int64_t Tmax) {
  if (trials < 1) throw InputError("trials must be >= 1");
  const std::vector<std::int64_t> coarse = checkpoint_schedule(Tmax);
  const double needed = (1.0 - spec.delta()) * static_cast<double>(trials) - 1e-9;
  const auto frac = [&](std::int64_t successes) {
    return static_cast<double>(successes) / static_cast<double>(trials);
  };
  const auto trial_seed = [&](std::int64_t i) {
    return derive_seed(seed, static_cast<std::uint64_t>(i));
  };

  std::vector<TrialRunner> runners;
  runners.reserve(static_cast<std::size_t>(trials));
  for (std::int64_t i = 0; i < trials; ++i) runners.emplace_back(prob, trial_seed(i));

  // Coarse pass in lockstep until four consecutive checkpoints meet 1 - delta.
  std::vector<std::int64_t> counts;
  std::optional<std::size_t> crossing;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    std::int64_t successes = 0;
    for (auto& r : runners) {
      r.advance_to(coarse[k]);
      successes += r.success() ? 1 : 0;
    }
    counts.push_back(successes);
    if (k >= 3 && std::all_of(counts.end() - 4, counts.end(),
                              [&](std::int64_t c) { return static_cast<double>(c) >= needed; })) {
      crossing = k - 3;
      break;
    }
  }
  if (!crossing) {
    throw HorizonExhaustedError("horizon exhausted: no stable crossing of 1 - delta before Tmax = " +
                                    std::to_string(Tmax),
                                frac(counts.back()));
  }
  runners.clear();

  // Dense refinement between the previous coarse checkpoint and the crossing.
  const std::size_t k0 = *crossing;
  const std::int64_t lo = k0 > 0 ? coarse[k0 - 1] : 1;
  std::vector<std::int64_t> dense;
  for (std::int64_t t = lo + 1; t < coarse[k0]; ++t) dense.push_back(t);
  std::vector<std::int64_t> dense_counts(dense.size(), 0);
  if (!dense.empty()) {
    for (std::int64_t i = 0; i < trials; ++i) {
      TrialRunner r(prob, trial_seed(i));
      for (std::size_t j = 0; j < dense.size(); ++j) {
        r.advance_to(dense[j]);
        dense_counts[j] += r.success() ? 1 : 0;
      }
    }
  }

  // Merge: coarse checkpoints up to lo, dense points, then the coarse tail.
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (coarse[k] <= lo) merged.emplace_back(coarse[k], counts[k]);
  }
  for (std::size_t j = 0; j < dense.size(); ++j) merged.emplace_back(dense[j], dense_counts[j]);
  for (std::size_t k = k0; k < counts.size(); ++k) merged.emplace_back(coarse[k], counts[k]);

  EmpiricalComplexity out;
  out.trials = trials;
  out.seed = seed;
  for (const auto& [t, c] : merged) out.success_curve.push_back({t, frac(c)});
  for (std::size_t i = 0; i + 3 < merged.size(); ++i) {
    bool stable = true;
    for (std::size_t j = i; j <= i + 3; ++j) {
      stable = stable && static_cast<double>(merged[j].second) >= needed;
    }
    if (stable) {
      out.tau_hat = merged[i].first;
      break;
    }
  }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Vector GaussianSource::draw(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal_(engine_);
  return v;
}

Vector Trajectory::state(std::int64_t t) const {
  if (t < 0 || t > T()) throw InputError("state index out of range");
  if (t == 0) return Vector::Zero(states.rows());
  return states.col(t - 1);
}

Trajectory simulate_uncontrolled(const UncontrolledSystem& sys, std::int64_t T,
                                 std::uint64_t seed) {
  GaussianSource source(seed);
  Trajectory traj = simulate_impl(sys.A(), Matrix(sys.dim(), 0), nullptr, T,
                                  [&](std::int64_t, Eigen::Index d) { return source.draw(d); });
  traj.seed = seed;
  return traj;
}

Trajectory simulate_uncontrolled(const UncontrolledSystem& sys, std::int64_t T,
                                 const NoiseHook& noise) {
  return simulate_impl(sys.A(), Matrix(sys.dim(), 0), nullptr, T, noise);
}

Trajectory simulate_controlled(const ControlledSystem& sys, const Policy& policy,
                               std::int64_t T, std::uint64_t seed) {
  policy.validate(sys.state_dim(), sys.input_dim());
  GaussianSource source(seed);
  Trajectory traj = simulate_impl(sys.A(), sys.B(), &policy, T,
                                  [&](std::int64_t, Eigen::Index d) { return source.draw(d); });
  traj.seed = seed;
  return traj;
}

Trajectory simulate_controlled(const ControlledSystem& sys, const Policy& policy,
                               std::int64_t T, const NoiseHook& noise) {
  policy.validate(sys.state_dim(), sys.input_dim());
  return simulate_impl(sys.A(), sys.B(), &policy, T, noise);
}

Matrix ols_uncontrolled(const Trajectory& traj, std::int64_t t, double ridge) {
  if (t < 2 || t > traj.T()) throw InputError("OLS horizon t must satisfy 2 <= t <= T");
  const Eigen::Index d = traj.states.rows();
  Matrix gram = Matrix::Zero(d, d);
  Matrix cross = Matrix::Zero(d, d);
  // s = 0 has x_0 = 0 and contributes nothing.
  for (std::int64_t s = 1; s < t; ++s) {
    const auto x = traj.states.col(s - 1);
    gram.noalias() += x * x.transpose();
    cross.noalias() += traj.states.col(s) * x.transpose();
  }
  return regress(gram, cross, ridge);
}

std::pair<Matrix, Matrix> ols_controlled(const Trajectory& traj, std::int64_t t, double ridge) {
  if (!traj.controlled()) throw InputError("trajectory carries no inputs");
  if (t < 2 || t > traj.T()) throw InputError("OLS horizon t must satisfy 2 <= t <= T");
  const Eigen::Index d = traj.states.rows();
  const Eigen::Index p = traj.inputs.rows();
  Matrix gram = Matrix::Zero(d + p, d + p);
  Matrix cross = Matrix::Zero(d, d + p);
  for (std::int64_t s = 0; s < t; ++s) {
    const Vector z = stacked(traj.state(s), traj.inputs.col(s));
    gram.noalias() += z * z.transpose();
    cross.noalias() += traj.states.col(s) * z.transpose();
  }
  const Matrix est = regress(gram, cross, ridge);
  return {est.leftCols(d), est.rightCols(p)};
}

double log_likelihood_ratio(const Trajectory& traj, const Matrix& A, const Matrix& Aprime,
                            std::int64_t t) {
  if (t < 1 || t > traj.T()) throw InputError("likelihood horizon t must satisfy 1 <= t <= T");
  double llr = 0.0;
  Vector prev = Vector::Zero(traj.states.rows());
  for (std::int64_t s = 1; s <= t; ++s) {
    const auto x = traj.states.col(s - 1);
    llr += 0.5 * ((x - Aprime * prev).squaredNorm() - (x - A * prev).squaredNorm());
    prev = x;
  }
  return llr;
}

std::vector<std::int64_t> checkpoint_schedule(std::int64_t Tmax) {
  if (Tmax < 2) throw InputError("Tmax must be >= 2");
  std::vector<std::int64_t> out{2};
  while (out.back() < Tmax) {
    const std::int64_t c = out.back();
    const auto grown = static_cast<std::int64_t>(std::ceil(1.2 * static_cast<double>(c)));
    out.push_back(std::min(Tmax, std::max(c + 1, grown)));
  }
  return out;
}

EmpiricalComplexity empirical_sample_complexity(const UncontrolledSystem& sys,
                                                const AccuracySpec& spec, std::int64_t trials,
                                                std::uint64_t seed, std::int64_t Tmax) {
  HarnessProblem prob;
  prob.A = sys.A();
  prob.B = Matrix(sys.dim(), 0);
  prob.truth = sys.A();
  prob.eps = spec.eps();
  return run_harness(prob, spec, trials, seed, Tmax);
}

EmpiricalComplexity empirical_sample_complexity(const ControlledSystem& sys,
                                                const AccuracySpec& spec, std::int64_t trials,
                                                std::uint64_t seed, std::int64_t Tmax,
                                                const Policy& policy) {
  policy.validate(sys.state_dim(), sys.input_dim());
  HarnessProblem prob;
  prob.A = sys.A();
  prob.B = sys.B();
  prob.policy = &policy;
  prob.truth.resize(sys.state_dim(), sys.state_dim() + sys.input_dim());
  prob.truth << sys.A(), sys.B();
  prob.eps = spec.eps();
  return run_harness(prob, spec, trials, seed, Tmax);
}

TightnessReport tightness_report(const UncontrolledSystem& sys, const AccuracySpec& spec,
                                 std::int64_t trials, std::uint64_t seed, std::int64_t Tmax) {
  TightnessReport r;
  r.eps = spec.eps();
  r.delta = spec.delta();
  r.trials = trials;
  r.seed = seed;
  r.Tmax = Tmax;
  r.prng = std::string(kPrngId);
  const EmpiricalComplexity emp = empirical_sample_complexity(sys, spec, trials, seed, Tmax);
  r.tau_gramian = tau_gramian(sys.A(), spec).tau;
  r.tau_spectral = tau_spectral(sys.A(), spec).tau;
  r.tau_hat = emp.tau_hat;
  r.ratio = static_cast<double>(r.tau_hat) / static_cast<double>(r.tau_gramian);
  r.success_curve = emp.success_curve;
  return r;
}

Matrix random_orthogonal(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw InputError("dimension must be >= 1");
  GaussianSource source(seed);
  Matrix G(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) G(i, j) = source.draw();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

}  // namespace sysid
