#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sysid/uncontrolled.hpp"

using namespace sysid;

namespace {

const AccuracySpec kSpec(0.1, 0.05);

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

}  // namespace

TEST(Gramian, Examples) {
  oracle::Rng rng(1);
  const Matrix A = rng.gaussian(3, 3);
  EXPECT_EQ(gramian(A, 0), Matrix::Identity(3, 3));
  EXPECT_NEAR(gramian(Matrix::Constant(1, 1, 0.5), 2)(0, 0), 1.3125, 1e-15);
  const Matrix O = rng.orthogonal(4);
  for (std::int64_t s : {0, 1, 5, 20}) {
    double want = 0.0;
    for (std::int64_t k = 0; k <= s; ++k) want += std::pow(0.7, 2.0 * k);
    EXPECT_LE((gramian(0.7 * O, s) - want * Matrix::Identity(4, 4)).norm(), 1e-12 * want);
  }
}

TEST(Gramian, MatchesExplicitPowers) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = rng.with_radius(4, 0.95);
    for (std::int64_t s : {0, 1, 3, 17}) {
      const Matrix want = oracle::gramian_powers(A, s);
      EXPECT_LE((gramian(A, s) - want).norm(), 1e-10 * want.norm());
    }
  }
  EXPECT_THROW(gramian(Matrix::Identity(2, 2), -1), InputError);
  EXPECT_THROW(gramian(Matrix::Zero(2, 3), 1), InputError);
}

TEST(GramianAccumulatorTest, UpdateLawAndSymmetry) {
  oracle::Rng rng(4);
  const Matrix A = rng.with_radius(3, 1.02);
  GramianAccumulator acc(A);
  EXPECT_EQ(acc.t(), 1);
  EXPECT_EQ(acc.information(), Matrix::Zero(3, 3));
  for (std::int64_t t = 1; t < 40; ++t) {
    const Matrix S = acc.information();
    const Matrix G = acc.gamma();
    EXPECT_LE((S - S.transpose()).norm(), 1e-12 * (1 + S.norm()));
    EXPECT_GE(oracle::lambda_min(S), -1e-9 * S.norm());
    EXPECT_GE(oracle::lambda_min(G), -1e-9 * G.norm());
    EXPECT_LE((S - oracle::information_direct(A, t)).norm(), 1e-10 * (1 + S.norm()));
    acc.step();
    EXPECT_LE((acc.information() - (S + G)).norm(), 1e-12 * (1 + acc.information().norm()));
    EXPECT_LE((acc.gamma() - (A * G * A.transpose() + Matrix::Identity(3, 3))).norm(),
              1e-12 * acc.gamma().norm());
  }
}

TEST(CumulativeInfo, Examples) {
  oracle::Rng rng(5);
  EXPECT_EQ(cumulative_info(rng.gaussian(3, 3), 1), 0.0);
  EXPECT_NEAR(cumulative_info(Matrix::Zero(1, 1), 5), 4.0, 1e-14);
  const Matrix O = rng.orthogonal(3);
  for (std::int64_t t : {1, 2, 5, 30}) {
    const double want = oracle::phi_direct(0.9, t);
    EXPECT_NEAR(cumulative_info(0.9 * O, t), want, 1e-9 * (1 + want));
  }
  EXPECT_THROW(cumulative_info(Matrix::Identity(2, 2), 0), InputError);
}

TEST(CumulativeInfo, NondecreasingInT) {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(1, 5);
    const Matrix A = rng.with_radius(d, rng.uniform(0.1, 1.0));
    GramianAccumulator acc(A);
    double prev = acc.lambda_min();
    for (int t = 2; t <= 200; ++t) {
      acc.step();
      const double now = acc.lambda_min();
      EXPECT_GE(now, prev - 1e-9 * std::abs(prev)) << "t=" << t;
      prev = now;
    }
  }
}

TEST(CumulativeInfo, AtLeastLinearGrowth) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(1, 5);
    const Matrix A = rng.with_radius(d, rng.uniform(0.0, 1.05));
    for (std::int64_t t : {1, 2, 3, 10, 50}) {
      EXPECT_GE(cumulative_info(A, t), (t - 1) * (1.0 - 1e-9));
    }
  }
}

TEST(Phi, Examples) {
  EXPECT_DOUBLE_EQ(phi(0.0, 7), 6.0);
  EXPECT_DOUBLE_EQ(phi(1.0, 4), 6.0);
  EXPECT_NEAR(phi(0.5, 3), 2.25, 1e-15);
  EXPECT_EQ(phi(0.7, 1), 0.0);
  EXPECT_THROW(phi(-0.1, 3), InputError);
  EXPECT_THROW(phi(0.5, 0), InputError);
}

TEST(Phi, ClosedFormMatchesDoubleSum) {
  for (double a : {0.0, 0.3, 0.5, 0.9, 0.999, 1.0, 1.001, 1.1}) {
    for (std::int64_t t = 1; t <= 200; ++t) {
      const double want = oracle::phi_direct(a, t);
      EXPECT_LE(std::abs(phi(a, t) - want), 1e-10 * std::max(1.0, want)) << a << " " << t;
    }
  }
}

TEST(Phi, BranchesAgreeAtSwitchPoint) {
  // |1 - a^2| = 1e-4 on both sides of a = 1.
  for (double a : {std::sqrt(1 - 1e-4), std::sqrt(1 + 1e-4)}) {
    for (double nudge : {-1e-12, 1e-12}) {
      for (std::int64_t t : {2, 10, 100, 1000}) {
        const double want = oracle::phi_direct(a + nudge, t);
        EXPECT_LE(std::abs(phi(a + nudge, t) - want), 1e-10 * want) << a << " " << t;
      }
    }
  }
}

TEST(TauGramian, Examples) {
  EXPECT_EQ(tau_gramian(Matrix::Zero(1, 1), kSpec).tau, 108);
  EXPECT_EQ(tau_gramian(Matrix::Identity(1, 1), kSpec).tau, 16);
  oracle::Rng rng(10);
  for (int d : {2, 3, 5}) EXPECT_EQ(tau_gramian(rng.orthogonal(d), kSpec).tau, 16);
}

TEST(TauGramian, ReportCurveInvariants) {
  oracle::Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = rng.with_radius(3, rng.uniform(0.2, 1.05));
    const BoundReport r = tau_gramian(A, kSpec);
    EXPECT_EQ(r.method, BoundMethod::gramian);
    EXPECT_FALSE(r.trivial);
    EXPECT_EQ(r.norm, "frobenius");
    EXPECT_DOUBLE_EQ(r.threshold, rate_threshold(kSpec));
    ASSERT_EQ(r.curve.size(), static_cast<std::size_t>(r.tau));
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
      EXPECT_EQ(r.curve[i].t, static_cast<std::int64_t>(i) + 1);
      if (i > 0) EXPECT_GE(r.curve[i].value, r.curve[i - 1].value - 1e-9);
    }
    EXPECT_GE(r.curve.back().value, r.threshold);
    if (r.tau > 1) EXPECT_LT(r.curve[r.tau - 2].value, r.threshold);
    EXPECT_NEAR(r.curve.back().value, oracle::lambda_min(oracle::information_direct(A, r.tau)),
                1e-8 * r.threshold);
  }
}

TEST(TauGramian, TrivialWhenThresholdNonPositive) {
  for (double delta : {1.0 / 2.4, 0.5, 0.9}) {
    const BoundReport r = tau_gramian(Matrix::Identity(2, 2), AccuracySpec(0.1, delta));
    EXPECT_EQ(r.tau, 1);
    EXPECT_TRUE(r.trivial);
    const BoundReport s = tau_spectral(Matrix::Identity(2, 2), AccuracySpec(0.1, delta));
    EXPECT_EQ(s.tau, 1);
    EXPECT_TRUE(s.trivial);
  }
}

TEST(TauGramian, CapError) {
  try {
    tau_gramian(Matrix::Zero(1, 1), kSpec, 50);
    FAIL() << "expected IterationCapError";
  } catch (const IterationCapError& e) {
    EXPECT_EQ(e.cap(), 50);
    EXPECT_GT(e.last_value(), 0.0);
  }
  EXPECT_THROW(tau_spectral(Matrix::Zero(1, 1), kSpec, 50), IterationCapError);
}

TEST(TauGramian, DimensionLimit) {
  EXPECT_THROW(tau_gramian(Matrix::Identity(65, 65), kSpec), InputError);
}

TEST(TauSpectral, Examples) {
  EXPECT_EQ(tau_spectral(diag({2.0, 0.0}), kSpec).tau, 108);
  EXPECT_EQ(tau_spectral(Matrix::Identity(1, 1), kSpec).tau, 16);
  EXPECT_EQ(tau_spectral(Matrix::Identity(2, 2), kSpec).tau,
            tau_gramian(Matrix::Identity(2, 2), kSpec).tau);
}

TEST(TauSpectral, MatchesDirectInversion) {
  const double thr = rate_threshold(kSpec);
  for (double a : {0.0, 0.2, 0.5, 0.8, 0.95, 1.0, 1.05, 1.3, 3.0}) {
    EXPECT_EQ(tau_phi(a, kSpec).tau, oracle::tau_phi_direct(a, thr)) << a;
  }
}

TEST(TauSpectral, LargeAmplitudeDoesNotOverflow) {
  const BoundReport r = tau_phi(1e200, AccuracySpec(1e-6, 0.01));
  EXPECT_GE(r.tau, 2);
  for (const auto& p : r.curve) EXPECT_FALSE(std::isnan(p.value));
}

TEST(BoundOrdering, SpectralNeverExceedsGramian) {
  oracle::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = rng.integer(1, 6);
    const Matrix A = rng.with_radius(d, rng.uniform(0.3, 1.05));
    EXPECT_LE(tau_spectral(A, kSpec).tau, tau_gramian(A, kSpec).tau);
  }
}

TEST(ScaledOrthogonal, Collapse) {
  oracle::Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = rng.integer(2, 5);
    const Matrix O = rng.orthogonal(d);
    for (double rho : {0.5, 0.9, 1.0, 1.1}) {
      for (std::int64_t t : {1, 2, 10, 60}) {
        const double want = phi(rho, t);
        EXPECT_LE(std::abs(cumulative_info(rho * O, t) - want), 1e-8 * (1 + want));
      }
      EXPECT_EQ(tau_gramian(rho * O, kSpec).tau, tau_spectral(rho * O, kSpec).tau);
    }
  }
}

TEST(ExpectedLlr, Examples) {
  oracle::Rng rng(15);
  const Matrix A = rng.gaussian(3, 3);
  EXPECT_EQ(expected_llr(A, A, 7), 0.0);
  EXPECT_NEAR(expected_llr(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.7), 3), 0.045,
              1e-15);
  EXPECT_EQ(expected_llr(A, A + Matrix::Ones(3, 3), 1), 0.0);
}

TEST(ExpectedLlr, MatchesEntrywiseTrace) {
  oracle::Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = rng.integer(1, 5);
    const Matrix A = rng.with_radius(d, 0.9);
    const Matrix Ap = A + 0.1 * rng.gaussian(d, d);
    const std::int64_t t = rng.integer(1, 30);
    const double want = oracle::half_trace_DtDS(A - Ap, oracle::information_direct(A, t));
    EXPECT_NEAR(expected_llr(A, Ap, t), want, 1e-10 * (1 + want));
  }
  EXPECT_THROW(expected_llr(Matrix::Identity(2, 2), Matrix::Identity(3, 3), 3), InputError);
}

TEST(ConfusingGramian, DiagonalExample) {
  const ConfusingInstance c = confusing_gramian(diag({2.0, 0.5}), kSpec, 10);
  EXPECT_LE((c.Aprime - diag({2.0, 0.3})).norm(), 1e-14);
  EXPECT_NEAR(c.distance, 0.2, 1e-15);
  EXPECT_EQ(c.kind, ConfusingKind::gramian_direction);
}

TEST(ConfusingGramian, DistanceAndTraceIdentity) {
  oracle::Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(1, 6);
    const Matrix A = rng.with_radius(d, rng.uniform(0.3, 1.05));
    const double eps = rng.uniform(0.01, 0.5);
    const AccuracySpec spec(eps, 0.05);
    const std::int64_t t = rng.integer(2, 50);
    const ConfusingInstance c = confusing_gramian(A, spec, t);
    EXPECT_NEAR((A - c.Aprime).norm(), 2 * eps, 1e-12);
    EXPECT_TRUE(check_locally_stable_gap(A, c.Aprime, spec));
    const Matrix S = oracle::information_direct(A, t);
    const double want = 2 * eps * eps * oracle::lambda_min(S);
    EXPECT_LE(std::abs(oracle::half_trace_DtDS(A - c.Aprime, S) - want), 1e-8 * want);
    EXPECT_LE(std::abs(expected_llr(A, c.Aprime, t) - want), 1e-8 * want);
  }
}

TEST(ConfusingGramian, RequiresTwoSteps) {
  EXPECT_THROW(confusing_gramian(Matrix::Identity(2, 2), kSpec, 1), InputError);
}

TEST(ConfusingSchur, DiagonalExample) {
  const ConfusingInstance c = confusing_schur(diag({2.0, 0.5}), kSpec);
  EXPECT_LE((c.Aprime - diag({2.0, 0.3})).norm(), 1e-12);
  EXPECT_EQ(c.kind, ConfusingKind::schur_spectral);
}

TEST(ConfusingSchur, RotationBlockExample) {
  Matrix A = Matrix::Zero(3, 3);
  A(0, 0) = 2.0;
  A.bottomRightCorner(2, 2) = 0.9 * oracle::rotation(0.7);
  const AccuracySpec spec(0.05, 0.05);
  const ConfusingInstance c = confusing_schur(A, spec);
  EXPECT_NEAR(c.distance, 0.1, 1e-12);
  const double want = 2 * 0.05 * 0.05 * oracle::phi_direct(0.9, 6);
  const double got = oracle::half_trace_DtDS(A - c.Aprime, oracle::information_direct(A, 6));
  EXPECT_LE(std::abs(got - want), 1e-6 * want);
  EXPECT_LE(std::abs(expected_llr(A, c.Aprime, 6) - want), 1e-6 * want);
}

TEST(ConfusingSchur, DistanceAndSpectralIdentity) {
  oracle::Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(1, 6);
    const Matrix A = rng.with_radius(d, rng.uniform(0.3, 1.05));
    const double eps = rng.uniform(0.01, 0.5);
    const AccuracySpec spec(eps, 0.05);
    const ConfusingInstance c = confusing_schur(A, spec);
    EXPECT_NEAR(c.distance, 2 * eps, 1e-12);
    EXPECT_NEAR((A - c.Aprime).norm(), 2 * eps, 1e-12);
    EXPECT_TRUE(check_locally_stable_gap(A, c.Aprime, spec));
    const double amp = Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().minCoeff();
    for (std::int64_t t : {2, 7, 25}) {
      const double want = 2 * eps * eps * oracle::phi_direct(amp, t);
      const double got = oracle::half_trace_DtDS(A - c.Aprime, oracle::information_direct(A, t));
      EXPECT_LE(std::abs(got - want), 1e-6 * want) << "d=" << d << " t=" << t;
    }
  }
}

TEST(CheckGap, Examples) {
  const Matrix A = Matrix::Identity(3, 3);
  const double eps = 0.1;
  const AccuracySpec spec(eps, 0.05);
  Matrix E1 = Matrix::Zero(3, 3);
  E1(0, 0) = 1.0;
  EXPECT_TRUE(check_locally_stable_gap(A, A - 2 * eps * E1, spec));
  EXPECT_FALSE(check_locally_stable_gap(A, A, spec));
  EXPECT_FALSE(check_locally_stable_gap(A, A - 3 * eps * E1, spec));
  EXPECT_TRUE(check_locally_stable_gap(A, A - 2.9 * eps * E1, spec));
  EXPECT_FALSE(check_locally_stable_gap(A, A - 1.9 * eps * E1, spec));
}

TEST(ConfusingKindNames, Strings) {
  EXPECT_EQ(to_string(ConfusingKind::gramian_direction), "gramian");
  EXPECT_EQ(to_string(ConfusingKind::schur_spectral), "schur");
}
