#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hybrid_bell/closed_form.hpp"
#include "hybrid_bell/fock_oracle.hpp"
#include "series_oracle.hpp"

using namespace hybrid_bell;
using namespace hybrid_bell::fock;

namespace {

TruncationConfig dim(int n) { return {n, 1e-12}; }

series::Detector detector(Scheme s) {
  return s == Scheme::OnOff ? series::Detector::OnOff : series::Detector::Parity;
}

}  // namespace

TEST(Truncation, TailAdmission) {
  EXPECT_TRUE(dim(32).admits(1.5));
  EXPECT_FALSE(dim(8).admits(3.0));
  EXPECT_THROW(
      {
        try {
          dim(8).require_admits(3.0);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::TruncationTooSmall);
          throw;
        }
      },
      Error);
  EXPECT_THROW(dim(1).validate(), Error);
}

TEST(Truncation, AutomaticRule) {
  EXPECT_EQ(TruncationConfig::automatic(0.0).dim, 32);
  for (double amp : {0.5, 2.0, 4.0, 6.0}) {
    const auto t = TruncationConfig::automatic(amp);
    const double mu = (amp + 2.0) * (amp + 2.0);
    EXPECT_LT(poisson_tail(mu, t.dim), 1e-12);
    if (t.dim > 32) {
      EXPECT_GE(poisson_tail(mu, t.dim - 1), 1e-12);
    }
    EXPECT_TRUE(t.admits(amp));
  }
}

TEST(Displacement, ZeroIsIdentity) {
  const auto d = displacement_operator(0.0, dim(32));
  EXPECT_LT(max_abs(d.entries - Matrix::Identity(32, 32)), 1e-15);
  EXPECT_TRUE(d.unitary);
}

TEST(Displacement, VacuumOverlap) {
  const auto d = displacement_operator(1.0, dim(32));
  EXPECT_NEAR(d.entries(0, 0).real(), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(d.entries(0, 0).imag(), 0.0, 1e-12);
}

TEST(Displacement, InverseIsNegatedArgument) {
  const complex beta(0.7, 0.3);
  const auto plus = displacement_operator(beta, dim(64));
  const auto minus = displacement_operator(-beta, dim(64));
  EXPECT_LT(max_abs(plus.entries * minus.entries - Matrix::Identity(64, 64)), 1e-8);
  EXPECT_TRUE(plus.verify(1e-8));
}

TEST(Displacement, PreparesCoherentStateFromVacuum) {
  const complex beta(-0.4, 0.9);
  const auto d = displacement_operator(beta, dim(48));
  const Vector coherent = coherent_state(beta, 48);
  EXPECT_LT((d.entries.col(0) - coherent).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Displacement, RefusesUndersizedBasis) {
  EXPECT_THROW(displacement_operator(4.0, dim(10)), Error);
}

TEST(Povm, PerfectDetectorIsProjector) {
  for (int n : {0, 3, 7}) {
    const auto e = lossy_povm_element(n, 1.0, dim(16));
    Matrix expected = Matrix::Zero(16, 16);
    expected(n, n) = 1.0;
    EXPECT_LT(max_abs(e.entries - expected), 1e-15);
    EXPECT_TRUE(e.verify());
  }
}

TEST(Povm, NoClickDiagonal) {
  const double p = 0.35;
  const auto e = lossy_povm_element(0, p, dim(32));
  for (int m = 0; m < 32; ++m) EXPECT_NEAR(e.entries(m, m).real(), std::pow(1.0 - p, m), 1e-14);
}

TEST(Povm, Completeness) {
  Matrix sum = Matrix::Zero(32, 32);
  for (int n = 0; n < 32; ++n) sum += lossy_povm_element(n, 0.6, dim(32)).entries;
  EXPECT_LT(max_abs(sum - Matrix::Identity(32, 32)), 1e-12);
}

TEST(EffectiveMeasurement, Examples) {
  const auto ideal = effective_measurement(Scheme::OnOff, 1.0, dim(16));
  EXPECT_NEAR(ideal.entries(0, 0).real(), 1.0, 1e-15);
  for (int m = 1; m < 16; ++m) EXPECT_NEAR(ideal.entries(m, m).real(), -1.0, 1e-15);

  const auto half = effective_measurement(Scheme::Parity, 0.5, dim(16));
  EXPECT_NEAR(half.entries(0, 0).real(), 1.0, 1e-15);
  for (int m = 1; m < 16; ++m) EXPECT_NEAR(half.entries(m, m).real(), 0.0, 1e-12);

  const auto blind = effective_measurement(Scheme::OnOff, 0.0, dim(16));
  EXPECT_LT(max_abs(blind.entries - Matrix::Identity(16, 16)), 1e-15);
}

// Direct binomial summation against 2(1-eta)^m - 1 and (1-2 eta)^m.
TEST(EffectiveMeasurement, DiagonalIdentities) {
  for (int k = 0; k <= 10; ++k) {
    const double eta = 0.1 * k;
    const auto onoff = effective_measurement(Scheme::OnOff, eta, dim(64));
    const auto parity = effective_measurement(Scheme::Parity, eta, dim(64));
    EXPECT_TRUE(onoff.verify());
    EXPECT_TRUE(parity.verify());
    for (int m = 0; m < 64; ++m) {
      EXPECT_NEAR(onoff.entries(m, m).real(), 2.0 * std::pow(1.0 - eta, m) - 1.0, 1e-10)
          << "eta=" << eta << " m=" << m;
      EXPECT_NEAR(parity.entries(m, m).real(), std::pow(1.0 - 2.0 * eta, m), 1e-10)
          << "eta=" << eta << " m=" << m;
    }
  }
}

TEST(HybridStateTest, DensityMatrixInvariants) {
  for (double a : {0.0, 0.7, 2.0}) {
    const auto st = HybridState::build(a, TruncationConfig::automatic(a));
    EXPECT_NEAR(st.matrix.trace().real(), 1.0, 1e-10);
    EXPECT_LT(max_abs(st.matrix - st.matrix.adjoint()), 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> es(st.matrix);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
    EXPECT_NEAR(st.reduced_field().trace().real(), 1.0, 1e-10);
  }
}

TEST(HybridStateTest, QubitIndexIsSlow) {
  const auto st = HybridState::build(0.0, dim(8));
  // alpha = 0: (|H> + |V>)|0>/sqrt2, so only rows 0 and 8 are populated
  EXPECT_NEAR(st.matrix(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(st.matrix(8, 8).real(), 0.5, 1e-15);
  EXPECT_NEAR(st.matrix(0, 8).real(), 0.5, 1e-15);
  EXPECT_NEAR(st.matrix(1, 1).real(), 0.0, 1e-15);
}

TEST(OracleExpectation, VacuumAlwaysReportsPlusOne) {
  const double e = joint_expectation_oracle(0.0, {pi / 2, 0.0}, {0.0, 0.0}, Scheme::OnOff,
                                            {1.0, 1.0}, dim(32));
  EXPECT_NEAR(e, 1.0, 1e-14);
}

TEST(OracleExpectation, ParityMapsMinusAlphaToAlpha) {
  const double e = joint_expectation_oracle(0.8, {pi / 2, 0.0}, {0.0, 1.3}, Scheme::Parity,
                                            {1.0, 1.0}, dim(32));
  EXPECT_NEAR(e, 1.0, 1e-12);
}

TEST(OracleExpectation, MatchesClosedFormAtReferencePoint) {
  const QubitSetting xi{1.1, 0.4};
  const DisplacementSetting beta{0.5, 2.0};
  const EfficiencyPair effs{0.85, 0.75};
  for (Scheme s : {Scheme::OnOff, Scheme::Parity}) {
    const double oracle = joint_expectation_oracle(0.6, xi, beta, s, effs, dim(64));
    EXPECT_NEAR(oracle, closed_form::expectation_effective(s, 0.6, xi, beta, effs), 1e-8);
    EXPECT_NEAR(oracle,
                series::expectation(detector(s), 0.6, xi.theta, xi.phi, beta.beta(), effs.eta_A,
                                    effs.eta_B),
                1e-10);
  }
}

TEST(OracleExpectation, AffineInEtaA) {
  series::Draw draw(11);
  for (int i = 0; i < 40; ++i) {
    const double a = draw(0.0, 1.5);
    const QubitSetting xi{draw(0, pi), draw(0, two_pi)};
    const DisplacementSetting beta{draw(0, 1.5), draw(0, two_pi)};
    const double eta_B = draw(0, 1), eta_A = draw(0, 1);
    for (Scheme s : {Scheme::OnOff, Scheme::Parity}) {
      const auto t = TruncationConfig::automatic(a + beta.magnitude);
      const double e1 = joint_expectation_oracle(a, xi, beta, s, {1.0, eta_B}, t);
      const double e0 = joint_expectation_oracle(a, xi, beta, s, {0.0, eta_B}, t);
      const double e = joint_expectation_oracle(a, xi, beta, s, {eta_A, eta_B}, t);
      EXPECT_NEAR(e, eta_A * e1 + (1.0 - eta_A) * e0, 1e-12);
    }
  }
}

TEST(OracleExpectation, PhaseCovariance) {
  series::Draw draw(12);
  for (int i = 0; i < 20; ++i) {
    const double a = draw(0.0, 1.5);
    const double chi = draw(0, two_pi);
    MeasurementSettings s{{draw(0, pi), draw(0, two_pi)},
                          {draw(0, pi), draw(0, two_pi)},
                          {draw(0, 1.5), draw(0, two_pi)},
                          {draw(0, 1.5), draw(0, two_pi)},
                          i % 2 ? Scheme::Parity : Scheme::OnOff};
    const EfficiencyPair effs{draw(0, 1), draw(0, 1)};
    const auto t = TruncationConfig::automatic(a + 1.5);
    const double base = bell_oracle(a, s, effs, t);
    MeasurementSettings rotated = s;
    rotated.beta1.phase += chi;
    rotated.beta2.phase += chi;
    EXPECT_NEAR(bell_oracle(std::polar(a, chi), rotated, effs, t), base, 1e-10);
  }
}

TEST(OracleExpectation, PerfectDetectorsMatchIdealForms) {
  series::Draw draw(13);
  for (int i = 0; i < 40; ++i) {
    const double a = draw(0.0, 2.0);
    const QubitSetting xi{draw(0, pi), draw(0, two_pi)};
    const DisplacementSetting beta{draw(0, 2.0), draw(0, two_pi)};
    auto t = TruncationConfig::automatic(a + beta.magnitude);
    t.dim = std::max(t.dim, 64);
    for (Scheme s : {Scheme::OnOff, Scheme::Parity}) {
      EXPECT_NEAR(joint_expectation_oracle(a, xi, beta, s, {1.0, 1.0}, t),
                  closed_form::expectation_ideal(s, a, xi, beta), 1e-8);
    }
  }
}

TEST(OracleExpectation, AgreesWithSeriesReference) {
  series::Draw draw(14);
  for (int i = 0; i < 60; ++i) {
    const double a = draw(0.0, 2.0);
    const QubitSetting xi{draw(0, pi), draw(0, two_pi)};
    const DisplacementSetting beta{draw(0, 2.0), draw(0, two_pi)};
    const double eta_A = draw(0, 1), eta_B = draw(0, 1);
    const auto t = TruncationConfig::automatic(a + beta.magnitude);
    for (Scheme s : {Scheme::OnOff, Scheme::Parity}) {
      EXPECT_NEAR(joint_expectation_oracle(a, xi, beta, s, {eta_A, eta_B}, t),
                  series::expectation(detector(s), a, xi.theta, xi.phi, beta.beta(), eta_A, eta_B),
                  1e-10);
    }
  }
}

TEST(OracleExpectation, RejectsBadEfficiency) {
  EXPECT_THROW(
      joint_expectation_oracle(0.5, {0, 0}, {0, 0}, Scheme::OnOff, {1.2, 0.5}, dim(32)), Error);
}
