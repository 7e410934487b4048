#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "rpas/common.hpp"
#include "rpas/lqr.hpp"

using namespace rpas;
using Eigen::MatrixXd;

namespace {

struct DoubleIntegrator {
    MatrixXd A{{0.0, 1.0}, {0.0, 0.0}};
    MatrixXd B{{0.0}, {1.0}};
    MatrixXd Q = MatrixXd::Identity(2, 2);
    MatrixXd R = MatrixXd::Identity(1, 1);
};

}  // namespace

TEST(Care, DoubleIntegratorClassicalGain) {
    DoubleIntegrator d;
    const auto s = lqr::solve_care(d.A, d.B, d.Q, d.R);
    EXPECT_NEAR(s.K(0, 0), 1.0, 1e-9);
    EXPECT_NEAR(s.K(0, 1), std::sqrt(3.0), 1e-9);
    EXPECT_LT(lqr::care_residual(d.A, d.B, d.Q, d.R, s.P), 1e-10);
}

TEST(Care, AgreesWithEigenvectorMethod) {
    DoubleIntegrator d;
    const auto a = lqr::solve_care(d.A, d.B, d.Q, d.R);
    const auto b = lqr::solve_care_eigen(d.A, d.B, d.Q, d.R);
    EXPECT_LT((a.K - b.K).norm(), 1e-9);
    EXPECT_LT((a.P - b.P).norm(), 1e-9);

    // An unstable, coupled 4-state plant.
    MatrixXd A{{-1.0, 0.9, 0.0, 0.2}, {0.9, -1.0, 0.1, 0.0}, {0.0, 0.3, -0.5, 1.0}, {-1.0, 0.0, 0.0, 0.1}};
    MatrixXd B{{0.0, 0.1}, {-11.0, 0.0}, {0.5, 1.0}, {0.0, 0.3}};
    MatrixXd Q = MatrixXd::Identity(4, 4) * 3.0;
    MatrixXd R = MatrixXd::Identity(2, 2) * 0.5;
    const auto c = lqr::solve_care(A, B, Q, R);
    const auto e = lqr::solve_care_eigen(A, B, Q, R);
    EXPECT_LT((c.K - e.K).norm(), 1e-8 * c.K.norm());
    EXPECT_TRUE(lqr::is_hurwitz(A - B * c.K));
}

TEST(Care, HomogeneousInWeights) {
    DoubleIntegrator d;
    const auto a = lqr::solve_care(d.A, d.B, d.Q, d.R);
    const auto b = lqr::solve_care(d.A, d.B, 4.0 * d.Q, 4.0 * d.R);
    EXPECT_LT((a.K - b.K).norm(), 1e-10);
}

TEST(Care, ClosedLoopHurwitz) {
    DoubleIntegrator d;
    const auto s = lqr::solve_care(d.A, d.B, d.Q, d.R);
    EXPECT_LT(lqr::spectral_abscissa(d.A - d.B * s.K), 0.0);
}

TEST(Care, RejectsBadWeights) {
    DoubleIntegrator d;
    EXPECT_THROW(lqr::solve_care(d.A, d.B, d.Q, -d.R), ConfigError);
    EXPECT_THROW(lqr::solve_care(d.A, d.B, -d.Q, d.R), ConfigError);
    EXPECT_THROW(lqr::solve_care(d.A, d.B, MatrixXd::Identity(3, 3), d.R), ConfigError);
    MatrixXd asym{{1.0, 0.5}, {0.0, 1.0}};
    EXPECT_THROW(lqr::solve_care(d.A, d.B, asym, d.R), ConfigError);
}

TEST(Care, UnstabilizablePairFails) {
    MatrixXd A{{1.0, 0.0}, {0.0, -1.0}};
    MatrixXd B{{0.0}, {1.0}};  // unstable mode is uncontrollable
    EXPECT_THROW(lqr::solve_care(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1)), NumericError);
}

TEST(Lyapunov, SolvesScalarAndMatrixCases) {
    MatrixXd a{{-2.0}};
    MatrixXd c{{4.0}};
    EXPECT_NEAR(lqr::solve_lyapunov(a, c)(0, 0), 1.0, 1e-12);
    MatrixXd A{{-1.0, 2.0}, {0.0, -3.0}};
    MatrixXd C = MatrixXd::Identity(2, 2);
    const MatrixXd X = lqr::solve_lyapunov(A, C);
    EXPECT_LT((A.transpose() * X + X * A + C).norm(), 1e-12);
}
