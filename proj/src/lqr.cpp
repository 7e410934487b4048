#include "rpas/lqr.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rpas/common.hpp"

namespace rpas::lqr {

namespace {

void check_shapes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R) {
    const auto n = A.rows();
    const auto m = B.cols();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
        R.cols() != m || n == 0 || m == 0) {
        throw ConfigError("care: inconsistent matrix dimensions");
    }
    if ((Q - Q.transpose()).norm() > 1e-9 * (1.0 + Q.norm()) ||
        (R - R.transpose()).norm() > 1e-9 * (1.0 + R.norm())) {
        throw ConfigError("care: Q and R must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(Q), re(R);
    if (qe.eigenvalues().minCoeff() < -1e-12 * (1.0 + Q.norm())) {
        throw ConfigError("care: Q must be positive semidefinite");
    }
    if (!(re.eigenvalues().minCoeff() > 0.0)) {
        throw ConfigError("care: R must be positive definite");
    }
}

Eigen::MatrixXd hamiltonian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    const auto n = A.rows();
    const Eigen::MatrixXd G = B * R.ldlt().solve(B.transpose());
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    return H;
}

}  // namespace

double spectral_abscissa(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues().real().maxCoeff();
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd res =
        A.transpose() * P + P * A - P * B * R.ldlt().solve(B.transpose() * P) + Q;
    return res.norm();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
    const auto n = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    // vec(A'X + XA) = (I kron A' + A' kron I) vec(X)
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            L.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
            L.block(i * n, j * n, n, n) += A(j, i) * I;
        }
    }
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
    const Eigen::VectorXd x = L.fullPivLu().solve(-c);
    Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
    return 0.5 * (X + X.transpose());
}

CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    check_shapes(A, B, Q, R);
    const auto n = A.rows();
    const Eigen::MatrixXd H = hamiltonian(A, B, Q, R);

    // Newton iteration for sign(H) with determinant scaling.
    Eigen::MatrixXd Z = H;
    const double nn = static_cast<double>(2 * n);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
        const double det = std::abs(lu.determinant());
        if (!(det > 0.0) || !std::isfinite(det)) {
            throw NumericError("care: Hamiltonian has eigenvalues on the imaginary axis");
        }
        const double c = std::pow(det, 1.0 / nn);
        const Eigen::MatrixXd Zn = 0.5 * (Z / c + c * lu.inverse());
        const double delta = (Zn - Z).norm();
        Z = Zn;
        if (delta <= 1e-12 * Z.norm()) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericError("care: matrix sign iteration did not converge");
    }

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd M(2 * n, n), N(2 * n, n);
    M << Z.block(0, n, n, n), Z.block(n, n, n, n) + I;
    N << Z.block(0, 0, n, n) + I, Z.block(n, 0, n, n);
    Eigen::MatrixXd P = M.colPivHouseholderQr().solve(-N);
    P = 0.5 * (P + P.transpose());

    // Newton-Kleinman polish from the sign-function estimate.
    Eigen::MatrixXd K = R.ldlt().solve(B.transpose() * P);
    for (int it = 0; it < 20; ++it) {
        const Eigen::MatrixXd Acl = A - B * K;
        if (!is_hurwitz(Acl)) {
            break;
        }
        const Eigen::MatrixXd Pn = solve_lyapunov(Acl, Q + K.transpose() * R * K);
        const double delta = (Pn - P).norm();
        P = Pn;
        K = R.ldlt().solve(B.transpose() * P);
        if (delta <= 1e-14 * (1.0 + P.norm())) {
            break;
        }
    }

    if (!P.allFinite() || !is_hurwitz(A - B * K)) {
        throw NumericError("care: no stabilizing solution (pair not stabilizable?)");
    }
    return {P, K};
}

CareSolution solve_care_eigen(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    check_shapes(A, B, Q, R);
    const auto n = A.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(hamiltonian(A, B, Q, R));
    const Eigen::VectorXcd lambda = es.eigenvalues();
    const Eigen::MatrixXcd V = es.eigenvectors();

    Eigen::MatrixXcd U(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (lambda(i).real() < 0.0) {
            if (k == n) {
                throw NumericError("care (eigen): too many stable eigenvalues");
            }
            U.col(k++) = V.col(i);
        }
    }
    if (k != n) {
        throw NumericError("care (eigen): Hamiltonian has eigenvalues on the imaginary axis");
    }
    const Eigen::MatrixXcd U1 = U.topRows(n);
    const Eigen::MatrixXcd U2 = U.bottomRows(n);
    const Eigen::MatrixXcd Pc = U1.transpose().fullPivLu().solve(U2.transpose()).transpose();
    Eigen::MatrixXd P = Pc.real();
    P = 0.5 * (P + P.transpose());
    Eigen::MatrixXd K = R.ldlt().solve(B.transpose() * P);
    return {P, K};
}

}  // namespace rpas::lqr
