#pragma once

#include <Eigen/Dense>

namespace rpas::lqr {

struct CareSolution {
    Eigen::MatrixXd P;  // stabilizing solution
    Eigen::MatrixXd K;  // R^-1 B^T P
};

/// Continuous algebraic Riccati equation A'P + PA - PBR^-1B'P + Q = 0.
/// Matrix sign function on the Hamiltonian, polished by Newton-Kleinman.
/// Throws NumericError if no stabilizing solution is found.
CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Independent solve via the stable invariant subspace of the Hamiltonian
/// (eigenvector method). Slower and less robust; used as a cross-check.
CareSolution solve_care_eigen(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Residual norm of the Riccati equation for a candidate P.
double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

/// Largest real part over the eigenvalues of M.
double spectral_abscissa(const Eigen::MatrixXd& M);

inline bool is_hurwitz(const Eigen::MatrixXd& M) { return spectral_abscissa(M) < 0.0; }

/// Solves A'X + XA + C = 0 through the Kronecker form. Fine for small n.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

}  // namespace rpas::lqr
