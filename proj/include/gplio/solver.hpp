#pragma once

#include <vector>

#include <Eigen/Core>

// Linear-algebra core of the sliding-window solver: assembly of the
// block-tridiagonal normal equations, their direct solve, and Schur-complement
// elimination used when the oldest knot leaves the window.

namespace gplio {

// Symmetric block-tridiagonal system over n knots of equal dimension d.
// Binary factors may only couple adjacent knots, which keeps H banded.
struct NormalEquations {
  int n = 0, d = 0;
  std::vector<Eigen::MatrixXd> diag;  // n blocks, d x d
  std::vector<Eigen::MatrixXd> off;   // n-1 blocks: H(k, k+1)
  Eigen::VectorXd b;                  // gradient, length n*d

  void resize(int n_knots, int block_dim);
  void set_zero();

  // H += J^T W J, b += J^T W r for a factor on knot k.
  void add_unary(int k, const Eigen::MatrixXd &j, const Eigen::VectorXd &r,
                 const Eigen::MatrixXd &w);
  // Same for a factor on knots (k, k+1) with Jacobians j1, j2.
  void add_binary(int k, const Eigen::MatrixXd &j1, const Eigen::MatrixXd &j2,
                  const Eigen::VectorXd &r, const Eigen::MatrixXd &w);
  // Direct information contribution on knot k (marginal priors).
  void add_info(int k, const Eigen::MatrixXd &h, const Eigen::VectorXd &g);

  Eigen::MatrixXd dense() const;

  // Solves (H + lambda I) dx = -b by block elimination; throws
  // std::runtime_error if a pivot block is not positive-definite.
  Eigen::VectorXd solve(double lambda) const;
};

// Block-tridiagonal solve (Thomas algorithm with Cholesky pivots).
Eigen::VectorXd solve_block_tridiagonal(const std::vector<Eigen::MatrixXd> &diag,
                                        const std::vector<Eigen::MatrixXd> &off,
                                        const Eigen::VectorXd &rhs);

struct MarginalInfo {
  Eigen::MatrixXd H;
  Eigen::VectorXd b;
  int clamped_eigenvalues = 0;  // negative eigenvalues projected to zero
};

// Eliminates the leading drop_dim variables of the system (H, b):
//   H_keep = H11 - H10 H00^{-1} H01,  b_keep = b1 - H10 H00^{-1} b0,
// followed by a symmetric projection onto the positive-semidefinite cone.
MarginalInfo schur_marginalize(const Eigen::MatrixXd &h,
                               const Eigen::VectorXd &b, int drop_dim);

}  // namespace gplio
