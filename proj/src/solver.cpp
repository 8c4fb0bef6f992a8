#include "gplio/solver.hpp"

#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gplio {

void NormalEquations::resize(int n_knots, int block_dim) {
  n = n_knots;
  d = block_dim;
  diag.assign(n, Eigen::MatrixXd::Zero(d, d));
  off.assign(n > 0 ? n - 1 : 0, Eigen::MatrixXd::Zero(d, d));
  b = Eigen::VectorXd::Zero(n * d);
}

void NormalEquations::set_zero() {
  for (auto &m : diag) m.setZero();
  for (auto &m : off) m.setZero();
  b.setZero();
}

void NormalEquations::add_unary(int k, const Eigen::MatrixXd &j,
                                const Eigen::VectorXd &r,
                                const Eigen::MatrixXd &w) {
  const Eigen::MatrixXd jtw = j.transpose() * w;
  diag[k] += jtw * j;
  b.segment(k * d, d) += jtw * r;
}

void NormalEquations::add_binary(int k, const Eigen::MatrixXd &j1,
                                 const Eigen::MatrixXd &j2,
                                 const Eigen::VectorXd &r,
                                 const Eigen::MatrixXd &w) {
  const Eigen::MatrixXd j1tw = j1.transpose() * w;
  const Eigen::MatrixXd j2tw = j2.transpose() * w;
  diag[k] += j1tw * j1;
  diag[k + 1] += j2tw * j2;
  off[k] += j1tw * j2;
  b.segment(k * d, d) += j1tw * r;
  b.segment((k + 1) * d, d) += j2tw * r;
}

void NormalEquations::add_info(int k, const Eigen::MatrixXd &h,
                               const Eigen::VectorXd &g) {
  diag[k] += h;
  b.segment(k * d, d) += g;
}

Eigen::MatrixXd NormalEquations::dense() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n * d, n * d);
  for (int k = 0; k < n; ++k) h.block(k * d, k * d, d, d) = diag[k];
  for (int k = 0; k + 1 < n; ++k) {
    h.block(k * d, (k + 1) * d, d, d) = off[k];
    h.block((k + 1) * d, k * d, d, d) = off[k].transpose();
  }
  return h;
}

Eigen::VectorXd NormalEquations::solve(double lambda) const {
  std::vector<Eigen::MatrixXd> damped = diag;
  if (lambda > 0.0)
    for (auto &m : damped)
      m += lambda * Eigen::MatrixXd::Identity(d, d);
  return solve_block_tridiagonal(damped, off, -b);
}

Eigen::VectorXd solve_block_tridiagonal(const std::vector<Eigen::MatrixXd> &diag,
                                        const std::vector<Eigen::MatrixXd> &off,
                                        const Eigen::VectorXd &rhs) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) return {};
  const int d = static_cast<int>(diag[0].rows());
  if (static_cast<int>(off.size()) != n - 1 || rhs.size() != n * d)
    throw std::invalid_argument("solve_block_tridiagonal: size mismatch");

  // Forward block elimination:
  //   | C_0  U_0          | x = y
  //   |      C_1  U_1     |
  //   |           ...     |
  // with C_k = D_k - U_{k-1}^T C_{k-1}^{-1} U_{k-1} factorized in place.
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol(n);
  std::vector<Eigen::VectorXd> y(n);
  Eigen::MatrixXd c = diag[0];
  for (int k = 0; k < n; ++k) {
    if (k > 0)
      c = diag[k] -
          off[k - 1].transpose() * chol[k - 1].solve(off[k - 1]);
    chol[k].compute(c);
    if (chol[k].info() != Eigen::Success)
      throw std::runtime_error(
          "solve_block_tridiagonal: pivot block not positive-definite");
    y[k] = rhs.segment(k * d, d);
    if (k > 0)
      y[k] -= off[k - 1].transpose() * chol[k - 1].solve(y[k - 1]);
  }

  // Back substitution.
  Eigen::VectorXd x(n * d);
  x.segment((n - 1) * d, d) = chol[n - 1].solve(y[n - 1]);
  for (int k = n - 2; k >= 0; --k)
    x.segment(k * d, d) =
        chol[k].solve(y[k] - off[k] * x.segment((k + 1) * d, d));
  return x;
}

MarginalInfo schur_marginalize(const Eigen::MatrixXd &h,
                               const Eigen::VectorXd &b, int drop_dim) {
  const int total = static_cast<int>(h.rows());
  const int keep = total - drop_dim;
  if (drop_dim <= 0 || keep <= 0 || h.cols() != total || b.size() != total)
    throw std::invalid_argument("schur_marginalize: bad partition");

  const Eigen::MatrixXd h00 = h.topLeftCorner(drop_dim, drop_dim);
  const Eigen::MatrixXd h01 = h.topRightCorner(drop_dim, keep);
  const Eigen::MatrixXd h11 = h.bottomRightCorner(keep, keep);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h00);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("schur_marginalize: eliminated block singular");

  MarginalInfo out;
  out.H = h11 - h01.transpose() * ldlt.solve(h01);
  out.H = 0.5 * (out.H + out.H.transpose());
  out.b = b.tail(keep) - h01.transpose() * ldlt.solve(b.head(drop_dim));

  // Numerical round-off can leave slightly indefinite results; project back
  // onto the PSD cone so downstream solves stay well-posed.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.H);
  if (es.eigenvalues().minCoeff() < 0.0) {
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
      if (ev[i] < 0.0) {
        ev[i] = 0.0;
        ++out.clamped_eigenvalues;
      }
    }
    out.H = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    out.H = 0.5 * (out.H + out.H.transpose());
  }
  return out;
}

}  // namespace gplio
