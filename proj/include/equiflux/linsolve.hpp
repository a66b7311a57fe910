/**
 * @file linsolve.hpp
 * @brief Dense symmetric-indefinite KKT solver for patch problems and sparse
 * SPD solver for the global primal system.
 */
#pragma once

#include <complex>
#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace equiflux {

/// A linear solve could not be carried out (singular, indefinite, non-SPD).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Saddle-point system
 *
 *   M x - Bᵀ y = b,   B x = c,   and optionally  eᵀ y = 0
 *
 * where e (`mean_row`) fixes the constant multiplier of a patch whose
 * flux space carries zero normal trace on the whole patch boundary.
 */
struct SaddleSystem {
  Eigen::MatrixXd M;
  Eigen::MatrixXd B;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::optional<Eigen::VectorXd> mean_row;

  Eigen::Index n() const { return M.rows(); }
  Eigen::Index m() const { return B.rows(); }
};

struct SaddleSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double primal_residual = 0.0;      // ‖Mx - Bᵀy - b‖
  double constraint_residual = 0.0;  // ‖Bx - c‖
  double rcond = 0.0;                // reciprocal condition estimate of the KKT matrix
};

inline double saddle_scale(const SaddleSystem& s) {
  return 1.0 + s.M.norm() + s.B.norm() + s.b.norm() + s.c.norm();
}

inline void saddle_residuals(const SaddleSystem& s, SaddleSolution& sol) {
  sol.primal_residual = (s.M * sol.x - s.B.transpose() * sol.y - s.b).norm();
  sol.constraint_residual = (s.B * sol.x - s.c).norm();
}

/**
 * @brief Direct solve of a SaddleSystem by symmetric-indefinite (Bunch-Kaufman)
 * factorization of the assembled KKT matrix.
 *
 * @throws SolverError if M is not symmetric positive definite or the KKT
 * matrix is numerically singular (constraint rank deficiency).
 */
inline SaddleSolution solve_saddle(const SaddleSystem& s, double rcond_floor = 1e-15) {
  const Eigen::Index n = s.n(), m = s.m();
  if (s.M.cols() != n || s.B.cols() != n || s.b.size() != n || s.c.size() != m)
    throw std::invalid_argument("solve_saddle: inconsistent block sizes");
  if ((s.M - s.M.transpose()).norm() > 1e-13 * std::max(1.0, s.M.norm()))
    throw SolverError("solve_saddle: mass block is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(s.M).info() != Eigen::Success)
    throw SolverError("solve_saddle: indefinite mass block");

  const Eigen::Index extra = s.mean_row ? 1 : 0;
  const Eigen::Index N = n + m + extra;
  // column-major lower triangle is all LAPACK reads
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  K.topLeftCorner(n, n) = s.M;
  K.block(n, 0, m, n) = s.B;
  K.block(0, n, n, m) = s.B.transpose();
  if (s.mean_row) {
    K.block(N - 1, n, 1, m) = s.mean_row->transpose();
    K.block(n, N - 1, m, 1) = *s.mean_row;
  }
  Eigen::VectorXd rhs(N);
  rhs << s.b, s.c, Eigen::VectorXd::Zero(extra);

  const double anorm = LAPACKE_dlansy(LAPACK_COL_MAJOR, '1', 'L', static_cast<lapack_int>(N), K.data(),
                                      static_cast<lapack_int>(N));
  std::vector<lapack_int> ipiv(N);
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(N), K.data(),
                                   static_cast<lapack_int>(N), ipiv.data());
  if (info > 0) throw SolverError("solve_saddle: singular KKT matrix (constraint rank deficiency)");
  if (info < 0) throw SolverError("solve_saddle: invalid LAPACK argument " + std::to_string(-info));
  double rcond = 0.0;
  LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(N), K.data(), static_cast<lapack_int>(N),
                 ipiv.data(), anorm, &rcond);
  if (rcond < rcond_floor)
    throw SolverError("solve_saddle: numerically singular KKT matrix (rank deficiency beyond the known nullspace), rcond=" +
                      std::to_string(rcond));
  info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(N), 1, K.data(), static_cast<lapack_int>(N),
                        ipiv.data(), rhs.data(), static_cast<lapack_int>(N));
  if (info != 0) throw SolverError("solve_saddle: back substitution failed");

  SaddleSolution sol;
  sol.x = rhs.head(n);
  sol.y = -rhs.segment(n, m);
  sol.rcond = rcond;
  saddle_residuals(s, sol);
  return sol;
}

/**
 * @brief Sparse symmetric positive (semi)definite system.
 *
 * When `nullspace` is set the matrix is singular along that vector and the
 * returned solution satisfies mean_weightsᵀ x = 0.
 */
struct SparseSPD {
  Eigen::SparseMatrix<double> A;
  std::optional<Eigen::VectorXd> nullspace;
  std::optional<Eigen::VectorXd> mean_weights;
};

struct SpdSolution {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
};

/// @throws SolverError on a non-positive pivot.
inline SpdSolution solve_spd(const SparseSPD& sys, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = sys.A.rows();
  if (sys.A.cols() != n || rhs.size() != n) throw std::invalid_argument("solve_spd: size mismatch");
  SpdSolution out;
  out.x = Eigen::VectorXd::Zero(n);
  if (n == 0) return out;

  Eigen::Index pinned = -1;
  Eigen::SparseMatrix<double> A = sys.A;
  Eigen::VectorXd r = rhs;
  if (sys.nullspace) {
    sys.nullspace->cwiseAbs().maxCoeff(&pinned);
    // Remove row/column `pinned`: the reduced matrix stays SPD.
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < A.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
        if (it.row() == pinned || it.col() == pinned) continue;
        const auto i = it.row() - (it.row() > pinned ? 1 : 0);
        const auto j = it.col() - (it.col() > pinned ? 1 : 0);
        trip.emplace_back(static_cast<int>(i), static_cast<int>(j), it.value());
      }
    Eigen::SparseMatrix<double> red(n - 1, n - 1);
    red.setFromTriplets(trip.begin(), trip.end());
    A = std::move(red);
    Eigen::VectorXd rr(n - 1);
    rr << rhs.head(pinned), rhs.tail(n - pinned - 1);
    r = std::move(rr);
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  if (A.rows() > 0) {
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
      throw SolverError("solve_spd: non-SPD pivot");
  }
  Eigen::VectorXd xr = A.rows() > 0 ? Eigen::VectorXd(ldlt.solve(r)) : Eigen::VectorXd();
  if (sys.nullspace) {
    out.x << xr.head(pinned), 0.0, xr.tail(n - pinned - 1);
    const Eigen::VectorXd& z = *sys.nullspace;
    const Eigen::VectorXd w = sys.mean_weights ? *sys.mean_weights : Eigen::VectorXd::Ones(n);
    out.x -= (w.dot(out.x) / w.dot(z)) * z;
  } else {
    out.x = xr;
  }
  out.relative_residual = (sys.A * out.x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (rhs.norm() == 0.0) out.relative_residual = (sys.A * out.x).norm();
  return out;
}

}  // namespace equiflux
