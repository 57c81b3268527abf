#include "auvloc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <string>

#include "auvloc/error.hpp"

namespace auvloc {

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix pseudoinverse(const Matrix& m) {
  if (m.rows() < m.cols()) {
    throw Error(ErrorCode::RankDeficient,
                "pseudoinverse: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    " matrix cannot have full column rank");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::PreconditionViolated, "pseudoinverse: non-finite entry");
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double largest = s(0);
  const double smallest = s(s.size() - 1);
  if (!(largest > 0.0) || smallest < kRankTolerance * largest) {
    throw Error(ErrorCode::RankDeficient,
                "pseudoinverse: singular value ratio " + std::to_string(smallest / largest) +
                    " below rank tolerance");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Vector solve_least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::PreconditionViolated, "solve_least_squares: row count mismatch");
  }
  return pseudoinverse(a) * b;
}

SymmetricEigen sym_eigen(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::PreconditionViolated, "sym_eigen: matrix must be square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9 * scale)) {
    throw Error(ErrorCode::NotSymmetric,
                "sym_eigen: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.transpose()));
  // Eigen sorts ascending.
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

}  // namespace auvloc
