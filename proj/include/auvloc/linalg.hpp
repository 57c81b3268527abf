#pragma once

#include <Eigen/Core>

namespace auvloc {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Mat3 = Eigen::Matrix3d;

// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Moore-Penrose pseudoinverse of a full-column-rank matrix.
/// Throws Error(RankDeficient) when the smallest singular value is below
/// kRankTolerance times the largest, or when rows < cols.
Matrix pseudoinverse(const Matrix& m);

/// x minimizing |a x - b|_2. Same rank requirements as pseudoinverse().
Vector solve_least_squares(const Matrix& a, const Vector& b);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values[i]; orthonormal
};

/// Eigendecomposition of a symmetric matrix. Throws Error(NotSymmetric) if
/// max|m - m^T| exceeds 1e-9 relative to max(1, max|m|).
SymmetricEigen sym_eigen(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace auvloc
