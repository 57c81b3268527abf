#pragma once

#include <random>

#include "auvloc/acoustic.hpp"
#include "auvloc/linalg.hpp"
#include "oracles.hpp"

namespace fixtures {

// Five-buoy layout used throughout the tests; first entry is the reference.
inline auvloc::BuoyArray reference_buoys() {
  auvloc::BuoyArray b;
  b.reference = {-800, -200, 3};
  b.auxiliaries = {{-200, -800, 0}, {-800, -1000, 0}, {0, 0, 0}, {-500, -500, -500}};
  return b;
}

inline oracle::Dense to_dense(const auvloc::Matrix& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  return d;
}

inline auvloc::Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auvloc::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace fixtures
