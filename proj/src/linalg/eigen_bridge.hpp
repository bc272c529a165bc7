#pragma once

#include <Eigen/Dense>

#include "nvs/linalg/cmatrix.hpp"

namespace nvs::detail {

using EigenMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenMat> as_eigen(const CMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  return Eigen::Map<const EigenMat>(m.data(), n, n);
}

template <typename Derived>
CMatrix from_eigen(const Eigen::MatrixBase<Derived>& m) {
  CMatrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  return out;
}

}  // namespace nvs::detail
