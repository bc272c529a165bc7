#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "nvs/linalg/cmatrix.hpp"

namespace nvs {

/// Local dimensions of a tensor-product space, slowest factor first.
class SubsystemDims {
 public:
  SubsystemDims(std::initializer_list<std::size_t> dims);
  explicit SubsystemDims(std::vector<std::size_t> dims);
  /// n_factors copies of dimension local_dim.
  static SubsystemDims uniform(std::size_t n_factors, std::size_t local_dim = 2);

  std::size_t count() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t k) const { return dims_.at(k); }
  std::size_t total() const noexcept { return total_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::size_t total_ = 1;
};

CMatrix kron(const CMatrix& a, const CMatrix& b);
std::vector<cplx> kron(std::span<const cplx> a, std::span<const cplx> b);

/// Reduced matrix over the factors listed in `keep` (any order; the output
/// keeps them in ascending factor order).
CMatrix partial_trace(const CMatrix& rho, const SubsystemDims& dims, std::span<const std::size_t> keep);
CMatrix partial_trace(const CMatrix& rho, const SubsystemDims& dims, std::initializer_list<std::size_t> keep);

CMatrix partial_transpose(const CMatrix& rho, const SubsystemDims& dims, std::size_t subsystem);

struct HermEig {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // eigenvectors as columns
};

/// Relative tolerance on ||a - a^dagger||_max below which input is silently symmetrized.
inline constexpr double kHermitianTolerance = 1e-10;

/// Throws InputError if `a` is not Hermitian within kHermitianTolerance * ||a||_max.
CMatrix checked_hermitian(const CMatrix& a, const char* context);

HermEig herm_eig(const CMatrix& a);

/// exp(-i h t) for Hermitian h, through its eigendecomposition.
CMatrix expm_unitary(const CMatrix& h, double t);

struct GeneralEig {
  std::vector<cplx> values;  // ascending real part, then ascending imaginary part
  CMatrix vectors;           // right eigenvectors as columns
};

GeneralEig general_eig(const CMatrix& a);

/// Eigenvalues only; cheaper than general_eig for large generators.
std::vector<cplx> general_eigenvalues(const CMatrix& a);

/// sum |lambda_i| of a Hermitian matrix.
double trace_norm(const CMatrix& a);

/// exp(a) for a general (non-normal) matrix by scaling and squaring of a
/// truncated Taylor series.
CMatrix expm_general(const CMatrix& a);

/// Solve a x = b by LU with partial pivoting. Throws NumericalError when singular.
std::vector<cplx> solve_linear(const CMatrix& a, std::span<const cplx> b);

/// Column-major vectorization vec(X), so that vec(A X B) = (B^T kron A) vec(X).
std::vector<cplx> vec(const CMatrix& x);
CMatrix unvec(std::span<const cplx> v, std::size_t dim);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& a);

/// 1/2 ||a - b||_1 for Hermitian a, b.
double trace_distance(const CMatrix& a, const CMatrix& b);

}  // namespace nvs
