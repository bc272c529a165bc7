#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nvs {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

/// Dense square complex matrix, row-major. Carries density operators,
/// Hamiltonians, propagators and superoperators alike.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}
  CMatrix(std::size_t dim, std::vector<cplx> row_major);
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix identity(std::size_t dim);
  static CMatrix diagonal(std::span<const cplx> diag);
  static CMatrix diagonal(std::initializer_list<cplx> diag);
  /// |v><w|
  static CMatrix outer(std::span<const cplx> v, std::span<const cplx> w);
  static CMatrix projector(std::span<const cplx> v) { return outer(v, v); }

  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return dim_ == 0; }

  cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * dim_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * dim_ + c]; }

  std::span<cplx> values() noexcept { return data_; }
  std::span<const cplx> values() const noexcept { return data_; }
  cplx* data() noexcept { return data_.data(); }
  const cplx* data() const noexcept { return data_.data(); }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conj() const;

  cplx trace() const noexcept;
  /// Largest |entry|; 0 for the empty matrix.
  double max_abs() const noexcept;
  bool all_finite() const noexcept;
  /// max |a_ij - conj(a_ji)|
  double hermiticity_defect() const noexcept;
  /// (a + a^dagger)/2
  CMatrix hermitian_part() const;

  CMatrix& operator+=(const CMatrix& rhs);
  CMatrix& operator-=(const CMatrix& rhs);
  CMatrix& operator*=(cplx s) noexcept;
  /// this += s * rhs
  CMatrix& add_scaled(cplx s, const CMatrix& rhs);

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
  friend CMatrix operator*(const CMatrix& a, const CMatrix& b);

  std::vector<cplx> apply(std::span<const cplx> v) const;

  bool operator==(const CMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<cplx> data_;
};

/// a*b - b*a
CMatrix commutator(const CMatrix& a, const CMatrix& b);

/// max |a_ij - b_ij|; throws InputError on dimension mismatch.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

double vector_norm(std::span<const cplx> v) noexcept;
cplx inner(std::span<const cplx> v, std::span<const cplx> w) noexcept;  // <v|w>

}  // namespace nvs
