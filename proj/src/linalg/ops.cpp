#include "nvs/linalg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "eigen_bridge.hpp"
#include "nvs/errors.hpp"

namespace nvs {

using detail::as_eigen;
using detail::from_eigen;

SubsystemDims::SubsystemDims(std::initializer_list<std::size_t> dims)
    : SubsystemDims(std::vector<std::size_t>(dims)) {}

SubsystemDims::SubsystemDims(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InputError("SubsystemDims: at least one factor required");
  for (std::size_t d : dims_) {
    if (d < 2) throw InputError("SubsystemDims: every local dimension must be >= 2");
    total_ *= d;
  }
}

SubsystemDims SubsystemDims::uniform(std::size_t n_factors, std::size_t local_dim) {
  return SubsystemDims(std::vector<std::size_t>(n_factors, local_dim));
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const std::size_t da = a.dim();
  const std::size_t db = b.dim();
  CMatrix out(da * db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{}) continue;
      for (std::size_t k = 0; k < db; ++k)
        for (std::size_t l = 0; l < db; ++l) out(i * db + k, j * db + l) = aij * b(k, l);
    }
  return out;
}

std::vector<cplx> kron(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x * y);
  return out;
}

namespace {

void require_dims(const CMatrix& rho, const SubsystemDims& dims, const char* what) {
  if (rho.dim() != dims.total()) {
    throw InputError(std::string(what) + ": matrix dimension " + std::to_string(rho.dim()) +
                     " does not match subsystem product " + std::to_string(dims.total()));
  }
}

// Row-major strides: index = sum digit_k * stride_k.
std::vector<std::size_t> strides_of(const SubsystemDims& dims) {
  std::vector<std::size_t> s(dims.count());
  std::size_t acc = 1;
  for (std::size_t k = dims.count(); k-- > 0;) {
    s[k] = acc;
    acc *= dims[k];
  }
  return s;
}

}  // namespace

CMatrix partial_trace(const CMatrix& rho, const SubsystemDims& dims, std::span<const std::size_t> keep) {
  require_dims(rho, dims, "partial_trace");
  if (keep.empty()) throw InputError("partial_trace: keep set must be nonempty");
  std::vector<bool> kept(dims.count(), false);
  for (std::size_t k : keep) {
    if (k >= dims.count()) throw InputError("partial_trace: factor index out of range");
    if (kept[k]) throw InputError("partial_trace: duplicate factor in keep set");
    kept[k] = true;
  }

  // Split every full index into (kept part, traced part), both row-major over
  // their own factors in ascending factor order.
  const std::size_t total = dims.total();
  std::size_t kept_total = 1;
  std::size_t traced_total = 1;
  for (std::size_t k = 0; k < dims.count(); ++k) (kept[k] ? kept_total : traced_total) *= dims[k];

  std::vector<std::size_t> kept_of(total);
  std::vector<std::size_t> traced_of(total);
  std::vector<std::size_t> compose(kept_total * traced_total);
  const auto strides = strides_of(dims);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t kidx = 0;
    std::size_t tidx = 0;
    for (std::size_t k = 0; k < dims.count(); ++k) {
      const std::size_t digit = (idx / strides[k]) % dims[k];
      if (kept[k]) {
        kidx = kidx * dims[k] + digit;
      } else {
        tidx = tidx * dims[k] + digit;
      }
    }
    kept_of[idx] = kidx;
    traced_of[idx] = tidx;
    compose[kidx * traced_total + tidx] = idx;
  }

  CMatrix out(kept_total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t ki = kept_of[i];
    const std::size_t t = traced_of[i];
    for (std::size_t kj = 0; kj < kept_total; ++kj) out(ki, kj) += rho(i, compose[kj * traced_total + t]);
  }
  return out;
}

CMatrix partial_trace(const CMatrix& rho, const SubsystemDims& dims, std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, dims, std::span<const std::size_t>(keep.begin(), keep.size()));
}

CMatrix partial_transpose(const CMatrix& rho, const SubsystemDims& dims, std::size_t subsystem) {
  require_dims(rho, dims, "partial_transpose");
  if (subsystem >= dims.count()) throw InputError("partial_transpose: subsystem index out of range");
  const std::size_t stride = strides_of(dims)[subsystem];
  const std::size_t d = dims[subsystem];
  const std::size_t n = rho.dim();
  CMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t di = (i / stride) % d;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dj = (j / stride) % d;
      const std::size_t i2 = i - di * stride + dj * stride;
      const std::size_t j2 = j - dj * stride + di * stride;
      out(i2, j2) = rho(i, j);
    }
  }
  return out;
}

CMatrix checked_hermitian(const CMatrix& a, const char* context) {
  const double scale = a.max_abs();
  const double defect = a.hermiticity_defect();
  if (defect > kHermitianTolerance * scale) {
    throw InputError(std::string(context) + ": matrix is not Hermitian (defect " +
                     std::to_string(defect) + ", scale " + std::to_string(scale) + ")");
  }
  return a.hermitian_part();
}

HermEig herm_eig(const CMatrix& a) {
  const CMatrix h = checked_hermitian(a, "herm_eig");
  HermEig out;
  if (h.empty()) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(as_eigen(h));
  if (solver.info() != Eigen::Success) throw NumericalError("herm_eig: eigensolver failed to converge");
  out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + h.dim());
  out.vectors = from_eigen(solver.eigenvectors());
  return out;
}

CMatrix expm_unitary(const CMatrix& h, double t) {
  const HermEig eig = herm_eig(h);
  const std::size_t n = h.dim();
  // V diag(e^{-i lambda t}) V^dagger
  CMatrix scaled(eig.vectors);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx phase = std::exp(-kI * (eig.values[j] * t));
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= phase;
  }
  return scaled * eig.vectors.adjoint();
}

namespace {

bool eig_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace

GeneralEig general_eig(const CMatrix& a) {
  GeneralEig out;
  if (a.empty()) return out;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
  const Eigen::MatrixXcd dense = as_eigen(a);
  solver.setMaxIterations(std::max<Eigen::Index>(30 * dense.rows(), 300));
  solver.compute(dense, true);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("general_eig: QR iteration did not converge for dimension " +
                         std::to_string(a.dim()) + " within " +
                         std::to_string(solver.getMaxIterations()) + " iterations per eigenvalue");
  }
  const std::size_t n = a.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return eig_less(ev(static_cast<Eigen::Index>(x)), ev(static_cast<Eigen::Index>(y)));
  });
  out.values.resize(n);
  out.vectors = CMatrix(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto src = static_cast<Eigen::Index>(order[c]);
    out.values[c] = ev(src);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = solver.eigenvectors()(static_cast<Eigen::Index>(r), src);
  }
  return out;
}

std::vector<cplx> general_eigenvalues(const CMatrix& a) {
  if (a.empty()) return {};
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
  const Eigen::MatrixXcd dense = as_eigen(a);
  solver.setMaxIterations(std::max<Eigen::Index>(30 * dense.rows(), 300));
  solver.compute(dense, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("general_eigenvalues: QR iteration did not converge for dimension " +
                         std::to_string(a.dim()));
  }
  std::vector<cplx> values(solver.eigenvalues().data(), solver.eigenvalues().data() + a.dim());
  std::sort(values.begin(), values.end(), eig_less);
  return values;
}

double trace_norm(const CMatrix& a) {
  double s = 0.0;
  for (double v : herm_eig(a).values) s += std::abs(v);
  return s;
}

CMatrix expm_general(const CMatrix& a) {
  const std::size_t n = a.dim();
  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(a(i, j));
    norm1 = std::max(norm1, col);
  }
  if (!std::isfinite(norm1)) throw NumericalError("expm_general: non-finite generator");
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const CMatrix scaled = a * cplx(std::ldexp(1.0, -squarings));

  // ||scaled||_1 <= 1/2, so 20 terms put the truncation error below 1e-25.
  CMatrix result = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = term * scaled;
    term *= cplx(1.0 / k);
    result += term;
    if (term.max_abs() < 1e-18 * result.max_abs()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

std::vector<cplx> solve_linear(const CMatrix& a, std::span<const cplx> b) {
  if (b.size() != a.dim()) throw InputError("solve_linear: right-hand side length mismatch");
  const Eigen::MatrixXcd dense = as_eigen(a);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(dense);
  if (!lu.isInvertible()) throw NumericalError("solve_linear: matrix is singular");
  const Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXcd x = lu.solve(rhs);
  return {x.data(), x.data() + x.size()};
}

std::vector<cplx> vec(const CMatrix& x) {
  const std::size_t n = x.dim();
  std::vector<cplx> v(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) v[j * n + i] = x(i, j);
  return v;
}

CMatrix unvec(std::span<const cplx> v, std::size_t dim) {
  if (v.size() != dim * dim) throw InputError("unvec: length is not dim^2");
  CMatrix x(dim);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) x(i, j) = v[j * dim + i];
  return x;
}

double min_eigenvalue(const CMatrix& a) {
  const auto eig = herm_eig(a);
  return eig.values.empty() ? 0.0 : eig.values.front();
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  // The difference of two nearly equal states has a tiny norm, so the relative
  // Hermiticity check would be meaningless here; symmetrize instead.
  return 0.5 * trace_norm((a - b).hermitian_part());
}

}  // namespace nvs
