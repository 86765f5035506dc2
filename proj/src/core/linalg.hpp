#pragma once

// Complex sparse matrices (CSR), banded LU with partial pivoting, and the
// symmetric rank-3 triple-product tensor.

#include <cstdint>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace gpelod::linalg {

struct Triplet {
  int row;
  int col;
  Complex value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Validates the CSR layout: strictly increasing columns per row, and
  // conjugate symmetry when `hermitian` is set.
  SparseMatrix(int rows, int cols, std::vector<int> row_ptr,
               std::vector<int> col_index, CVector values,
               bool hermitian = false);

  // Duplicate (row, col) pairs are summed.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<Triplet> triplets,
                                    bool hermitian = false);
  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(std::span<const Complex> d);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool hermitian() const noexcept { return hermitian_; }

  std::span<const int> row_ptr() const noexcept { return row_ptr_; }
  std::span<const int> col_index() const noexcept { return col_index_; }
  std::span<const Complex> values() const noexcept { return values_; }

  Complex entry(int i, int j) const;

  void multiply(std::span<const Complex> x, std::span<Complex> y) const;
  CVector operator*(std::span<const Complex> x) const;
  // Real-valued product; requires every stored entry to be real.
  void multiply_real(std::span<const double> x, std::span<double> y) const;

  // max(i - j) and max(j - i) over stored entries.
  int lower_bandwidth() const noexcept;
  int upper_bandwidth() const noexcept;

  // Largest |entry| over the matrix.
  double max_abs() const noexcept;

  bool is_real() const noexcept;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_index_;
  CVector values_;
  bool hermitian_ = false;
};

SparseMatrix hermitian_adjoint(const SparseMatrix& m);

// alpha * a + beta * b; the Hermitian flag is kept only when both inputs
// carry it and both scalars are real.
SparseMatrix linear_combination(Complex alpha, const SparseMatrix& a,
                                Complex beta, const SparseMatrix& b);

// Quadratic form x^H m x.
Complex quadratic_form(const SparseMatrix& m, std::span<const Complex> x);

// LU factorization with partial pivoting in banded storage. General sparse
// input is accepted: the band simply grows to cover every stored entry, so a
// dense matrix becomes a full band.
template <class T>
class BandLu {
 public:
  BandLu() = default;

  static BandLu factor(const SparseMatrix& m);
  // Row-major dense input of size n x n.
  static BandLu factor_dense(int n, std::span<const T> dense);

  int size() const noexcept { return n_; }
  int lower_bandwidth() const noexcept { return kl_; }
  int upper_bandwidth() const noexcept { return ku_; }

  void solve_in_place(std::span<T> b) const;
  std::vector<T> solve(std::span<const T> b) const;

 private:
  BandLu(int n, int kl, int ku);
  T& at(int i, int j) { return band_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)]; }
  const T& at(int i, int j) const {
    return band_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)];
  }
  void decompose(double scale);

  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  int width_ = 0;
  std::vector<T> band_;
  std::vector<int> pivot_;
};

using LuFactorization = BandLu<Complex>;
using RealLuFactorization = BandLu<double>;

// Pivot threshold relative to the largest matrix entry.
inline constexpr double kPivotTolerance = 1e-14;

LuFactorization lu_factor(const SparseMatrix& m);
// Requires a real-valued matrix.
RealLuFactorization lu_factor_real(const SparseMatrix& m);

struct TensorEntry {
  int k;
  int j;
  int i;
  double value;
};

// Symmetric triple-product tensor w_{kji} = w_{jki}. Only k <= j is stored;
// the symmetry factor is folded into the stored weights at construction so
// both contractions are branch-free.
class SparseTensor3 {
 public:
  SparseTensor3() = default;

  // Entries with |value| <= tolerance are dropped (tolerance 0 keeps all
  // nonzero entries). Throws on k > j, out-of-range or duplicate indices.
  SparseTensor3(int dim, std::vector<TensorEntry> entries, double tolerance);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return value_.size(); }
  double tolerance() const noexcept { return tolerance_; }

  // Unscaled stored entries, sorted by (i, k, j).
  std::vector<TensorEntry> entries() const;
  // w_{kji} for any ordering of k, j (0 when absent).
  double value(int k, int j, int i) const;

  // result_i = sum_{k,j} rho_k u_j w_{kji}
  CVector contract(std::span<const double> rho,
                   std::span<const Complex> u) const;
  // b_i = sum_{k,j} u_k conj(u_j) w_{kji}  (real by symmetry)
  RVector density_load(std::span<const Complex> u) const;

 private:
  int dim_ = 0;
  double tolerance_ = 0.0;
  std::vector<std::int32_t> k_;
  std::vector<std::int32_t> j_;
  std::vector<std::int32_t> i_;
  RVector value_;   // halved on the diagonal k == j
  std::vector<std::size_t> row_ptr_;  // entries of output index i
};

CVector tensor_contract(const SparseTensor3& w, std::span<const double> rho,
                        std::span<const Complex> u);

}  // namespace gpelod::linalg
