#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace gpelod {

double norm2(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace gpelod

namespace gpelod::linalg {

namespace {

double magnitude(double x) { return std::abs(x); }
double magnitude(const Complex& z) { return std::abs(z); }

template <class T>
T from_complex(const Complex& z);

template <>
double from_complex<double>(const Complex& z) {
  if (z.imag() != 0.0) {
    throw InvalidArgument("real factorization requested for a complex matrix");
  }
  return z.real();
}

template <>
Complex from_complex<Complex>(const Complex& z) {
  return z;
}

}  // namespace

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_ptr,
                           std::vector<int> col_index, CVector values,
                           bool hermitian)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_index_(std::move(col_index)),
      values_(std::move(values)),
      hermitian_(hermitian) {
  if (rows <= 0 || cols <= 0) {
    throw InvalidArgument("sparse matrix dimensions must be positive");
  }
  if (row_ptr_.size() != static_cast<std::size_t>(rows) + 1 ||
      row_ptr_.front() != 0 ||
      row_ptr_.back() != static_cast<int>(col_index_.size()) ||
      col_index_.size() != values_.size()) {
    throw InvalidArgument("inconsistent CSR arrays");
  }
  for (int r = 0; r < rows; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) {
      throw InvalidArgument("row pointers must be nondecreasing");
    }
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (col_index_[p] < 0 || col_index_[p] >= cols) {
        throw InvalidArgument("column index out of range");
      }
      if (p > row_ptr_[r] && col_index_[p] <= col_index_[p - 1]) {
        throw InvalidArgument("column indices must be strictly increasing");
      }
    }
  }
  if (hermitian_) {
    if (rows != cols) throw InvalidArgument("Hermitian matrix must be square");
    for (int r = 0; r < rows; ++r) {
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
        const Complex mirror = entry(col_index_[p], r);
        if (std::abs(mirror - std::conj(values_[p])) >
            1e-14 * (1.0 + std::abs(values_[p]))) {
          throw InvalidArgument("matrix flagged Hermitian is not");
        }
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<Triplet> triplets,
                                         bool hermitian) {
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) {
              return std::tie(a.row, a.col) < std::tie(b.row, b.col);
            });
  std::vector<int> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> cols_out;
  CVector vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  int last_row = -1;
  int last_col = -1;
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw InvalidArgument("triplet index out of range");
    }
    if (t.row == last_row && t.col == last_col) {
      vals.back() += t.value;
      continue;
    }
    cols_out.push_back(t.col);
    vals.push_back(t.value);
    row_ptr[t.row + 1]++;
    last_row = t.row;
    last_col = t.col;
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(cols_out),
                      std::move(vals), hermitian);
}

SparseMatrix SparseMatrix::identity(int n) {
  CVector ones(n, Complex{1.0, 0.0});
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const Complex> d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> row_ptr(n + 1);
  std::vector<int> cols(n);
  std::iota(row_ptr.begin(), row_ptr.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  bool herm = std::all_of(d.begin(), d.end(),
                          [](const Complex& z) { return z.imag() == 0.0; });
  return SparseMatrix(n, n, std::move(row_ptr), std::move(cols),
                      CVector(d.begin(), d.end()), herm);
}

Complex SparseMatrix::entry(int i, int j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_) {
    throw InvalidArgument("entry index out of range");
  }
  const auto begin = col_index_.begin() + row_ptr_[i];
  const auto end = col_index_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return {};
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

void SparseMatrix::multiply(std::span<const Complex> x,
                            std::span<Complex> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) ||
      y.size() != static_cast<std::size_t>(rows_)) {
    throw DimensionMismatch("matrix-vector product size mismatch");
  }
  for (int r = 0; r < rows_; ++r) {
    Complex acc{};
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      acc += values_[p] * x[col_index_[p]];
    }
    y[r] = acc;
  }
}

CVector SparseMatrix::operator*(std::span<const Complex> x) const {
  CVector y(rows_);
  multiply(x, y);
  return y;
}

void SparseMatrix::multiply_real(std::span<const double> x,
                                 std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) ||
      y.size() != static_cast<std::size_t>(rows_)) {
    throw DimensionMismatch("matrix-vector product size mismatch");
  }
  for (int r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      acc += values_[p].real() * x[col_index_[p]];
    }
    y[r] = acc;
  }
}

int SparseMatrix::lower_bandwidth() const noexcept {
  int kl = 0;
  for (int r = 0; r < rows_; ++r) {
    if (row_ptr_[r] < row_ptr_[r + 1]) {
      kl = std::max(kl, r - col_index_[row_ptr_[r]]);
    }
  }
  return kl;
}

int SparseMatrix::upper_bandwidth() const noexcept {
  int ku = 0;
  for (int r = 0; r < rows_; ++r) {
    if (row_ptr_[r] < row_ptr_[r + 1]) {
      ku = std::max(ku, col_index_[row_ptr_[r + 1] - 1] - r);
    }
  }
  return ku;
}

double SparseMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool SparseMatrix::is_real() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](const Complex& z) { return z.imag() == 0.0; });
}

SparseMatrix hermitian_adjoint(const SparseMatrix& m) {
  std::vector<Triplet> t;
  t.reserve(m.nnz());
  const auto rp = m.row_ptr();
  const auto ci = m.col_index();
  const auto v = m.values();
  for (int r = 0; r < m.rows(); ++r) {
    for (int p = rp[r]; p < rp[r + 1]; ++p) {
      t.push_back({ci[p], r, std::conj(v[p])});
    }
  }
  return SparseMatrix::from_triplets(m.cols(), m.rows(), std::move(t),
                                     m.hermitian());
}

SparseMatrix linear_combination(Complex alpha, const SparseMatrix& a,
                                Complex beta, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("linear_combination: shape mismatch");
  }
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  auto push = [&t](const SparseMatrix& m, Complex s) {
    const auto rp = m.row_ptr();
    const auto ci = m.col_index();
    const auto v = m.values();
    for (int r = 0; r < m.rows(); ++r) {
      for (int p = rp[r]; p < rp[r + 1]; ++p) t.push_back({r, ci[p], s * v[p]});
    }
  };
  push(a, alpha);
  push(b, beta);
  const bool herm = a.hermitian() && b.hermitian() && alpha.imag() == 0.0 &&
                    beta.imag() == 0.0;
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t), herm);
}

Complex quadratic_form(const SparseMatrix& m, std::span<const Complex> x) {
  const CVector y = m * x;
  Complex acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Banded LU

template <class T>
BandLu<T>::BandLu(int n, int kl, int ku)
    : n_(n),
      kl_(kl),
      ku_(ku),
      width_(2 * kl + ku + 1),
      band_(static_cast<std::size_t>(n) * (2 * kl + ku + 1)),
      pivot_(n) {}

template <class T>
BandLu<T> BandLu<T>::factor(const SparseMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("LU factorization requires a square matrix");
  }
  BandLu lu(m.rows(), m.lower_bandwidth(), m.upper_bandwidth());
  const auto rp = m.row_ptr();
  const auto ci = m.col_index();
  const auto v = m.values();
  for (int r = 0; r < m.rows(); ++r) {
    for (int p = rp[r]; p < rp[r + 1]; ++p) {
      lu.at(r, ci[p]) = from_complex<T>(v[p]);
    }
  }
  lu.decompose(m.max_abs());
  return lu;
}

template <class T>
BandLu<T> BandLu<T>::factor_dense(int n, std::span<const T> dense) {
  if (dense.size() != static_cast<std::size_t>(n) * n || n <= 0) {
    throw DimensionMismatch("dense LU: expected n*n entries");
  }
  BandLu lu(n, n - 1, n - 1);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const T x = dense[static_cast<std::size_t>(i) * n + j];
      lu.at(i, j) = x;
      scale = std::max(scale, magnitude(x));
    }
  }
  lu.decompose(scale);
  return lu;
}

template <class T>
void BandLu<T>::decompose(double scale) {
  const double threshold = kPivotTolerance * scale;
  if (scale == 0.0) throw SingularMatrix("LU: zero matrix");
  const int upper = kl_ + ku_;  // fill-in band of U after pivoting
  for (int k = 0; k < n_; ++k) {
    const int last = std::min(n_ - 1, k + kl_);
    int p = k;
    double best = magnitude(at(k, k));
    for (int i = k + 1; i <= last; ++i) {
      const double mag = magnitude(at(i, k));
      if (mag > best) {
        best = mag;
        p = i;
      }
    }
    if (best <= threshold) {
      std::ostringstream os;
      os << "LU: pivot " << best << " below threshold at column " << k;
      throw SingularMatrix(os.str());
    }
    pivot_[k] = p;
    const int col_end = std::min(n_ - 1, k + upper);
    if (p != k) {
      for (int j = k; j <= col_end; ++j) std::swap(at(k, j), at(p, j));
    }
    const T inv = T(1.0) / at(k, k);
    for (int i = k + 1; i <= last; ++i) {
      T& lik = at(i, k);
      if (lik == T(0.0)) continue;
      lik *= inv;
      const T l = lik;
      for (int j = k + 1; j <= col_end; ++j) at(i, j) -= l * at(k, j);
    }
  }
}

template <class T>
void BandLu<T>::solve_in_place(std::span<T> b) const {
  if (b.size() != static_cast<std::size_t>(n_)) {
    throw DimensionMismatch("LU solve: right-hand side size mismatch");
  }
  for (int k = 0; k < n_; ++k) {
    if (pivot_[k] != k) std::swap(b[k], b[pivot_[k]]);
    const T bk = b[k];
    if (bk == T(0.0)) continue;
    const int last = std::min(n_ - 1, k + kl_);
    for (int i = k + 1; i <= last; ++i) b[i] -= at(i, k) * bk;
  }
  const int upper = kl_ + ku_;
  for (int k = n_ - 1; k >= 0; --k) {
    T acc = b[k];
    const int col_end = std::min(n_ - 1, k + upper);
    for (int j = k + 1; j <= col_end; ++j) acc -= at(k, j) * b[j];
    b[k] = acc / at(k, k);
  }
}

template <class T>
std::vector<T> BandLu<T>::solve(std::span<const T> b) const {
  std::vector<T> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

template class BandLu<double>;
template class BandLu<Complex>;

LuFactorization lu_factor(const SparseMatrix& m) {
  return LuFactorization::factor(m);
}

RealLuFactorization lu_factor_real(const SparseMatrix& m) {
  return RealLuFactorization::factor(m);
}

// ---------------------------------------------------------------------------
// Triple-product tensor

SparseTensor3::SparseTensor3(int dim, std::vector<TensorEntry> entries,
                             double tolerance)
    : dim_(dim), tolerance_(tolerance) {
  if (dim < 0 || tolerance < 0.0) {
    throw InvalidArgument("SparseTensor3: negative dimension or tolerance");
  }
  std::sort(entries.begin(), entries.end(),
            [](const TensorEntry& a, const TensorEntry& b) {
              return std::tie(a.i, a.k, a.j) < std::tie(b.i, b.k, b.j);
            });
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const auto& e = entries[n];
    if (e.k < 0 || e.j < 0 || e.i < 0 || e.k >= dim || e.j >= dim ||
        e.i >= dim) {
      throw InvalidArgument("SparseTensor3: index out of range");
    }
    if (e.k > e.j) throw InvalidArgument("SparseTensor3: expected k <= j");
    if (n > 0) {
      const auto& prev = entries[n - 1];
      if (prev.i == e.i && prev.k == e.k && prev.j == e.j) {
        throw InvalidArgument("SparseTensor3: duplicate index triple");
      }
    }
    const double mag = std::abs(e.value);
    if (mag == 0.0 || (tolerance > 0.0 && mag <= tolerance)) continue;
    k_.push_back(e.k);
    j_.push_back(e.j);
    i_.push_back(e.i);
    value_.push_back(e.k == e.j ? 0.5 * e.value : e.value);
  }
  row_ptr_.assign(static_cast<std::size_t>(dim) + 1, 0);
  for (const auto i : i_) ++row_ptr_[static_cast<std::size_t>(i) + 1];
  for (int i = 0; i < dim; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

std::vector<TensorEntry> SparseTensor3::entries() const {
  std::vector<TensorEntry> out(value_.size());
  for (std::size_t n = 0; n < value_.size(); ++n) {
    out[n] = {k_[n], j_[n], i_[n],
              k_[n] == j_[n] ? 2.0 * value_[n] : value_[n]};
  }
  return out;
}

double SparseTensor3::value(int k, int j, int i) const {
  if (k > j) std::swap(k, j);
  // Entries are sorted by (i, k, j).
  std::size_t lo = 0;
  std::size_t hi = value_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (std::tie(i_[mid], k_[mid], j_[mid]) < std::tie(i, k, j)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < value_.size() && i_[lo] == i && k_[lo] == k && j_[lo] == j) {
    return k == j ? 2.0 * value_[lo] : value_[lo];
  }
  return 0.0;
}

CVector SparseTensor3::contract(std::span<const double> rho,
                                std::span<const Complex> u) const {
  if (rho.size() != static_cast<std::size_t>(dim_) ||
      u.size() != static_cast<std::size_t>(dim_)) {
    throw DimensionMismatch("tensor contraction: vector length mismatch");
  }
  CVector out(dim_);
  for (int i = 0; i < dim_; ++i) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const int k = k_[p];
      const int j = j_[p];
      const double rk = value_[p] * rho[k];
      const double rj = value_[p] * rho[j];
      re += rk * u[j].real() + rj * u[k].real();
      im += rk * u[j].imag() + rj * u[k].imag();
    }
    out[i] = {re, im};
  }
  return out;
}

RVector SparseTensor3::density_load(std::span<const Complex> u) const {
  if (u.size() != static_cast<std::size_t>(dim_)) {
    throw DimensionMismatch("density load: vector length mismatch");
  }
  RVector out(dim_, 0.0);
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const Complex& a = u[k_[p]];
      const Complex& b = u[j_[p]];
      acc += value_[p] * (a.real() * b.real() + a.imag() * b.imag());
    }
    out[i] = 2.0 * acc;
  }
  return out;
}

CVector tensor_contract(const SparseTensor3& w, std::span<const double> rho,
                        std::span<const Complex> u) {
  return w.contract(rho, u);
}

}  // namespace gpelod::linalg
