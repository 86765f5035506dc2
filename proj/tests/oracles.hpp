#pragma once

// Reference implementations used only by the tests: dense Gaussian
// elimination, composite Boole quadrature of P1 functions, and seeded
// random data. None of them calls into the library's own solvers.

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

template <class T>
struct Dense {
  int n = 0;
  int m = 0;
  std::vector<T> a;

  Dense(int rows, int cols) : n(rows), m(cols), a(static_cast<std::size_t>(rows) * cols) {}
  T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * m + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * m + j]; }
};

// Solves A x = b by Gaussian elimination with partial pivoting.
template <class T>
std::vector<T> solve(Dense<T> A, std::vector<T> b) {
  const int n = A.n;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(A(r, c)) > std::abs(A(p, c))) p = r;
    }
    if (std::abs(A(p, c)) == 0.0) throw std::runtime_error("oracle: singular");
    if (p != c) {
      for (int j = 0; j < n; ++j) std::swap(A(p, j), A(c, j));
      std::swap(b[p], b[c]);
    }
    for (int r = c + 1; r < n; ++r) {
      const T f = A(r, c) / A(c, c);
      if (f == T{}) continue;
      for (int j = c; j < n; ++j) A(r, j) -= f * A(c, j);
      b[r] -= f * b[c];
    }
  }
  std::vector<T> x(n);
  for (int r = n - 1; r >= 0; --r) {
    T s = b[r];
    for (int j = r + 1; j < n; ++j) s -= A(r, j) * x[j];
    x[r] = s / A(r, r);
  }
  return x;
}

// Value and slope of a P1 function given by interior values u on a uniform
// grid of n elements over [a, a + n h], at x inside element e.
inline Complex p1_value(const std::vector<Complex>& u, int e, double s) {
  const auto node = [&](int k) {
    const int d = k - 1;
    return (d >= 0 && d < static_cast<int>(u.size())) ? u[d] : Complex{};
  };
  return (1.0 - s) * node(e) + s * node(e + 1);
}

inline Complex p1_slope(const std::vector<Complex>& u, int e, double h) {
  return (p1_value(u, e, 1.0) - p1_value(u, e, 0.0)) / h;
}

// Composite Boole rule (exact for degree 5 on each panel group) with `sub`
// panels per element, sub a multiple of 4, of f(x, u(x), u'(x)).
template <class F>
double integrate_p1(double a, double h, int elements, const std::vector<Complex>& u, F f,
                    int sub = 16) {
  static constexpr double w[4] = {14.0, 32.0, 12.0, 32.0};
  double total = 0.0;
  const double dh = h / sub;
  for (int e = 0; e < elements; ++e) {
    const Complex du = p1_slope(u, e, h);
    const double x0 = a + e * h;
    double acc = 0.0;
    for (int q = 0; q <= sub; ++q) {
      const double wq = (q == 0 || q == sub) ? 7.0 : w[q % 4];
      const double s = static_cast<double>(q) / sub;
      acc += wq * f(x0 + s * h, p1_value(u, e, s), du);
    }
    total += acc * 2.0 * dh / 45.0;
  }
  return total;
}

// Same rule for a plain function of the element index and local coordinate.
template <class F>
double integrate_elements(double h, int elements, F f, int sub = 16) {
  static constexpr double w[4] = {14.0, 32.0, 12.0, 32.0};
  double total = 0.0;
  for (int e = 0; e < elements; ++e) {
    double acc = 0.0;
    for (int q = 0; q <= sub; ++q) {
      const double wq = (q == 0 || q == sub) ? 7.0 : w[q % 4];
      acc += wq * f(e, static_cast<double>(q) / sub);
    }
    total += acc * 2.0 * h / sub / 45.0;
  }
  return total;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  Complex complex() { return {uniform(), uniform()}; }
  std::vector<Complex> cvector(std::size_t n) {
    std::vector<Complex> v(n);
    for (auto& x : v) x = complex();
    return v;
  }
  std::vector<double> rvector(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform();
    return v;
  }
};

inline double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<Complex>& a) {
  double m = 0.0;
  for (const auto& x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace oracle
