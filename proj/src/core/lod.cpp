#include "core/lod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>

namespace gpelod::lod {

using fem::GridHierarchy;
using fem::Level;
using linalg::SparseMatrix;
using linalg::Triplet;

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

// Element matrix of a(., .) on fine element e, row-major 2x2.
std::array<double, 4> local_a(const GridHierarchy& grid,
                              const fem::Potential& v1, int e) {
  const double h = grid.fine_h();
  std::array<double, 4> m = {1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h};
  if (v1.is_zero()) return m;
  const auto& rule = fem::gauss4();
  const double x0 = grid.node_x(Level::fine, e);
  for (int q = 0; q < 4; ++q) {
    const double s = rule.points[q];
    const double w = rule.weights[q] * h * v1(x0 + s * h);
    m[0] += w * (1.0 - s) * (1.0 - s);
    m[1] += w * (1.0 - s) * s;
    m[2] += w * s * (1.0 - s);
    m[3] += w * s * s;
  }
  return m;
}

// Value of the coarse hat at coarse node `node` on fine node `p`.
double hat_value(const GridHierarchy& grid, int node, int p) {
  const int m = grid.fine_per_coarse();
  const int dist = std::abs(p - node * m);
  return dist >= m ? 0.0 : 1.0 - static_cast<double>(dist) / m;
}

// Symmetric positive definite tridiagonal matrix, factored once and solved
// for several right-hand sides.
class TridiagonalSpd {
 public:
  TridiagonalSpd(RVector diag, RVector off)
      : diag_(std::move(diag)), off_(std::move(off)) {
    const std::size_t n = diag_.size();
    for (std::size_t i = 1; i < n; ++i) {
      if (diag_[i - 1] <= 0.0) throw SingularMatrix("patch operator not SPD");
      const double l = off_[i - 1] / diag_[i - 1];
      diag_[i] -= l * off_[i - 1];
      off_[i - 1] = l;  // reuse as multiplier, original kept in upper_
    }
    if (n > 0 && diag_[n - 1] <= 0.0) throw SingularMatrix("patch operator not SPD");
  }

  // Original off-diagonal is needed for the backward sweep; store it.
  void set_upper(RVector upper) { upper_ = std::move(upper); }

  void solve(std::span<double> b) const {
    const std::size_t n = diag_.size();
    for (std::size_t i = 1; i < n; ++i) b[i] -= off_[i - 1] * b[i - 1];
    b[n - 1] /= diag_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      b[i] = (b[i] - upper_[i] * b[i + 1]) / diag_[i];
    }
  }

 private:
  RVector diag_;
  RVector off_;
  RVector upper_;
};

// Extracts the three diagonals of a real tridiagonal CSR matrix.
struct Tridiagonal {
  RVector lower;  // lower[i] = m(i + 1, i)
  RVector diag;
  RVector upper;  // upper[i] = m(i, i + 1)

  explicit Tridiagonal(const SparseMatrix& m)
      : lower(m.rows() > 0 ? m.rows() - 1 : 0, 0.0),
        diag(m.rows(), 0.0),
        upper(m.rows() > 0 ? m.rows() - 1 : 0, 0.0) {
    const auto rp = m.row_ptr();
    const auto ci = m.col_index();
    const auto v = m.values();
    for (int r = 0; r < m.rows(); ++r) {
      for (int p = rp[r]; p < rp[r + 1]; ++p) {
        const int c = ci[p];
        if (c == r) {
          diag[r] = v[p].real();
        } else if (c == r + 1) {
          upper[r] = v[p].real();
        } else if (c == r - 1) {
          lower[c] = v[p].real();
        } else {
          throw InvalidArgument("expected a tridiagonal fine matrix");
        }
      }
    }
  }

  // y = T x for x supported on [x.offset, x.end()); y covers one more DOF on
  // each side, clipped to [0, n).
  LocalVector apply(const LocalVector& x) const {
    const int n = static_cast<int>(diag.size());
    const int begin = std::max(0, x.offset - 1);
    const int end = std::min(n, x.end() + 1);
    LocalVector y{begin, RVector(end - begin, 0.0)};
    auto xv = [&x](int d) {
      const int l = d - x.offset;
      return (l >= 0 && l < static_cast<int>(x.values.size())) ? x.values[l] : 0.0;
    };
    for (int d = begin; d < end; ++d) {
      double acc = diag[d] * xv(d);
      if (d > 0) acc += lower[d - 1] * xv(d - 1);
      if (d + 1 < n) acc += upper[d] * xv(d + 1);
      y.values[d - begin] = acc;
    }
    return y;
  }
};

double dot_overlap(const LocalVector& a, const LocalVector& b) {
  const int lo = std::max(a.offset, b.offset);
  const int hi = std::min(a.end(), b.end());
  double acc = 0.0;
  for (int d = lo; d < hi; ++d) {
    acc += a.values[d - a.offset] * b.values[d - b.offset];
  }
  return acc;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t potential_hash(const GridHierarchy& grid, const fem::Potential& v) {
  std::uint64_t h = 1469598103934665603ULL;
  fem::for_each_quadrature_point(grid, Level::fine,
                                 [&](int, double x, double, double, double) {
                                   const double val = v(x);
                                   h = fnv1a(&val, sizeof val, h);
                                 });
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

Patch build_patch(const GridHierarchy& grid, int element, int layers) {
  const int nc = grid.coarse_elements();
  if (element < 0 || element >= nc) {
    throw InvalidArgument("build_patch: element index out of range");
  }
  if (layers < 0) throw InvalidArgument("build_patch: negative layer count");
  const int m = grid.fine_per_coarse();
  Patch p;
  p.element = element;
  p.layers = layers;
  p.first_element = std::max(0, element - layers);
  p.last_element = std::min(nc - 1, element + layers);
  p.fine_dof_begin = p.first_element * m;
  p.fine_dof_end = (p.last_element + 1) * m - 1;
  const int first_node = std::max(1, p.first_element);
  const int last_node = std::min(nc - 1, p.last_element + 1);
  p.coarse_dof_begin = first_node - 1;
  p.coarse_dof_end = last_node;
  return p;
}

LocalVector solve_corrector(const GridHierarchy& grid, const fem::Potential& v1,
                            int coarse_dof, int element, int layers) {
  const int node = coarse_dof + 1;
  if (coarse_dof < 0 || coarse_dof >= grid.dofs(Level::coarse)) {
    throw InvalidArgument("solve_corrector: coarse DOF out of range");
  }
  if (element != node - 1 && element != node) {
    throw InvalidArgument("solve_corrector: element outside the hat support");
  }
  const Patch patch = build_patch(grid, element, layers);
  const int np = patch.fine_dof_count();
  LocalVector q{patch.fine_dof_begin, RVector(np, 0.0)};
  // With r = 0 every patch function is coarse, so the detail space is {0}.
  if (grid.refinement() == 0) return q;

  const int m = grid.fine_per_coarse();
  const double h = grid.fine_h();
  const int fb = patch.fine_dof_begin;

  RVector diag(np, 0.0);
  RVector off(np > 0 ? np - 1 : 0, 0.0);
  RVector rhs(np, 0.0);
  const int e_begin = patch.first_element * m;
  const int e_end = (patch.last_element + 1) * m;
  const int k_begin = element * m;
  const int k_end = (element + 1) * m;
  for (int e = e_begin; e < e_end; ++e) {
    const auto a = local_a(grid, v1, e);
    const int l0 = e - 1 - fb;  // local index of node e
    const int l1 = e - fb;      // local index of node e + 1
    const bool in0 = l0 >= 0 && l0 < np;
    const bool in1 = l1 >= 0 && l1 < np;
    if (in0) diag[l0] += a[0];
    if (in1) diag[l1] += a[3];
    if (in0 && in1) off[l0] += a[1];
    if (e >= k_begin && e < k_end) {
      const double h0 = hat_value(grid, node, e);
      const double h1 = hat_value(grid, node, e + 1);
      if (in0) rhs[l0] -= a[0] * h0 + a[1] * h1;
      if (in1) rhs[l1] -= a[2] * h0 + a[3] * h1;
    }
  }
  TridiagonalSpd solver(diag, off);
  solver.set_upper(off);

  // Constraint rows <phi_H,c, phi_d> = (M_fine hat_c)_d.
  const int nc = patch.coarse_dof_end - patch.coarse_dof_begin;
  std::vector<RVector> c_rows(nc, RVector(np, 0.0));
  for (int c = 0; c < nc; ++c) {
    const int cnode = patch.coarse_dof_begin + c + 1;
    for (int l = 0; l < np; ++l) {
      const int p = fb + l + 1;
      c_rows[c][l] = h / 6.0 * hat_value(grid, cnode, p - 1) +
                     2.0 * h / 3.0 * hat_value(grid, cnode, p) +
                     h / 6.0 * hat_value(grid, cnode, p + 1);
    }
  }

  // Schur complement of the saddle-point system [A C^T; C 0].
  std::vector<RVector> y(nc);
  for (int c = 0; c < nc; ++c) {
    y[c] = c_rows[c];
    solver.solve(y[c]);
  }
  RVector z = rhs;
  solver.solve(z);
  RVector schur(static_cast<std::size_t>(nc) * nc);
  RVector lambda(nc);
  for (int r = 0; r < nc; ++r) {
    for (int c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (int l = 0; l < np; ++l) acc += c_rows[r][l] * y[c][l];
      schur[static_cast<std::size_t>(r) * nc + c] = acc;
    }
    double acc = 0.0;
    for (int l = 0; l < np; ++l) acc += c_rows[r][l] * z[l];
    lambda[r] = acc;
  }
  try {
    const auto lu = linalg::RealLuFactorization::factor_dense(nc, schur);
    lu.solve_in_place(lambda);
  } catch (const SingularMatrix& e) {
    throw SingularMatrix(std::string("degenerate corrector patch: ") + e.what());
  }
  for (int l = 0; l < np; ++l) {
    double acc = z[l];
    for (int c = 0; c < nc; ++c) acc -= y[c][l] * lambda[c];
    q.values[l] = acc;
  }
  return q;
}

int default_layers(double coarse_h) {
  return std::max(1, static_cast<int>(std::ceil(2.0 * std::abs(std::log2(coarse_h)))));
}

// ---------------------------------------------------------------------------
// LodSpace

LodSpace::LodSpace(const GridHierarchy& grid, const fem::PotentialSplit& split,
                   const LodOptions& options)
    : grid_(grid),
      split_(split),
      potential_(split.total()),
      layers_(options.layers > 0 ? options.layers : default_layers(grid.coarse_h())),
      omega_tolerance_(options.omega_tolerance) {
  if (grid.refinement() < 1) {
    throw InvalidArgument("LOD space requires refinement >= 1");
  }
  if (options.layers < 0) throw InvalidArgument("LOD space: negative layers");
  if (options.omega_tolerance < 0.0) {
    throw InvalidArgument("LOD space: negative tensor tolerance");
  }
  fem::for_each_quadrature_point(grid, Level::fine,
                                 [&](int, double x, double, double, double) {
                                   if (split.v1(x) < 0.0) {
                                     throw InvalidArgument("v1 must be nonnegative");
                                   }
                                 });
  auto t0 = std::chrono::steady_clock::now();
  build_basis(options.allow_translation_reuse);
  timings_.basis_ms = elapsed_ms(t0);
  t0 = std::chrono::steady_clock::now();
  assemble_matrices();
  timings_.matrices_ms = elapsed_ms(t0);
  t0 = std::chrono::steady_clock::now();
  assemble_omega();
  timings_.omega_ms = elapsed_ms(t0);
}

LodSpace::LodSpace(const GridHierarchy& grid, const fem::PotentialSplit& split,
                   int layers, double omega_tolerance,
                   std::vector<LodBasisFunction> basis,
                   std::vector<linalg::TensorEntry> omega_entries)
    : grid_(grid),
      split_(split),
      potential_(split.total()),
      layers_(layers),
      omega_tolerance_(omega_tolerance),
      basis_(std::move(basis)) {
  if (static_cast<int>(basis_.size()) != grid.dofs(Level::coarse)) {
    throw InvalidArgument("LOD space: basis count does not match the grid");
  }
  assemble_matrices();
  omega_ = linalg::SparseTensor3(dim(), std::move(omega_entries), omega_tolerance_);
}

void LodSpace::build_basis(bool allow_reuse) {
  const int nc = grid_.coarse_elements();
  const int m = grid_.fine_per_coarse();
  used_reuse_ = allow_reuse && split_.v1.translation_invariant();

  // Geometry key of a local problem modulo translation by whole coarse cells.
  using Key = std::tuple<int, int, bool, bool, int>;
  std::map<Key, RVector> cache;

  auto corrector = [&](int coarse_dof, int element) -> LocalVector {
    if (!used_reuse_) {
      ++corrector_solves_;
      return solve_corrector(grid_, split_.v1, coarse_dof, element, layers_);
    }
    const Patch p = build_patch(grid_, element, layers_);
    const Key key{element - p.first_element, p.last_element - element,
                  p.first_element == 0, p.last_element == nc - 1,
                  coarse_dof + 1 - element};
    auto it = cache.find(key);
    if (it == cache.end()) {
      ++corrector_solves_;
      auto q = solve_corrector(grid_, split_.v1, coarse_dof, element, layers_);
      it = cache.emplace(key, std::move(q.values)).first;
    }
    return LocalVector{p.fine_dof_begin, it->second};
  };

  basis_.clear();
  basis_.reserve(grid_.dofs(Level::coarse));
  for (int cd = 0; cd < grid_.dofs(Level::coarse); ++cd) {
    const int node = cd + 1;
    const LocalVector left = corrector(cd, node - 1);
    const LocalVector right = corrector(cd, node);
    const int hat_begin = (node - 1) * m;
    const int hat_end = (node + 1) * m - 1;
    const int begin = std::min({left.offset, right.offset, hat_begin});
    const int end = std::max({left.end(), right.end(), hat_end});
    LodBasisFunction phi{cd, LocalVector{begin, RVector(end - begin, 0.0)}};
    for (int d = hat_begin; d < hat_end; ++d) {
      phi.coefficients.values[d - begin] = hat_value(grid_, node, d + 1);
    }
    for (const LocalVector* q : {&left, &right}) {
      for (std::size_t l = 0; l < q->values.size(); ++l) {
        phi.coefficients.values[q->offset + l - begin] += q->values[l];
      }
    }
    basis_.push_back(std::move(phi));
  }
}

void LodSpace::assemble_matrices() {
  const auto fine_mass = fem::assemble_p1_matrix(grid_, Level::fine, fem::MatrixKind::mass);
  const auto fine_stiff =
      fem::assemble_p1_matrix(grid_, Level::fine, fem::MatrixKind::stiffness);
  fine_a_ = fem::assemble_a_matrix(grid_, Level::fine, split_.v1);
  const Tridiagonal tm(fine_mass);
  const Tridiagonal ta(fine_stiff);
  const Tridiagonal tfa(fine_a_);
  std::optional<Tridiagonal> tv;
  if (!potential_.is_zero()) {
    tv.emplace(fem::assemble_p1_matrix(grid_, Level::fine,
                                       fem::MatrixKind::weighted_mass, &potential_));
  }

  const int n = dim();
  std::vector<Triplet> tri_m, tri_a, tri_v, tri_g;
  for (int i = 0; i < n; ++i) {
    const auto& phi_i = basis_[i].coefficients;
    const LocalVector ym = tm.apply(phi_i);
    const LocalVector ya = ta.apply(phi_i);
    const LocalVector yg = tfa.apply(phi_i);
    const LocalVector yv = tv ? tv->apply(phi_i) : LocalVector{};
    for (int j = i; j < n; ++j) {
      const auto& phi_j = basis_[j].coefficients;
      if (phi_j.offset >= ym.end()) break;
      const double vm = dot_overlap(ym, phi_j);
      const double va = dot_overlap(ya, phi_j);
      const double vg = dot_overlap(yg, phi_j);
      const double vv = tv ? dot_overlap(yv, phi_j) : 0.0;
      auto push = [i, j](std::vector<Triplet>& t, double v) {
        if (v == 0.0) return;
        t.push_back({i, j, v});
        if (i != j) t.push_back({j, i, v});
      };
      push(tri_m, vm);
      push(tri_a, va);
      push(tri_g, vg);
      push(tri_v, vv);
    }
  }
  mass_ = SparseMatrix::from_triplets(n, n, std::move(tri_m), true);
  stiffness_ = SparseMatrix::from_triplets(n, n, std::move(tri_a), true);
  potential_mass_ = SparseMatrix::from_triplets(n, n, std::move(tri_v), true);
  a_gram_ = SparseMatrix::from_triplets(n, n, std::move(tri_g), true);
  mass_lu_ = linalg::lu_factor_real(mass_);
  a_gram_lu_ = linalg::lu_factor_real(a_gram_);
}

void LodSpace::assemble_omega() {
  const int n = dim();
  const auto& rule = fem::gauss4();
  const double h = grid_.fine_h();
  // Element range [eb, ee] on which each basis function is nonzero, and its
  // values at the four Gauss points of every element in that range.
  std::vector<int> eb(n), ee(n);
  std::vector<RVector> qv(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = basis_[i].coefficients;
    eb[i] = c.offset;
    ee[i] = c.end();
    const int count = ee[i] - eb[i] + 1;
    qv[i].assign(static_cast<std::size_t>(count) * 4, 0.0);
    for (int e = eb[i]; e <= ee[i]; ++e) {
      const int l0 = e - 1 - c.offset;
      const int l1 = e - c.offset;
      const double v0 =
          (l0 >= 0 && l0 < static_cast<int>(c.values.size())) ? c.values[l0] : 0.0;
      const double v1 =
          (l1 >= 0 && l1 < static_cast<int>(c.values.size())) ? c.values[l1] : 0.0;
      for (int q = 0; q < 4; ++q) {
        const double s = rule.points[q];
        qv[i][static_cast<std::size_t>(e - eb[i]) * 4 + q] = (1.0 - s) * v0 + s * v1;
      }
    }
  }
  std::array<double, 4> wq{};
  for (int q = 0; q < 4; ++q) wq[q] = rule.weights[q] * h;

  std::vector<linalg::TensorEntry> entries;
  RVector prod;
  int i_start = 0;
  for (int k = 0; k < n; ++k) {
    for (int j = k; j < n && eb[j] <= ee[k]; ++j) {
      const int lo = std::max(eb[k], eb[j]);
      const int hi = std::min(ee[k], ee[j]);
      if (lo > hi) continue;
      prod.assign(static_cast<std::size_t>(hi - lo + 1) * 4, 0.0);
      for (int e = lo; e <= hi; ++e) {
        const double* pk = &qv[k][static_cast<std::size_t>(e - eb[k]) * 4];
        const double* pj = &qv[j][static_cast<std::size_t>(e - eb[j]) * 4];
        double* out = &prod[static_cast<std::size_t>(e - lo) * 4];
        for (int q = 0; q < 4; ++q) out[q] = wq[q] * pk[q] * pj[q];
      }
      while (i_start < n && ee[i_start] < eb[k]) ++i_start;
      for (int i = i_start; i < n && eb[i] <= hi; ++i) {
        const int a = std::max(lo, eb[i]);
        const int b = std::min(hi, ee[i]);
        if (a > b) continue;
        double acc = 0.0;
        const double* pi = &qv[i][static_cast<std::size_t>(a - eb[i]) * 4];
        const double* pp = &prod[static_cast<std::size_t>(a - lo) * 4];
        const std::size_t len = static_cast<std::size_t>(b - a + 1) * 4;
        for (std::size_t t = 0; t < len; ++t) acc += pp[t] * pi[t];
        if (acc == 0.0) continue;
        if (omega_tolerance_ > 0.0 && std::abs(acc) <= omega_tolerance_) continue;
        entries.push_back({k, j, i, acc});
      }
    }
  }
  omega_ = linalg::SparseTensor3(n, std::move(entries), omega_tolerance_);
}

CVector LodSpace::expand(std::span<const Complex> coefficients) const {
  if (coefficients.size() != basis_.size()) {
    throw DimensionMismatch("expand: coefficient length mismatch");
  }
  CVector fine(grid_.dofs(Level::fine));
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const Complex c = coefficients[i];
    if (c == Complex{}) continue;
    const auto& phi = basis_[i].coefficients;
    for (std::size_t l = 0; l < phi.values.size(); ++l) {
      fine[phi.offset + l] += c * phi.values[l];
    }
  }
  return fine;
}

CVector LodSpace::restrict_load(std::span<const Complex> fine_load) const {
  if (fine_load.size() != static_cast<std::size_t>(grid_.dofs(Level::fine))) {
    throw DimensionMismatch("restrict_load: fine vector length mismatch");
  }
  CVector out(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const auto& phi = basis_[i].coefficients;
    Complex acc{};
    for (std::size_t l = 0; l < phi.values.size(); ++l) {
      acc += phi.values[l] * fine_load[phi.offset + l];
    }
    out[i] = acc;
  }
  return out;
}

LodSpace build_lod_space(const GridHierarchy& grid, const fem::PotentialSplit& split,
                         const LodOptions& options) {
  return LodSpace(grid, split, options);
}

CVector ritz_project(const LodSpace& space, const fem::FeFunction& u0) {
  if (u0.level != Level::fine ||
      u0.values.size() != static_cast<std::size_t>(space.grid().dofs(Level::fine))) {
    throw DimensionMismatch("ritz_project expects a fine-level function");
  }
  const CVector au = space.fine_a_matrix() * u0.values;
  CVector rhs = space.restrict_load(au);
  RVector re(rhs.size()), im(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    re[i] = rhs[i].real();
    im[i] = rhs[i].imag();
  }
  space.a_gram_lu_.solve_in_place(re);
  space.a_gram_lu_.solve_in_place(im);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = {re[i], im[i]};
  return rhs;
}

RVector lod_l2_project_density(const LodSpace& space,
                               std::span<const Complex> coefficients) {
  RVector b = space.omega().density_load(coefficients);
  space.mass_lu().solve_in_place(b);
  return b;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

constexpr char kMagic[8] = {'G', 'P', 'E', 'L', 'O', 'D', 'C', 'A'};
constexpr std::uint32_t kCacheVersion = 1;

struct CacheKey {
  double a;
  double b;
  std::int32_t coarse_elements;
  std::int32_t refinement;
  std::int32_t layers;
  double tolerance;
  std::uint64_t v1_hash;

  bool operator==(const CacheKey&) const = default;
};

CacheKey make_key(const GridHierarchy& grid, const fem::Potential& v1,
                  int layers, double tolerance) {
  return {grid.a(), grid.b(), grid.coarse_elements(), grid.refinement(),
          layers, tolerance, potential_hash(grid, v1)};
}

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("LOD cache: truncated file");
  return v;
}

void put_key(std::ostream& os, const CacheKey& k) {
  put(os, k.a);
  put(os, k.b);
  put(os, k.coarse_elements);
  put(os, k.refinement);
  put(os, k.layers);
  put(os, k.tolerance);
  put(os, k.v1_hash);
}

CacheKey get_key(std::istream& is) {
  CacheKey k{};
  k.a = get<double>(is);
  k.b = get<double>(is);
  k.coarse_elements = get<std::int32_t>(is);
  k.refinement = get<std::int32_t>(is);
  k.layers = get<std::int32_t>(is);
  k.tolerance = get<double>(is);
  k.v1_hash = get<std::uint64_t>(is);
  return k;
}

}  // namespace

void save_lod_cache(const LodSpace& space, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("LOD cache: cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put(os, kCacheVersion);
  put_key(os, make_key(space.grid(), space.split().v1, space.layers(),
                       space.omega_tolerance()));
  put(os, static_cast<std::uint32_t>(space.basis().size()));
  for (const auto& phi : space.basis()) {
    put(os, static_cast<std::int32_t>(phi.coarse_dof));
    put(os, static_cast<std::int32_t>(phi.coefficients.offset));
    put(os, static_cast<std::uint32_t>(phi.coefficients.values.size()));
    os.write(reinterpret_cast<const char*>(phi.coefficients.values.data()),
             static_cast<std::streamsize>(phi.coefficients.values.size() * sizeof(double)));
  }
  const auto entries = space.omega().entries();
  put(os, static_cast<std::uint64_t>(entries.size()));
  for (const auto& e : entries) {
    put(os, static_cast<std::int32_t>(e.k));
    put(os, static_cast<std::int32_t>(e.j));
    put(os, static_cast<std::int32_t>(e.i));
    put(os, e.value);
  }
  if (!os) throw IoError("LOD cache: write failed for " + path);
}

std::optional<LodSpace> load_lod_cache(const std::string& path,
                                       const GridHierarchy& grid,
                                       const fem::PotentialSplit& split,
                                       const LodOptions& options) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("LOD cache: bad magic in " + path);
  }
  if (get<std::uint32_t>(is) != kCacheVersion) {
    throw IoError("LOD cache: unsupported version in " + path);
  }
  const int layers =
      options.layers > 0 ? options.layers : default_layers(grid.coarse_h());
  const CacheKey stored = get_key(is);
  if (!(stored == make_key(grid, split.v1, layers, options.omega_tolerance))) {
    return std::nullopt;
  }
  const auto count = get<std::uint32_t>(is);
  std::vector<LodBasisFunction> basis(count);
  for (auto& phi : basis) {
    phi.coarse_dof = get<std::int32_t>(is);
    phi.coefficients.offset = get<std::int32_t>(is);
    const auto len = get<std::uint32_t>(is);
    phi.coefficients.values.resize(len);
    is.read(reinterpret_cast<char*>(phi.coefficients.values.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    if (!is) throw IoError("LOD cache: truncated basis data");
  }
  const auto n_entries = get<std::uint64_t>(is);
  std::vector<linalg::TensorEntry> entries(n_entries);
  for (auto& e : entries) {
    e.k = get<std::int32_t>(is);
    e.j = get<std::int32_t>(is);
    e.i = get<std::int32_t>(is);
    e.value = get<double>(is);
  }
  return LodSpace(grid, split, layers, options.omega_tolerance, std::move(basis),
                  std::move(entries));
}

}  // namespace gpelod::lod
