#pragma once

// Localized orthogonal decomposition (LOD) space on a nested 1D grid.
//
// Every interior coarse hat phi_H is corrected by element-local fine-scale
// functions Q_{K,l}(phi_H) that live in the kernel of the coarse L2
// projection restricted to the patch S_l(K). The corrected hats span the
// space in which the time stepping happens.

#include <optional>
#include <string>

#include "core/linalg.hpp"
#include "core/mesh_fem.hpp"

namespace gpelod::lod {

// Coarse element K with l layers of neighbours, clipped at the domain ends.
struct Patch {
  int element = 0;
  int layers = 0;
  int first_element = 0;     // inclusive
  int last_element = 0;      // inclusive
  int fine_dof_begin = 0;    // interior fine DOFs of the patch, [begin, end)
  int fine_dof_end = 0;
  int coarse_dof_begin = 0;  // coarse hats whose support meets the patch
  int coarse_dof_end = 0;

  int fine_dof_count() const noexcept { return fine_dof_end - fine_dof_begin; }
  int element_count() const noexcept { return last_element - first_element + 1; }
};

Patch build_patch(const fem::GridHierarchy& grid, int element, int layers);

// Real vector supported on the fine DOF window [offset, offset + size).
struct LocalVector {
  int offset = 0;
  RVector values;

  int end() const noexcept { return offset + static_cast<int>(values.size()); }
};

// Q_{K,l}(phi_H) for the hat at `coarse_dof`, with K one of the two coarse
// elements adjacent to it. a(., .) uses v1 only. The kernel constraint is
// enforced through one Lagrange multiplier per coarse hat meeting the patch.
// Throws SingularMatrix for a degenerate saddle-point system.
LocalVector solve_corrector(const fem::GridHierarchy& grid,
                            const fem::Potential& v1, int coarse_dof,
                            int element, int layers);

struct LodBasisFunction {
  int coarse_dof = 0;
  LocalVector coefficients;  // phi_H + sum_K Q_{K,l}(phi_H) on the fine grid
};

struct LodOptions {
  int layers = 0;                  // 0 selects default_layers(H)
  double omega_tolerance = 1e-12;
  bool allow_translation_reuse = true;
};

// ceil(2 |log2 H|), at least 1.
int default_layers(double coarse_h);

struct BuildTimings {
  double basis_ms = 0.0;
  double matrices_ms = 0.0;
  double omega_ms = 0.0;
};

class LodSpace {
 public:
  LodSpace(const fem::GridHierarchy& grid, const fem::PotentialSplit& split,
           const LodOptions& options);

  const fem::GridHierarchy& grid() const noexcept { return grid_; }
  const fem::PotentialSplit& split() const noexcept { return split_; }
  const fem::Potential& potential() const noexcept { return potential_; }
  int dim() const noexcept { return static_cast<int>(basis_.size()); }
  int layers() const noexcept { return layers_; }
  double omega_tolerance() const noexcept { return omega_tolerance_; }
  bool used_translation_reuse() const noexcept { return used_reuse_; }
  int corrector_solves() const noexcept { return corrector_solves_; }
  const BuildTimings& timings() const noexcept { return timings_; }

  const std::vector<LodBasisFunction>& basis() const noexcept { return basis_; }

  // LOD-coordinate matrices: M_ij = <phi_j, phi_i>, A_ij = <phi_j', phi_i'>,
  // the full-potential mass M_V and the a(., .) Gram matrix A + M_{V1}.
  const linalg::SparseMatrix& mass() const noexcept { return mass_; }
  const linalg::SparseMatrix& stiffness() const noexcept { return stiffness_; }
  const linalg::SparseMatrix& potential_mass() const noexcept { return potential_mass_; }
  const linalg::SparseMatrix& a_gram() const noexcept { return a_gram_; }
  const linalg::SparseTensor3& omega() const noexcept { return omega_; }
  const linalg::RealLuFactorization& mass_lu() const noexcept { return mass_lu_; }

  // Fine-grid a(., .) matrix used by the Ritz projection.
  const linalg::SparseMatrix& fine_a_matrix() const noexcept { return fine_a_; }

  // Phi U: fine-grid interior-DOF coefficients of the LOD function.
  CVector expand(std::span<const Complex> coefficients) const;
  // Phi^T g for a fine-grid load vector g.
  CVector restrict_load(std::span<const Complex> fine_load) const;

  // Rebuilds the space from stored basis functions and tensor entries
  // (cache loading); matrices are reassembled.
  LodSpace(const fem::GridHierarchy& grid, const fem::PotentialSplit& split,
           int layers, double omega_tolerance,
           std::vector<LodBasisFunction> basis,
           std::vector<linalg::TensorEntry> omega_entries);

 private:
  void build_basis(bool allow_reuse);
  void assemble_matrices();
  void assemble_omega();

  fem::GridHierarchy grid_;
  fem::PotentialSplit split_;
  fem::Potential potential_;
  int layers_ = 0;
  double omega_tolerance_ = 0.0;
  bool used_reuse_ = false;
  int corrector_solves_ = 0;
  BuildTimings timings_;

  std::vector<LodBasisFunction> basis_;
  linalg::SparseMatrix mass_;
  linalg::SparseMatrix stiffness_;
  linalg::SparseMatrix potential_mass_;
  linalg::SparseMatrix a_gram_;
  linalg::SparseMatrix fine_a_;
  linalg::SparseTensor3 omega_;
  linalg::RealLuFactorization mass_lu_;
  linalg::RealLuFactorization a_gram_lu_;

  friend CVector ritz_project(const LodSpace&, const fem::FeFunction&);
};

LodSpace build_lod_space(const fem::GridHierarchy& grid,
                         const fem::PotentialSplit& split,
                         const LodOptions& options);

// a(u0_LOD, v) = a(u0, v) for all v in the LOD space.
CVector ritz_project(const LodSpace& space, const fem::FeFunction& u0);

// Coefficients of P_LOD(|u|^2) for u = Phi U.
RVector lod_l2_project_density(const LodSpace& space,
                               std::span<const Complex> coefficients);

// Versioned binary cache of basis and tensor. The key (domain, coarse count,
// refinement, layers, v1 samples hash, tolerance) is checked on load.
void save_lod_cache(const LodSpace& space, const std::string& path);
std::optional<LodSpace> load_lod_cache(const std::string& path,
                                       const fem::GridHierarchy& grid,
                                       const fem::PotentialSplit& split,
                                       const LodOptions& options);

}  // namespace gpelod::lod
