#pragma once

// Crank-Nicolson time stepping for i u_t = -u'' + V u + beta |u|^2 u.
//
// Each step solves L U^{n+1} = L* U^n - (i tau / 4) N(U^n, U^{n+1}) with
// L = M + (i tau / 2)(A + M_V), L* = M - (i tau / 2)(A + M_V). N is the
// nonlinear vector of the chosen scheme; the implicit equation is solved by
// Picard iteration with a single LU of L, or by Newton on the fine grid.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "core/lod.hpp"
#include "core/mesh_fem.hpp"

namespace gpelod::dyn {

enum class Scheme {
  modified_lod,   // projected density P_LOD(|u^{n+1}|^2 + |u^n|^2), tensor form
  classical_lod,  // exact cubic term, assembled on the fine grid
  classical_fem,  // exact cubic term on the fine P1 space
};

struct SolverOptions {
  double tolerance = 1e-10;  // increment bound in the discrete L2 norm
  int max_iterations = 200;
  bool newton = false;       // classical_fem only
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
};

class Stepper {
 public:
  static Stepper modified(std::shared_ptr<const lod::LodSpace> space, double beta,
                          double tau, const SolverOptions& options = {});
  static Stepper classical_lod(std::shared_ptr<const lod::LodSpace> space,
                               double beta, double tau,
                               const SolverOptions& options = {});
  static Stepper classical_fem(const fem::GridHierarchy& grid,
                               const fem::Potential& v, double beta, double tau,
                               const SolverOptions& options = {});

  Scheme scheme() const noexcept { return scheme_; }
  int dim() const noexcept { return mass_.rows(); }
  double tau() const noexcept { return tau_; }
  double beta() const noexcept { return beta_; }
  const SolverOptions& options() const noexcept { return options_; }
  const std::shared_ptr<const lod::LodSpace>& space() const noexcept { return space_; }
  const fem::GridHierarchy& grid() const noexcept { return grid_; }

  // Refactorizes L when tau changes. Negative tau steps backwards in time.
  void set_tau(double tau);

  const CVector& state() const noexcept { return u_; }
  void set_state(CVector u, double t = 0.0);
  long long step_index() const noexcept { return n_; }
  double time() const noexcept { return t_; }
  const StepStats& last_stats() const noexcept { return stats_; }

  // Advances the internal state by one step; throws NotConverged and leaves
  // the state unchanged on failure.
  StepStats step();
  // One step from `u` without touching the internal state.
  CVector advance(std::span<const Complex> u, StepStats* stats = nullptr) const;

  // Nonlinear vector N(a, b) of the scheme, beta included.
  CVector nonlinear_term(std::span<const Complex> a, std::span<const Complex> b) const;

  double mass_norm(std::span<const Complex> v) const;

  const linalg::SparseMatrix& mass_matrix() const noexcept { return mass_; }
  const linalg::SparseMatrix& hamiltonian_matrix() const noexcept { return hamiltonian_; }

 private:
  Stepper(Scheme scheme, std::shared_ptr<const lod::LodSpace> space,
          fem::GridHierarchy grid, linalg::SparseMatrix mass,
          linalg::SparseMatrix hamiltonian, double beta, double tau,
          const SolverOptions& options);

  CVector modified_term(const RVector& load_a, std::span<const Complex> a,
                        std::span<const Complex> b) const;
  CVector advance_newton(std::span<const Complex> u, StepStats* stats) const;

  Scheme scheme_;
  std::shared_ptr<const lod::LodSpace> space_;
  fem::GridHierarchy grid_;
  linalg::SparseMatrix mass_;
  linalg::SparseMatrix hamiltonian_;  // A + M_V
  double beta_;
  double tau_ = 0.0;
  SolverOptions options_;
  linalg::LuFactorization l_lu_;
  linalg::SparseMatrix l_adjoint_;    // L*
  CVector u_;
  long long n_ = 0;
  double t_ = 0.0;
  StepStats stats_;
};

// observer(step index, time, state); called at step 0, every `stride` steps
// and after the last step. stride 0 means start and end only.
using Observer = std::function<void(long long, double, std::span<const Complex>)>;

struct Trajectory {
  long long steps_done = 0;
  std::vector<int> iterations;
  std::optional<std::string> failure;  // set when a step did not converge
};

Trajectory evolve(Stepper& stepper, long long steps, long long stride,
                  const Observer& observer = {});

}  // namespace gpelod::dyn
