#pragma once

#include <filesystem>
#include <string>

#include "mpexp/integrators.hpp"

namespace mpexp {

enum class BoundaryCondition { neumann, dirichlet };

BoundaryCondition boundary_by_name(const std::string& name);
const char* to_string(BoundaryCondition bc);

/// eps * Laplacian(u) - alpha (u_x + u_y) + rho u (u - 1/2)(1 - u) on the unit
/// square, second-order central differences on an nx x nx grid including the
/// boundary. Node (i, j) at (i dx, j dx) is unknown i + nx j.
///
/// Neumann closes the stencil with mirror ghost nodes. Dirichlet holds the
/// boundary at 0.3 (its rows of f and J are zero).
struct AdrProblem {
  double epsilon = 0.05;
  double alpha = -1.0;
  double rho = 1.0;
  Index nx = 21;
  BoundaryCondition bc = BoundaryCondition::neumann;

  Index n() const { return nx * nx; }
  double dx() const { return 1.0 / static_cast<double>(nx - 1); }
  bool on_boundary(Index k) const;
  void validate() const;
  std::string describe() const;
};

/// Linear (diffusion + advection) part of the Jacobian.
CsrMatrix adr_linear_part(const AdrProblem& p);
Vector adr_rhs(const AdrProblem& p, const Vector& u);
CsrMatrix adr_jacobian(const AdrProblem& p, const Vector& u);
Vector adr_initial(const AdrProblem& p);

/// OdeSystem view; the linear part is built once and shared.
OdeSystem adr_system(const AdrProblem& p);

struct ReferenceOptions {
  int steps = 100000;
  double krylov_tol = 1e-13;
  /// Combine `steps` and 2 * `steps` runs as (4 u_2S - u_S) / 3.
  bool richardson = true;
  /// Empty disables the cache.
  std::filesystem::path cache_dir;
};

/// Full-precision exponential Rosenbrock-Euler solution at tf. Cached as a
/// binary file keyed by a hash of the problem, span and options; an unreadable
/// or mismatched cache file is recomputed and overwritten.
Vector reference_solution(const AdrProblem& p, double t0, double tf, const ReferenceOptions& opts = {});

std::filesystem::path reference_cache_file(const AdrProblem& p, double t0, double tf, const ReferenceOptions& opts);

}  // namespace mpexp
