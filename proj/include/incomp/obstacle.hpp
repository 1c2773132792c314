#pragma once

// Discrete obstacle problem on a cell-centred grid:
//
//   minimise 1/2 u^T A u - f^T u  subject to  u >= 0,
//
// with A the 5-point negative Laplacian and u = 0 outside the grid. The optimality
// conditions are the complementarity system u >= 0, Au - f >= 0, u (Au - f) = 0.

#include <Eigen/Core>

namespace incomp {

enum class ObstacleMethod {
  /// Projected red-black SOR on the fine grid only.
  ProjectedSor,
  /// V-cycles with projected Gauss-Seidel smoothing and restricted obstacles on coarse
  /// grids; falls back to projected SOR if the cycles stall.
  ProjectedMultigrid,
};

struct ObstacleOptions {
  ObstacleMethod method = ObstacleMethod::ProjectedMultigrid;
  /// Stop when the complementarity residual drops below this.
  double tol = 1e-8;
  /// Relaxation factor of the single-grid method.
  double omega = 1.9;
  /// Cap on fine-grid sweeps; <= 0 means 200 * max(nx, ny).
  long max_sweeps = 0;
};

struct ObstacleResult {
  Eigen::ArrayXXd u;
  double residual = 0.0;
  long sweeps = 0;
  int cycles = 0;
  bool converged = false;
  bool used_fallback = false;
};

/// Solves the obstacle problem for right-hand side `f` (nx x ny) starting from `init`
/// (projected onto u >= 0 first). Never throws on non-convergence; inspect `converged`.
ObstacleResult solve_obstacle(const Eigen::ArrayXXd& f, double h, const Eigen::ArrayXXd& init,
                              const ObstacleOptions& opts = {});

/// Cellwise |min(u, Au - f)|.
Eigen::ArrayXXd complementarity_defect(const Eigen::ArrayXXd& u, const Eigen::ArrayXXd& f,
                                       double h);

/// Au with zero exterior values.
Eigen::ArrayXXd apply_negative_laplacian(const Eigen::ArrayXXd& u, double h);

}  // namespace incomp
