#include "incomp/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include "incomp/errors.hpp"

namespace incomp {

namespace {

// Grid level with a one-cell ghost ring held at zero.
struct Level {
  int nx = 0, ny = 0;
  double h = 0.0;
  int stride = 0;
  std::vector<double> u, f, lb, r;

  Level(int nx_, int ny_, double h_) : nx(nx_), ny(ny_), h(h_), stride(nx_ + 2) {
    const std::size_t n = static_cast<std::size_t>(nx + 2) * (ny + 2);
    u.assign(n, 0.0);
    f.assign(n, 0.0);
    lb.assign(n, 0.0);
    r.assign(n, 0.0);
  }
  std::size_t at(int i, int j) const {
    return static_cast<std::size_t>(i + 1) + static_cast<std::size_t>(j + 1) * stride;
  }
};

void projected_sweep(Level& L, double omega) {
  const double h2 = L.h * L.h;
  const int s = L.stride;
  double* u = L.u.data();
  const double* f = L.f.data();
  const double* lb = L.lb.data();
  for (int color = 0; color < 2; ++color) {
    for (int j = 0; j < L.ny; ++j) {
      const int i0 = (j + color) & 1;
      std::size_t k = L.at(i0, j);
      for (int i = i0; i < L.nx; i += 2, k += 2) {
        const double gs = 0.25 * (h2 * f[k] + u[k - 1] + u[k + 1] + u[k - s] + u[k + s]);
        const double v = u[k] + omega * (gs - u[k]);
        u[k] = v > lb[k] ? v : lb[k];
      }
    }
  }
}

void compute_residual(Level& L) {
  const double inv_h2 = 1.0 / (L.h * L.h);
  const int s = L.stride;
  for (int j = 0; j < L.ny; ++j) {
    std::size_t k = L.at(0, j);
    for (int i = 0; i < L.nx; ++i, ++k) {
      const double au = (4.0 * L.u[k] - L.u[k - 1] - L.u[k + 1] - L.u[k - s] - L.u[k + s]) * inv_h2;
      L.r[k] = L.f[k] - au;
    }
  }
}

// max |min(u - lb, Au - f)|; expects r = f - Au to be current.
double complementarity(const Level& L) {
  double worst = 0.0;
  for (int j = 0; j < L.ny; ++j) {
    std::size_t k = L.at(0, j);
    for (int i = 0; i < L.nx; ++i, ++k) {
      const double c = std::min(L.u[k] - L.lb[k], -L.r[k]);
      worst = std::max(worst, std::abs(c));
    }
  }
  return worst;
}

void restrict_to(const Level& fine, Level& coarse) {
  for (int J = 0; J < coarse.ny; ++J) {
    for (int I = 0; I < coarse.nx; ++I) {
      double rs = 0.0;
      double lbmax = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) {
          const std::size_t k = fine.at(2 * I + a, 2 * J + b);
          rs += fine.r[k];
          lbmax = std::max(lbmax, fine.lb[k] - fine.u[k]);
        }
      const std::size_t kc = coarse.at(I, J);
      coarse.f[kc] = 0.25 * rs;
      coarse.lb[kc] = lbmax;
      coarse.u[kc] = 0.0;
    }
  }
}

void prolong_add(const Level& coarse, Level& fine) {
  for (int j = 0; j < fine.ny; ++j) {
    const int J = j / 2;
    const int dj = (j & 1) ? 1 : -1;
    for (int i = 0; i < fine.nx; ++i) {
      const int I = i / 2;
      const int di = (i & 1) ? 1 : -1;
      // Ghost ring supplies zeros outside the coarse grid.
      const double e = (9.0 * coarse.u[coarse.at(I, J)] + 3.0 * coarse.u[coarse.at(I + di, J)] +
                        3.0 * coarse.u[coarse.at(I, J + dj)] +
                        coarse.u[coarse.at(I + di, J + dj)]) /
                       16.0;
      const std::size_t k = fine.at(i, j);
      fine.u[k] = std::max(fine.lb[k], fine.u[k] + e);
    }
  }
}

double optimal_omega(int nx, int ny) {
  const double rho_jacobi = 0.5 * (std::cos(std::numbers::pi / (nx + 1)) + std::cos(std::numbers::pi / (ny + 1)));
  return 2.0 / (1.0 + std::sqrt(1.0 - rho_jacobi * rho_jacobi));
}

void solve_coarsest(Level& L) {
  const double omega = optimal_omega(L.nx, L.ny);
  for (int it = 0; it < 400; ++it) projected_sweep(L, omega);
}

class Hierarchy {
 public:
  explicit Hierarchy(std::unique_ptr<Level> finest) {
    levels_.push_back(std::move(finest));
    while (true) {
      const Level& L = *levels_.back();
      if ((L.nx % 2) || (L.ny % 2) || L.nx < 8 || L.ny < 8) break;
      levels_.push_back(std::make_unique<Level>(L.nx / 2, L.ny / 2, 2.0 * L.h));
    }
  }
  Level& fine() { return *levels_.front(); }
  std::size_t depth() const { return levels_.size(); }

  void vcycle(std::size_t l = 0) {
    Level& L = *levels_[l];
    if (l + 1 == levels_.size()) {
      solve_coarsest(L);
      return;
    }
    for (int s = 0; s < kPre; ++s) projected_sweep(L, 1.0);
    compute_residual(L);
    Level& C = *levels_[l + 1];
    restrict_to(L, C);
    vcycle(l + 1);
    prolong_add(C, L);
    for (int s = 0; s < kPost; ++s) projected_sweep(L, 1.0);
  }

  static constexpr int kPre = 2;
  static constexpr int kPost = 2;

 private:
  std::vector<std::unique_ptr<Level>> levels_;
};

void load(Level& L, const Eigen::ArrayXXd& f, const Eigen::ArrayXXd& init) {
  for (int j = 0; j < L.ny; ++j)
    for (int i = 0; i < L.nx; ++i) {
      const std::size_t k = L.at(i, j);
      L.f[k] = f(i, j);
      L.u[k] = std::max(0.0, init(i, j));
      L.lb[k] = 0.0;
    }
}

Eigen::ArrayXXd unload(const Level& L) {
  Eigen::ArrayXXd out(L.nx, L.ny);
  for (int j = 0; j < L.ny; ++j)
    for (int i = 0; i < L.nx; ++i) out(i, j) = L.u[L.at(i, j)];
  return out;
}

void run_sor(Level& L, double omega, long max_sweeps, double tol, ObstacleResult& res) {
  constexpr int kCheckEvery = 10;
  while (res.sweeps < max_sweeps) {
    for (int s = 0; s < kCheckEvery; ++s) projected_sweep(L, omega);
    res.sweeps += kCheckEvery;
    compute_residual(L);
    res.residual = complementarity(L);
    if (res.residual <= tol) {
      res.converged = true;
      return;
    }
  }
}

}  // namespace

ObstacleResult solve_obstacle(const Eigen::ArrayXXd& f, double h, const Eigen::ArrayXXd& init,
                              const ObstacleOptions& opts) {
  const int nx = static_cast<int>(f.rows());
  const int ny = static_cast<int>(f.cols());
  if (nx < 2 || ny < 2) throw InvalidArgument("obstacle: grid too small");
  if (init.rows() != nx || init.cols() != ny) throw InvalidArgument("obstacle: init has wrong shape");
  if (!(h > 0.0)) throw InvalidArgument("obstacle: spacing must be positive");
  if (!(opts.omega > 0.0 && opts.omega < 2.0)) throw InvalidArgument("obstacle: omega must lie in (0, 2)");
  const long max_sweeps = opts.max_sweeps > 0 ? opts.max_sweeps : 200L * std::max(nx, ny);

  ObstacleResult res;
  auto finest = std::make_unique<Level>(nx, ny, h);
  load(*finest, f, init);
  compute_residual(*finest);
  res.residual = complementarity(*finest);
  if (res.residual <= opts.tol) {
    res.converged = true;
    res.u = unload(*finest);
    return res;
  }

  if (opts.method == ObstacleMethod::ProjectedSor) {
    run_sor(*finest, opts.omega, max_sweeps, opts.tol, res);
    res.u = unload(*finest);
    return res;
  }

  Hierarchy mg(std::move(finest));
  Level& L = mg.fine();
  int stalled = 0;
  while (res.sweeps < max_sweeps) {
    const double before = res.residual;
    mg.vcycle();
    ++res.cycles;
    res.sweeps += Hierarchy::kPre + Hierarchy::kPost;
    compute_residual(L);
    res.residual = complementarity(L);
    if (res.residual <= opts.tol) {
      res.converged = true;
      break;
    }
    stalled = res.residual > 0.9 * before ? stalled + 1 : 0;
    if (stalled >= 8 || mg.depth() == 1) {
      res.used_fallback = true;
      run_sor(L, optimal_omega(nx, ny), max_sweeps, opts.tol, res);
      break;
    }
  }
  res.u = unload(L);
  return res;
}

Eigen::ArrayXXd apply_negative_laplacian(const Eigen::ArrayXXd& u, double h) {
  const Eigen::Index nx = u.rows(), ny = u.cols();
  Eigen::ArrayXXd out(nx, ny);
  const double inv_h2 = 1.0 / (h * h);
  auto at = [&](Eigen::Index i, Eigen::Index j) {
    return (i < 0 || j < 0 || i >= nx || j >= ny) ? 0.0 : u(i, j);
  };
  for (Eigen::Index j = 0; j < ny; ++j)
    for (Eigen::Index i = 0; i < nx; ++i)
      out(i, j) = (4.0 * u(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) * inv_h2;
  return out;
}

Eigen::ArrayXXd complementarity_defect(const Eigen::ArrayXXd& u, const Eigen::ArrayXXd& f,
                                       double h) {
  const Eigen::ArrayXXd slack = apply_negative_laplacian(u, h) - f;
  return u.min(slack).abs();
}

}  // namespace incomp
