#include "incomp/tf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "incomp/errors.hpp"

namespace incomp {

double screening_radius() { return 1.0 / std::sqrt(std::numbers::pi); }

// --- NucleusSet ---------------------------------------------------------------------------

NucleusSet::NucleusSet(Points positions) : positions_(std::move(positions)) {
  if (positions_.rows() < 1) throw InvalidArgument("nucleus set needs at least one nucleus");
  if (!positions_.allFinite()) throw InvalidArgument("nucleus positions must be finite");
  if (positions_.rows() > 1 && !(min_separation() > 0.0))
    throw InvalidArgument("coincident nuclei");
}

Point NucleusSet::centroid() const { return positions_.colwise().mean().transpose(); }

double NucleusSet::spread() const {
  const Point c = centroid();
  double r = 0.0;
  for (Eigen::Index k = 0; k < size(); ++k) r = std::max(r, ((*this)[k] - c).norm());
  return r;
}

double NucleusSet::min_separation() const {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < size(); ++a)
    for (Eigen::Index b = a + 1; b < size(); ++b) d = std::min(d, ((*this)[a] - (*this)[b]).norm());
  return d;
}

NucleusSet NucleusSet::subset(std::span<const int> indices) const {
  Points p(indices.size(), 2);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= size()) throw InvalidArgument("subset index out of range");
    p.row(k) = positions_.row(indices[k]);
  }
  return NucleusSet(std::move(p));
}

// --- closed forms and bounds --------------------------------------------------------------

double SingleNucleusProfile::at_distance(double r) const {
  if (r >= radius) return 0.0;
  const double pi = std::numbers::pi;
  return -std::log(r) + 0.5 * pi * r * r - 0.5 * std::log(pi) - 0.5;
}

double SingleNucleusProfile::radial_derivative(double r) const {
  if (r >= radius) return 0.0;
  return -1.0 / r + std::numbers::pi * r;
}

SingleNucleusProfile single_nucleus_solution(const Point& x0) {
  return SingleNucleusProfile{x0, screening_radius()};
}

double support_radius_bound(const NucleusSet& nuclei, double R, std::span<const double> phi_on_circle) {
  if (!(R > nuclei.spread())) throw InvalidArgument("support_radius_bound: R must enclose all nuclei");
  double sup = 0.0;
  for (double v : phi_on_circle) sup = std::max(sup, v);
  return R + std::sqrt(sup / std::numbers::pi);
}

double support_radius_bound(const NucleusSet& nuclei, double R) {
  const double spread = nuclei.spread();
  if (!(R > spread)) throw InvalidArgument("support_radius_bound: R must enclose all nuclei");
  const double K = static_cast<double>(nuclei.size());
  // On |x - c| = R: Phi <= K log(R + S) - K log(R - spread) when Sigma lies in D(c, S),
  // and S <= R + sqrt(M_R). Iterating from above converges to the largest fixed point.
  auto g = [&](double S) {
    const double m = (K / std::numbers::pi) * std::log((R + S) / (R - spread));
    return R + std::sqrt(std::max(0.0, m));
  };
  double S = R + 10.0 * (K + 1.0) + 10.0 / (R - spread);
  for (int it = 0; it < 10000; ++it) {
    const double next = g(S);
    if (std::abs(next - S) <= 1e-12 * S) return next;
    S = next;
  }
  return S;
}

double support_radius_bound(const NucleusSet& nuclei) {
  const double spread = nuclei.spread();
  const double unit = screening_radius();
  double best = std::numeric_limits<double>::infinity();
  for (double f : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0})
    best = std::min(best, support_radius_bound(nuclei, spread + f * unit));
  return best;
}

std::vector<double> circle_samples(const ScalarField& field, const Point& center, double R, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    out[k] = field.interpolate(center + R * Point(std::cos(t), std::sin(t)));
  }
  return out;
}

// --- solver -------------------------------------------------------------------------------

namespace {

Eigen::ArrayXXd initial_guess(const NucleusSet& nuclei, const GridSpec& grid, TfInit init) {
  Eigen::ArrayXXd u = Eigen::ArrayXXd::Zero(grid.nx, grid.ny);
  if (init == TfInit::Zero) return u;
  const double R = screening_radius();
  for (Eigen::Index k = 0; k < nuclei.size(); ++k) {
    const auto prof = single_nucleus_solution(nuclei[k]);
    const Point lo = prof.center - Point(R, R);
    const int i0 = std::max(0, static_cast<int>(std::floor((lo.x() - grid.origin.x()) / grid.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((lo.y() - grid.origin.y()) / grid.h)));
    const int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((lo.x() + 2 * R - grid.origin.x()) / grid.h)));
    const int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((lo.y() + 2 * R - grid.origin.y()) / grid.h)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        // Cap the log singularity at half a cell.
        const double r = std::max((grid.cell_center(i, j) - prof.center).norm(), 0.5 * grid.h);
        u(i, j) += prof.at_distance(r);
      }
  }
  return u;
}

GridSpec box_around(const Point& c, double half, double h) {
  return aligned_grid(c - Point(half, half), c + Point(half, half), h, 16);
}

}  // namespace

TfSolution solve_tf_on_grid(const NucleusSet& nuclei, const GridSpec& grid, const TfOptions& opts) {
  grid.validate();
  const ScalarField rho = deposit_charges(nuclei.charges(), grid);
  const Eigen::ArrayXXd f = 2.0 * std::numbers::pi * (rho.values() - 1.0);
  const ObstacleResult res = solve_obstacle(f, grid.h, initial_guess(nuclei, grid, opts.init), opts.solver);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "TF solve did not converge: residual " << res.residual << " after " << res.sweeps
        << " sweeps";
    throw ConvergenceError(msg.str());
  }
  TfSolution sol;
  sol.box = grid;
  sol.phi = ScalarField(grid, res.u);
  sol.sigma = ScalarField(grid, (res.u > opts.activation_threshold).cast<double>());
  sol.region_area = sol.sigma.values().sum() * grid.cell_area();
  sol.residual = res.residual;
  sol.sweeps = res.sweeps;
  return sol;
}

bool region_touches_boundary(const TfSolution& sol, int band) {
  const int nx = sol.box.nx, ny = sol.box.ny;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool edge = i < band || j < band || i >= nx - band || j >= ny - band;
      if (edge && sol.in_region(i, j)) return true;
    }
  return false;
}

TfSolution solve_tf(const NucleusSet& nuclei, double h, double pad, const TfOptions& opts) {
  if (!(h > 0.0)) throw InvalidArgument("solve_tf: h must be positive");
  if (!(pad >= 0.0)) throw InvalidArgument("solve_tf: pad must be nonnegative");
  const Point c = nuclei.centroid();
  const double spread = nuclei.spread();

  // A coarse solve in the a priori box gives circle samples for the sharper bound.
  double half = support_radius_bound(nuclei);
  const double h_coarse = std::max(h, half / 48.0);
  if (h_coarse > 2.0 * h) {
    TfOptions coarse_opts = opts;
    const TfSolution coarse = solve_tf_on_grid(nuclei, box_around(c, half + 2 * h_coarse, h_coarse), coarse_opts);
    double best = half;
    for (double f : {0.1, 0.25, 0.5, 1.0}) {
      const double R = spread + f * screening_radius();
      best = std::min(best, support_radius_bound(nuclei, R, circle_samples(coarse.phi, c, R)));
    }
    half = best + 2.0 * h_coarse;
  }
  half += pad;

  for (int attempt = 0;; ++attempt) {
    TfSolution sol = solve_tf_on_grid(nuclei, box_around(c, half, h), opts);
    sol.enlargements = attempt;
    if (!region_touches_boundary(sol, 2)) return sol;
    if (attempt >= opts.max_enlargements)
      throw ConvergenceError("solve_tf: screening region still touches the box after enlargement");
    half *= opts.growth;
  }
}

// --- diagnostics --------------------------------------------------------------------------

ScalarField near_field_corrected_phi(const TfSolution& sol, const NucleusSet& nuclei, int window) {
  ScalarField out = sol.phi;
  for (Eigen::Index k = 0; k < nuclei.size(); ++k)
    out.values() -= lattice_log_correction(nuclei[k], sol.box, window).values();
  return out;
}

std::vector<std::pair<int, int>> nucleus_cells(const NucleusSet& nuclei, const GridSpec& grid) {
  std::vector<std::pair<int, int>> cells;
  for (Eigen::Index k = 0; k < nuclei.size(); ++k) {
    const Point p = nuclei[k];
    const double u = (p.x() - grid.origin.x()) / grid.h - 0.5;
    const double v = (p.y() - grid.origin.y()) / grid.h - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, grid.nx - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(v)), 0, grid.ny - 2);
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) cells.emplace_back(i0 + a, j0 + b);
  }
  return cells;
}

ScalarField tf_defect_field(const TfSolution& sol, const NucleusSet& nuclei) {
  const GridSpec& g = sol.box;
  const ScalarField rho = deposit_charges(nuclei.charges(), g);
  const Eigen::ArrayXXd f = 2.0 * std::numbers::pi * (rho.values() - 1.0);
  const Eigen::ArrayXXd slack = apply_negative_laplacian(sol.phi.values(), g.h) - f;
  ScalarField defect(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (sol.in_region(i, j)) {
        defect(i, j) = std::abs(slack(i, j));
      } else {
        defect(i, j) = std::max(std::abs(sol.phi(i, j)), std::max(0.0, -slack(i, j)));
      }
    }
  for (const auto& [i, j] : nucleus_cells(nuclei, g)) defect(i, j) = 0.0;
  return defect;
}

std::pair<Eigen::ArrayXXi, int> label_components(const TfSolution& sol) {
  const int nx = sol.box.nx, ny = sol.box.ny;
  Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(nx, ny, -1);
  int count = 0;
  std::queue<std::pair<int, int>> q;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!sol.in_region(i, j) || label(i, j) >= 0) continue;
      label(i, j) = count;
      q.emplace(i, j);
      while (!q.empty()) {
        const auto [a, b] = q.front();
        q.pop();
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int x = a + di[d], y = b + dj[d];
          if (x < 0 || y < 0 || x >= nx || y >= ny) continue;
          if (!sol.in_region(x, y) || label(x, y) >= 0) continue;
          label(x, y) = count;
          q.emplace(x, y);
        }
      }
      ++count;
    }
  return {label, count};
}

TfDiagnostics verify_tf_solution(const TfSolution& sol, const NucleusSet& nuclei,
                                 const TfCheckTolerances& tol) {
  TfDiagnostics d;
  const GridSpec& g = sol.box;
  d.min_phi = sol.phi.values().minCoeff();
  const double K = static_cast<double>(nuclei.size());
  d.area_defect = std::abs(sol.region_area - K) / K;
  d.residual = tf_defect_field(sol, nuclei).values().maxCoeff();

  d.nuclei_inside = true;
  const auto [labels, count] = label_components(sol);
  d.component_count = count;
  std::vector<bool> has_nucleus(count, false);
  for (Eigen::Index k = 0; k < nuclei.size(); ++k) {
    const Point p = nuclei[k];
    if (!g.contains(p)) {
      d.nuclei_inside = false;
      continue;
    }
    const int i = std::clamp(static_cast<int>((p.x() - g.origin.x()) / g.h), 0, g.nx - 1);
    const int j = std::clamp(static_cast<int>((p.y() - g.origin.y()) / g.h), 0, g.ny - 1);
    if (!sol.in_region(i, j)) {
      d.nuclei_inside = false;
      continue;
    }
    has_nucleus[labels(i, j)] = true;
  }
  d.components_without_nucleus = static_cast<int>(std::count(has_nucleus.begin(), has_nucleus.end(), false));

  d.max_phi_outside = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!sol.in_region(i, j)) d.max_phi_outside = std::max(d.max_phi_outside, sol.phi(i, j));

  d.phi_ok = d.min_phi >= -tol.phi;
  d.area_ok = d.area_defect <= tol.area;
  d.residual_ok = d.residual <= tol.residual;
  d.components_ok = d.components_without_nucleus == 0;
  d.outside_ok = d.max_phi_outside <= tol.phi;
  return d;
}

MonotonicityReport tf_monotonicity_check(const NucleusSet& small, const NucleusSet& large, double h,
                                         double pad, const TfOptions& opts, double phi_tol) {
  for (Eigen::Index a = 0; a < small.size(); ++a) {
    bool found = false;
    for (Eigen::Index b = 0; b < large.size() && !found; ++b)
      found = (small[a] - large[b]).norm() <= 1e-12 * std::max(1.0, small[a].norm());
    if (!found) throw InvalidArgument("tf_monotonicity_check: small set is not a subset of large set");
  }
  const TfSolution big = solve_tf(large, h, pad, opts);
  const TfSolution sub = solve_tf_on_grid(small, big.box, opts);

  MonotonicityReport rep;
  const GridSpec& g = big.box;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      rep.max_phi_excess = std::max(rep.max_phi_excess, sub.phi(i, j) - big.phi(i, j));
      if (!sub.in_region(i, j) || big.in_region(i, j)) continue;
      bool near = false;
      for (int dj = -1; dj <= 1 && !near; ++dj)
        for (int di = -1; di <= 1 && !near; ++di) {
          const int x = i + di, y = j + dj;
          near = x >= 0 && y >= 0 && x < g.nx && y < g.ny && big.in_region(x, y);
        }
      if (!near) ++rep.mask_cells_outside;
    }
  rep.pass = rep.mask_cells_outside == 0 && rep.max_phi_excess <= phi_tol;
  return rep;
}

}  // namespace incomp
